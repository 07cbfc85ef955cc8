#pragma once

#define LORABANDIT_VERSION_MAJOR 0
#define LORABANDIT_VERSION_MINOR 1
#define LORABANDIT_VERSION_PATCH 0

namespace lorabandit {

inline constexpr const char* version_string = "0.1.0";

}  // namespace lorabandit
