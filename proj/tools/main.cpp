#include <string>
#include <vector>

#include "lorabandit/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lorabandit::cli::cli_main(args);
}
