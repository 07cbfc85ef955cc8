#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "lorabandit/errors.hpp"
#include "lorabandit/rng.hpp"

namespace lorabandit {

enum class PolicyKind { MixMab, Exp3LoRaMab, LegacyRandom };

inline const char* to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::MixMab: return "mixmab";
    case PolicyKind::Exp3LoRaMab: return "loramab";
    case PolicyKind::LegacyRandom: return "legacy";
  }
  throw ConfigError("unknown policy kind");
}

inline PolicyKind parse_policy(const std::string& name) {
  if (name == "mixmab") return PolicyKind::MixMab;
  if (name == "loramab") return PolicyKind::Exp3LoRaMab;
  if (name == "legacy") return PolicyKind::LegacyRandom;
  throw ConfigError("unknown policy '" + name +
                    "' (expected mixmab, loramab or legacy)");
}

// EXP3 exploration/learning rate for K arms over a horizon of T pulls:
//   gamma = min{1, sqrt(K ln K / ((e-1) T))}
// `euler` defaults to the two-decimal 2.71 used when deriving the published
// results; pass std::numbers::e for the textbook constant.
inline double exp3_learning_rate(int num_actions, long long horizon_iterations,
                                 double euler = 2.71) {
  if (num_actions < 1) throw ConfigError("learning rate requires K >= 1");
  if (horizon_iterations < 1) throw ConfigError("learning rate requires T >= 1");
  if (!(euler > 1.0)) throw ConfigError("learning rate requires e > 1");
  double k = static_cast<double>(num_actions);
  double t = static_cast<double>(horizon_iterations);
  return std::min(1.0, std::sqrt(k * std::log(k) / ((euler - 1.0) * t)));
}

struct BanditParams {
  double gamma = 0.1;      // exploration/learning rate, in [0, 1]
  int explore_sweeps = 5;  // l_exp: minimum plays per arm before PDF selection
  int reset_base = 100;    // l_ee: count threshold base of the dynamic reset
  // Base of the exponential weight update. The probability-mixing gamma above
  // may be derived with e ~= 2.71, but the weight update itself uses exp().
  double weight_exp_base = std::numbers::e;
};

// Weights are capped here so they cannot overflow to inf at long horizons.
// The cap keeps weights >= 1 and non-decreasing, and is only reachable by an
// arm that already dominates the probability mass.
inline constexpr double kWeightCap = 1e300;

// Draws an index proportionally to the (non-negative) masses in `pdf`.
// If no mass is positive the draw falls back to uniform over all indices.
inline int sample_probability_index(std::span<const double> pdf, Rng& rng) {
  if (pdf.empty()) throw ConfigError("cannot sample from an empty pdf");
  double total = 0.0;
  for (double p : pdf) {
    if (p < 0.0) throw ConfigError("pdf entries must be non-negative");
    total += p;
  }
  if (total <= 0.0) return rng.below(static_cast<int>(pdf.size()));
  double u = rng.uniform() * total;
  double cum = 0.0;
  int last_positive = 0;
  for (int i = 0; i < static_cast<int>(pdf.size()); ++i) {
    if (pdf[i] <= 0.0) continue;
    last_positive = i;
    cum += pdf[i];
    if (u <= cum) return i;  // smallest index wins exact boundary ties
  }
  return last_positive;  // u landed past cum due to rounding
}

// Interface the simulator drives once per uplink: select an arm, transmit,
// then feed back whether the gateway acknowledged it.
class UplinkPolicy {
 public:
  virtual ~UplinkPolicy() = default;
  virtual int select(Rng& rng) = 0;
  virtual void update(int arm, bool acked) = 0;
  virtual PolicyKind kind() const = 0;
};

// MIX-MAB: EXP3's exponential weighting hybridized with successive
// elimination. Pre-processing plays arms round-robin until each has at least
// explore_sweeps+1 plays; after that arms are drawn from the probability
// distribution. Every update recomputes the distribution from the weights,
// rewards sharpen the played arm's weight, persistently weak arms are
// eliminated, and once the played arm's count exceeds reset_base * alpha all
// counts reset (re-entering round-robin from arm 0) while weights and
// probabilities carry over.
class MixMabPolicy final : public UplinkPolicy {
 public:
  MixMabPolicy(int num_actions, BanditParams params)
      : k_(num_actions), params_(params) {
    if (k_ < 1) throw ConfigError("policy requires at least one action");
    if (!(params_.gamma >= 0.0 && params_.gamma <= 1.0))
      throw ConfigError("gamma must be in [0,1]");
    if (params_.explore_sweeps < 0)
      throw ConfigError("explore_sweeps must be >= 0");
    if (params_.reset_base < 1) throw ConfigError("reset_base must be >= 1");
    if (!(params_.weight_exp_base > 1.0))
      throw ConfigError("weight_exp_base must be > 1");
    weight_.assign(k_, 1.0);
    prob_.assign(k_, 0.0);
    count_.assign(k_, 0);
    removed_.assign(k_, 0);
  }

  int select(Rng& rng) override {
    if (exploring()) {
      int arm = cursor_;
      cursor_ = (cursor_ + 1) % k_;
      return arm;
    }
    return sample_probability_index(prob_, rng);
  }

  void update(int arm, bool acked) override {
    if (arm < 0 || arm >= k_) throw SimError("arm index out of range");
    double wsum = std::accumulate(weight_.begin(), weight_.end(), 0.0);
    // (a) refresh probabilities for the arms still in play
    for (int j = 0; j < k_; ++j)
      prob_[j] = removed_[j] ? 0.0
                             : (1.0 - params_.gamma) * weight_[j] / wsum +
                                   params_.gamma / k_;
    // (b) normalize over the surviving support
    double psum = std::accumulate(prob_.begin(), prob_.end(), 0.0);
    if (psum > 0.0)
      for (double& p : prob_) p /= psum;
    // (c) reward sharpens the played arm's weight
    if (acked && prob_[arm] > 0.0) {
      double x = params_.gamma / (k_ * prob_[arm]);
      double factor = params_.weight_exp_base == std::numbers::e
                          ? std::exp(x)
                          : std::pow(params_.weight_exp_base, x);
      weight_[arm] = std::min(weight_[arm] * factor, kWeightCap);
    }
    // (d) count the play
    ++count_[arm];
    // (e) eliminate if the arm has been tried enough and still lags
    if (count_[arm] > params_.explore_sweeps && !removed_[arm]) {
      double pmax = *std::max_element(prob_.begin(), prob_.end());
      if (prob_[arm] < 0.5 * pmax) {
        prob_[arm] = 0.0;
        removed_[arm] = 1;
      }
    }
    // (f) dynamic reset: wipe counts and eliminations, keep the learning
    if (count_[arm] > static_cast<long long>(alpha_) * params_.reset_base) {
      std::fill(count_.begin(), count_.end(), 0);
      std::fill(removed_.begin(), removed_.end(), 0);
      cursor_ = 0;
      ++alpha_;
    }
    ++iteration_;
  }

  PolicyKind kind() const override { return PolicyKind::MixMab; }

  bool exploring() const {
    return *std::min_element(count_.begin(), count_.end()) <=
           params_.explore_sweeps;
  }
  std::span<const double> probabilities() const { return prob_; }
  std::span<const double> weights() const { return weight_; }
  std::span<const long long> counts() const { return count_; }
  bool removed(int arm) const { return removed_.at(arm) != 0; }
  int reset_multiplier() const { return alpha_; }
  long long iteration() const { return iteration_; }
  int num_actions() const { return k_; }

 private:
  int k_;
  BanditParams params_;
  std::vector<double> weight_;
  std::vector<double> prob_;
  std::vector<long long> count_;
  std::vector<char> removed_;
  int cursor_ = 0;
  int alpha_ = 1;
  long long iteration_ = 0;
};

// Plain EXP3 (the LoRa-MAB baseline): uniform initial distribution,
// probability-proportional selection from the first packet, exponential
// weight updates, no elimination and no reset.
class Exp3Policy final : public UplinkPolicy {
 public:
  Exp3Policy(int num_actions, double gamma,
             double weight_exp_base = std::numbers::e)
      : k_(num_actions), gamma_(gamma), exp_base_(weight_exp_base) {
    if (k_ < 1) throw ConfigError("policy requires at least one action");
    if (!(gamma_ >= 0.0 && gamma_ <= 1.0))
      throw ConfigError("gamma must be in [0,1]");
    if (!(exp_base_ > 1.0)) throw ConfigError("weight_exp_base must be > 1");
    weight_.assign(k_, 1.0);
    prob_.assign(k_, 1.0 / k_);
  }

  int select(Rng& rng) override {
    return sample_probability_index(prob_, rng);
  }

  void update(int arm, bool acked) override {
    if (arm < 0 || arm >= k_) throw SimError("arm index out of range");
    double wsum = std::accumulate(weight_.begin(), weight_.end(), 0.0);
    for (int j = 0; j < k_; ++j)
      prob_[j] = (1.0 - gamma_) * weight_[j] / wsum + gamma_ / k_;
    double psum = std::accumulate(prob_.begin(), prob_.end(), 0.0);
    for (double& p : prob_) p /= psum;
    if (acked && prob_[arm] > 0.0) {
      double x = gamma_ / (k_ * prob_[arm]);
      double factor = exp_base_ == std::numbers::e ? std::exp(x)
                                                   : std::pow(exp_base_, x);
      weight_[arm] = std::min(weight_[arm] * factor, kWeightCap);
    }
    ++iteration_;
  }

  PolicyKind kind() const override { return PolicyKind::Exp3LoRaMab; }

  std::span<const double> probabilities() const { return prob_; }
  std::span<const double> weights() const { return weight_; }
  long long iteration() const { return iteration_; }
  int num_actions() const { return k_; }

 private:
  int k_;
  double gamma_;
  double exp_base_;
  std::vector<double> weight_;
  std::vector<double> prob_;
  long long iteration_ = 0;
};

// Legacy LoRa: uniform random pick every packet, feedback ignored.
class LegacyRandomPolicy final : public UplinkPolicy {
 public:
  explicit LegacyRandomPolicy(int num_actions) : k_(num_actions) {
    if (k_ < 1) throw ConfigError("policy requires at least one action");
  }
  int select(Rng& rng) override { return rng.below(k_); }
  void update(int, bool) override {}
  PolicyKind kind() const override { return PolicyKind::LegacyRandom; }
  int num_actions() const { return k_; }

 private:
  int k_;
};

inline std::unique_ptr<UplinkPolicy> make_policy(PolicyKind kind,
                                                 int num_actions,
                                                 const BanditParams& params) {
  switch (kind) {
    case PolicyKind::MixMab:
      return std::make_unique<MixMabPolicy>(num_actions, params);
    case PolicyKind::Exp3LoRaMab:
      return std::make_unique<Exp3Policy>(num_actions, params.gamma,
                                          params.weight_exp_base);
    case PolicyKind::LegacyRandom:
      return std::make_unique<LegacyRandomPolicy>(num_actions);
  }
  throw ConfigError("unknown policy kind");
}

}  // namespace lorabandit
