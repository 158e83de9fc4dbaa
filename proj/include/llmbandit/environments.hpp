#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "llmbandit/core.hpp"

namespace llmbandit {

enum class RewardKind { linear, square, sinusoidal, gp_sample };

const char* to_string(RewardKind kind);
RewardKind parse_reward_kind(const std::string& name);

struct RewardFunctionSpec {
  RewardKind kind = RewardKind::linear;
  FeatureVector theta;          // linear, square, sinusoidal
  double gp_lengthscale = 0.4;  // gp_sample
  std::uint64_t gp_seed = 0;
};

struct NoiseSpec {
  double variance = 0.02;
};

struct DuelingEnvSpec {
  RewardFunctionSpec latent_reward;
  double sharpness = 10.0;
};

/// Latent reward realized on a fixed arm set. GP samples are stored as a
/// table over the registered arms; the closed-form kinds evaluate anywhere.
class RewardFunction {
 public:
  RewardFunction(RewardFunctionSpec spec, const ArmSet& arms);

  const RewardFunctionSpec& spec() const { return spec_; }

  /// Exact value at x. Throws on dimension mismatch or an unregistered arm (gp_sample).
  double operator()(const FeatureVector& x) const;

  /// Values for every registered arm, in arm order.
  const Eigen::VectorXd& arm_values() const { return arm_values_; }
  double optimal_value() const { return arm_values_.maxCoeff(); }

 private:
  RewardFunctionSpec spec_;
  Eigen::MatrixXd registered_;
  Eigen::VectorXd arm_values_;
};

/// Closed-form evaluation of the linear, square and sinusoidal kinds.
double eval_reward(const RewardFunctionSpec& spec, const FeatureVector& x);

/// RBF Gram matrix exp(-|xi - xj|^2 / (2 l^2)) over the rows of `points`.
Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& points, double lengthscale);

/// One joint draw from a zero-mean GP prior over the arms. Jitter starts at
/// 1e-8 and grows x10 up to 1e-4 before giving up.
Eigen::VectorXd sample_gp_reward_table(const ArmSet& arms, double lengthscale, std::uint64_t seed);

double observe_reward(const RewardFunction& f, const NoiseSpec& noise, const FeatureVector& x, Rng& rng);

/// 1 / (1 + exp(-sharpness * (f1 - f2))), evaluated without overflow.
double btl_probability(double f1, double f2, double sharpness);

int sample_preference(const RewardFunction& f, double sharpness, const FeatureVector& x1,
                      const FeatureVector& x2, Rng& rng);

/// K arms with components i.i.d. Uniform[-1, 1].
ArmSet generate_arms(int num_arms, int dim, std::uint64_t seed);

/// Standard normal direction normalized to unit length.
FeatureVector generate_theta(int dim, std::uint64_t seed);

struct ContextualRecord {
  std::string title;
  std::string context_text;
  std::string correct_label;
};

struct ContextualDataset {
  std::vector<ContextualRecord> records;
  std::vector<std::string> arm_pool;
  std::vector<std::string> warnings;  // one per skipped malformed line
};

struct ContextualFilter {
  int max_context_words = 0;  // 0 disables the cap
  int max_context_chars = 0;
  int arm_pool_size = 10;      // used when `pool` is empty: most frequent labels
  std::vector<std::string> pool;
};

/// Reads line-delimited JSON records {"context": str, "label": str|int, "title"?: str}.
ContextualDataset load_contextual_dataset(const std::filesystem::path& path, const ContextualFilter& filter);

int count_words(const std::string& text);

}  // namespace llmbandit
