#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace llmbandit {

/// Random stream owned by a single run. libstdc++'s mt19937_64 and
/// distributions are deterministic for a given seed.
using Rng = std::mt19937_64;

/// Arm features. Length is the experiment's dimension d.
using FeatureVector = Eigen::VectorXd;

class BanditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Stateless 64-bit mixer (splitmix64 finalizer). A bijection on uint64.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent sub-stream identified by (seed, a, b).
std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

/// The K-arm pool. Row i of `features` is arm i; indices never change.
struct ArmSet {
  Eigen::MatrixXd features;
  std::vector<std::string> labels;  // optional, empty or size K

  ArmSet() = default;
  explicit ArmSet(Eigen::MatrixXd f, std::vector<std::string> l = {});

  int size() const { return static_cast<int>(features.rows()); }
  int dim() const { return static_cast<int>(features.cols()); }
  FeatureVector arm(int i) const { return features.row(i).transpose(); }
};

enum class HistoryKind { reward, loss, preference, text };

const char* to_string(HistoryKind kind);

struct RewardHistoryEntry {
  FeatureVector features;
  double observation = 0.0;  // reward, or negated reward for loss histories
};

struct PreferenceHistoryEntry {
  FeatureVector pair_features;
  int outcome = 0;  // 1 iff the first arm won
};

/// A (context, arm label, reward) example for text-feature tasks.
struct TextHistoryEntry {
  std::string title;
  std::string content;
  std::string label;
  double reward = 0.0;
};

using HistoryEntry = std::variant<RewardHistoryEntry, PreferenceHistoryEntry, TextHistoryEntry>;

/// Append-only interaction log. All entries match the kind fixed at construction.
class History {
 public:
  explicit History(HistoryKind kind) : kind_(kind) {}

  HistoryKind kind() const { return kind_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::vector<HistoryEntry>& entries() const { return entries_; }

  void append_reward(FeatureVector features, double observation);
  void append_preference(FeatureVector pair_features, int outcome);
  void append_text(TextHistoryEntry entry);

  /// Copy holding only the last `n` entries.
  History tail(std::size_t n) const;

 private:
  HistoryKind kind_;
  std::vector<HistoryEntry> entries_;
};

/// Probabilities over arms in stored arm order. Construct via validate_distribution.
class ArmDistribution {
 public:
  const std::vector<double>& probabilities() const { return p_; }
  double operator[](std::size_t i) const { return p_[i]; }
  std::size_t size() const { return p_.size(); }

 private:
  friend ArmDistribution validate_distribution(std::span<const double> p);
  std::vector<double> p_;
};

struct RegretLedger {
  double optimal_value = 0.0;
  std::vector<double> instantaneous;
  std::vector<double> cumulative;
};

inline constexpr double kMassTolerance = 1e-9;
inline constexpr double kNegativityTolerance = 1e-12;

/// Index of the maximum; ties broken uniformly with `rng`.
int argmax_with_tiebreak(std::span<const double> values, Rng& rng);
int argmin_with_tiebreak(std::span<const double> values, Rng& rng);

RegretLedger cumulative_regret(std::span<const double> selected_values, double optimal_value);

/// Regret of the first (recommended) arm of each duel.
RegretLedger dueling_first_arm_regret(std::span<const double> first_arm_values, double optimal_value);

/// Accepts p when every entry is in [-1e-12, 1+1e-12] and the mass is 1 within 1e-9.
/// Tolerated negatives are clamped to 0 and the result renormalized.
ArmDistribution validate_distribution(std::span<const double> p);

/// Inverse-CDF draw over the stored arm order.
int sample_from_distribution(const ArmDistribution& p, Rng& rng);

}  // namespace llmbandit
