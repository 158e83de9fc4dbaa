#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "llmbandit/core.hpp"
#include "llmbandit/gateway.hpp"
#include "llmbandit/predictor.hpp"
#include "llmbandit/prompts.hpp"

namespace llmbandit {

/// temp(t) = max(base - min(rate * sqrt(t), cap), floor), floor defaulting to base - cap.
struct TemperatureSchedule {
  double base = 1.5;
  double rate = 0.1;
  double cap = 1.4;
  std::optional<double> floor;

  double effective_floor() const;
  void validate() const;
};

double temperature_at(const TemperatureSchedule& schedule, int t);

/// Constant temperature (rate 0), used by fixed-temperature ablations.
TemperatureSchedule constant_schedule(double temperature);

struct TsLlmConfig {
  TemperatureSchedule schedule;
  int init_pulls = 2;
};

struct RoLlmConfig {
  double gamma = 5.0;
  std::optional<double> mu;  // defaults to the arm count

  double mu_for(int num_arms) const { return mu.value_or(static_cast<double>(num_arms)); }
};

enum class PairEncoding { difference, concatenation };

const char* to_string(PairEncoding e);
PairEncoding parse_pair_encoding(const std::string& name);

struct TsLlmDbConfig {
  int num_opponents = 15;  // N
  TemperatureSchedule first_arm_schedule{1.5, 0.1, 1.4, std::nullopt};
  TemperatureSchedule second_arm_schedule{1.5, 0.1, 1.1, std::nullopt};
  PairEncoding pair_encoding = PairEncoding::difference;
  bool allow_self_duel = false;
  int init_pairs = 1;
};

/// Square-function dueling schedules: 1.6 - min(0.13 sqrt(t), 1.5) and 1.6 - min(0.13 sqrt(t), 1.1).
TsLlmDbConfig square_dueling_defaults();

/// Runs a step's predictions. Each request carries its own pre-derived stream
/// seed, so results do not depend on completion order.
std::vector<PredictionResponse> predict_all(Predictor& predictor, const std::vector<PredictionRequest>& requests,
                                            const std::vector<std::uint64_t>& stream_seeds, bool parallel);

struct Selection {
  int arm = 0;
  double temperature = 0.0;
  std::vector<double> predictions;
  std::vector<std::string> transcript;
  std::optional<ArmDistribution> distribution;
};

struct DuelSelection {
  int first = 0;
  int second = 1;
  double first_temperature = 0.0;
  double second_temperature = 0.0;
  std::vector<double> borda;
  std::vector<std::string> transcript;
};

struct StepOptions {
  bool parallel = false;
};

/// K reward predictions at temperature_at(schedule, t), then a greedy pick.
Selection ts_llm_step(const TsLlmConfig& config, const ArmSet& arms, const History& history, Predictor& predictor,
                      int t, Rng& rng, StepOptions options = {});

/// Inverse-gap-weighted distribution over arms from predicted losses.
/// Returns the distribution and the leader (lowest predicted loss).
std::pair<ArmDistribution, int> ro_llm_distribution(std::span<const double> losses, double gamma, double mu,
                                                    Rng& rng);

/// K loss predictions at temperature 0, then a draw from ro_llm_distribution.
Selection ro_llm_step(const RoLlmConfig& config, const ArmSet& arms, const History& history, Predictor& predictor,
                      Rng& rng, StepOptions options = {});

FeatureVector pair_feature(const FeatureVector& x1, const FeatureVector& x2, PairEncoding encoding);

struct BordaEstimate {
  double value = 0.0;
  std::vector<int> opponents;
  std::vector<double> predictions;
  std::vector<std::string> transcript;
};

/// Mean predicted probability that `arm` beats N opponents drawn uniformly
/// without replacement from the other arms.
BordaEstimate borda_estimate(int arm, const ArmSet& arms, const History& history, Predictor& predictor,
                             int num_opponents, double temperature, PairEncoding encoding, Rng& rng,
                             StepOptions options = {});

DuelSelection ts_llm_db_step(const TsLlmDbConfig& config, const ArmSet& arms, const History& history,
                             Predictor& predictor, int t, Rng& rng, StepOptions options = {});

int baseline_random_step(int num_arms, Rng& rng);

/// Direct arm selection: the model is shown the arms and pulls so far and
/// answers with a distribution, from which the arm is drawn.
struct DirectBaseline {
  BaselineVariant variant = BaselineVariant::nofeature;
  std::shared_ptr<CachingGateway> gateway;
  std::string model;
  double temperature = 1.0;
  int max_tokens = 1024;
  int max_attempts = 3;
};

Selection baseline_direct_step(const DirectBaseline& baseline, const std::vector<std::string>& labels,
                               const Eigen::MatrixXd& arm_features, const std::vector<LabeledPull>& pulls,
                               int horizon, int t, Rng& rng);

/// Text task, reward prediction per candidate label then greedy pick.
Selection ts_llm_text_step(const TemperatureSchedule& schedule, const std::vector<std::string>& labels,
                           const History& history, Predictor& predictor, const std::string& title,
                           const std::string& content, int t, Rng& rng, StepOptions options = {});

/// Text task, the model names a label directly.
Selection text_direct_step(const DirectBaseline& baseline, const std::vector<std::string>& labels,
                           const History& history, const std::string& title, const std::string& content, int t);

}  // namespace llmbandit
