#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "llmbandit/core.hpp"
#include "llmbandit/environments.hpp"

namespace llmbandit {

enum class PredictionKind { reward, loss, preference_probability };

const char* to_string(PredictionKind kind);

/// A (context, candidate label) pair for text-feature tasks.
struct TextQuery {
  std::string title;
  std::string content;
  std::string label;
};

struct PredictionRequest {
  const History* history = nullptr;  // snapshot, not owned
  FeatureVector query_features;      // arm features, or the encoded pair for preferences
  std::optional<std::pair<FeatureVector, FeatureVector>> pair;  // raw arms (preference)
  std::optional<TextQuery> text;
  double temperature = 0.0;
  PredictionKind kind = PredictionKind::reward;
  std::uint64_t sample_index = 0;  // distinguishes repeated stochastic calls within a step
};

struct PredictionResponse {
  double value = 0.0;
  std::optional<std::string> raw_text;
  int attempts = 1;
};

/// Throws std::invalid_argument when the request is malformed.
void validate_request(const PredictionRequest& request);

/// Anything that maps (history, query, temperature) to a scalar prediction.
/// At temperature 0 the result must be a deterministic function of (history, query).
class Predictor {
 public:
  virtual ~Predictor() = default;
  virtual PredictionResponse predict(const PredictionRequest& request, Rng& rng) = 0;
};

/// Offline stand-in for the language model: the true function plus noise.
///
/// Noise has two parts. A stochastic part with std kappa * temperature, drawn
/// from the caller's stream. And an optional fixed-bias part with std
/// `bias_std`, seeded from a fingerprint of (history, query) so that the
/// temperature-0 contract still holds.
struct OracleSpec {
  double kappa = 0.3;
  double bias_std = 0.0;
  std::uint64_t bias_seed = 0;
};

class OracleRewardPredictor final : public Predictor {
 public:
  OracleRewardPredictor(RewardFunction truth, OracleSpec spec);
  PredictionResponse predict(const PredictionRequest& request, Rng& rng) override;

 private:
  RewardFunction truth_;
  OracleSpec spec_;
};

class OraclePreferencePredictor final : public Predictor {
 public:
  OraclePreferencePredictor(RewardFunction latent, double sharpness, OracleSpec spec);
  PredictionResponse predict(const PredictionRequest& request, Rng& rng) override;

 private:
  RewardFunction latent_;
  double sharpness_;
  OracleSpec spec_;
};

/// clamp(BTL(f(x1), f(x2)) + noise, 0, 1).
double oracle_preference_predict(const RewardFunction& latent, double sharpness, const OracleSpec& spec,
                                 const FeatureVector& x1, const FeatureVector& x2, double temperature, Rng& rng,
                                 std::uint64_t bias_fingerprint = 0);

/// Knows the correct label per context; predicts 1 for it and 0 otherwise, plus noise.
class OracleTextPredictor final : public Predictor {
 public:
  OracleTextPredictor(std::map<std::string, std::string> correct_by_content, OracleSpec spec);
  PredictionResponse predict(const PredictionRequest& request, Rng& rng) override;

 private:
  std::map<std::string, std::string> correct_;
  OracleSpec spec_;
};

/// Stable 64-bit digest of a history's contents.
std::uint64_t fingerprint(const History& history);
std::uint64_t fingerprint(const FeatureVector& v, std::uint64_t seed = 0);

class ParseError : public BanditError {
 public:
  using BanditError::BanditError;
};

/// First #...# span parsed as a decimal. Further spans must agree with it.
double parse_scalar_response(const std::string& text);

/// Label:probability pairs from <Answer>#...#</Answer>, or else the first #...# span.
ArmDistribution parse_distribution_response(const std::string& text, const std::vector<std::string>& labels);

/// The label named in the first #...# span (or the bare response), matched against `labels`.
int parse_label_response(const std::string& text, const std::vector<std::string>& labels);

}  // namespace llmbandit
