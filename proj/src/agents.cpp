#include "llmbandit/agents.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>

namespace llmbandit {

double TemperatureSchedule::effective_floor() const { return floor.value_or(base - cap); }

void TemperatureSchedule::validate() const {
  if (rate < 0.0 || cap < 0.0) throw std::invalid_argument("temperature schedule: rate and cap must be >= 0");
  if (effective_floor() < 0.0)
    throw std::invalid_argument("temperature schedule: temperatures must stay >= 0");
}

double temperature_at(const TemperatureSchedule& schedule, int t) {
  if (t < 1) throw std::invalid_argument("temperature_at: iterations start at 1");
  const double raw = schedule.base - std::min(schedule.rate * std::sqrt(static_cast<double>(t)), schedule.cap);
  return std::max(raw, schedule.effective_floor());
}

TemperatureSchedule constant_schedule(double temperature) { return {temperature, 0.0, 0.0, std::nullopt}; }

const char* to_string(PairEncoding e) { return e == PairEncoding::difference ? "difference" : "concatenation"; }

PairEncoding parse_pair_encoding(const std::string& name) {
  if (name == "difference") return PairEncoding::difference;
  if (name == "concatenation") return PairEncoding::concatenation;
  throw std::invalid_argument("unknown pair encoding: " + name);
}

TsLlmDbConfig square_dueling_defaults() {
  TsLlmDbConfig c;
  c.first_arm_schedule = {1.6, 0.13, 1.5, std::nullopt};
  c.second_arm_schedule = {1.6, 0.13, 1.1, std::nullopt};
  c.pair_encoding = PairEncoding::concatenation;
  return c;
}

std::vector<PredictionResponse> predict_all(Predictor& predictor, const std::vector<PredictionRequest>& requests,
                                            const std::vector<std::uint64_t>& stream_seeds, bool parallel) {
  std::vector<PredictionResponse> out(requests.size());
  auto one = [&](std::size_t i) {
    Rng stream(stream_seeds[i]);
    return predictor.predict(requests[i], stream);
  };
  if (!parallel || requests.size() < 2) {
    for (std::size_t i = 0; i < requests.size(); ++i) out[i] = one(i);
    return out;
  }
  std::vector<std::future<PredictionResponse>> futures;
  futures.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) futures.push_back(std::async(std::launch::async, one, i));
  for (std::size_t i = 0; i < requests.size(); ++i) out[i] = futures[i].get();
  return out;
}

namespace {

std::vector<std::uint64_t> stream_seeds(std::uint64_t step_seed, std::size_t n) {
  std::vector<std::uint64_t> seeds(n);
  for (std::size_t i = 0; i < n; ++i) seeds[i] = derive_stream_seed(step_seed, i);
  return seeds;
}

void collect(const std::vector<PredictionResponse>& responses, std::vector<double>& values,
             std::vector<std::string>& transcript) {
  for (const auto& r : responses) {
    values.push_back(r.value);
    if (r.raw_text) transcript.push_back(*r.raw_text);
  }
}

}  // namespace

Selection ts_llm_step(const TsLlmConfig& config, const ArmSet& arms, const History& history, Predictor& predictor,
                      int t, Rng& rng, StepOptions options) {
  if (history.kind() != HistoryKind::reward) throw std::invalid_argument("TS-LLM needs a reward history");
  Selection sel;
  sel.temperature = temperature_at(config.schedule, t);
  std::vector<PredictionRequest> requests(static_cast<std::size_t>(arms.size()));
  for (int i = 0; i < arms.size(); ++i) {
    auto& r = requests[static_cast<std::size_t>(i)];
    r.history = &history;
    r.query_features = arms.arm(i);
    r.temperature = sel.temperature;
    r.kind = PredictionKind::reward;
    r.sample_index = static_cast<std::uint64_t>(i);
  }
  const std::uint64_t step_seed = rng();
  collect(predict_all(predictor, requests, stream_seeds(step_seed, requests.size()), options.parallel),
          sel.predictions, sel.transcript);
  sel.arm = argmax_with_tiebreak(sel.predictions, rng);
  return sel;
}

std::pair<ArmDistribution, int> ro_llm_distribution(std::span<const double> losses, double gamma, double mu, Rng& rng) {
  if (gamma < 0.0) throw std::invalid_argument("RO-LLM: gamma must be >= 0");
  if (!(mu > 0.0)) throw std::invalid_argument("RO-LLM: mu must be > 0");
  const int leader = argmin_with_tiebreak(losses, rng);
  std::vector<double> p(losses.size(), 0.0);
  // Zero-gap terms are exactly 1/mu; folding them into (mu - n)/mu keeps the uniform limits exact.
  double zero_gap = 0.0;
  double others = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    if (static_cast<int>(i) == leader) continue;
    const double weighted_gap = gamma * (losses[i] - losses[static_cast<std::size_t>(leader)]);
    p[i] = 1.0 / (mu + weighted_gap);
    if (weighted_gap == 0.0) {
      zero_gap += 1.0;
    } else {
      others += p[i];
    }
  }
  p[static_cast<std::size_t>(leader)] = (mu - zero_gap) / mu - others;
  if (p[static_cast<std::size_t>(leader)] < -kNegativityTolerance) {
    std::ostringstream msg;
    msg << "RO-LLM: leader probability " << p[static_cast<std::size_t>(leader)]
        << " is negative; mu = " << mu << " is too small for K = " << losses.size()
        << " (need sum over non-leaders of 1/(mu + gamma*gap) <= 1, e.g. mu >= K)";
    throw BanditError(msg.str());
  }
  return {validate_distribution(p), leader};
}

Selection ro_llm_step(const RoLlmConfig& config, const ArmSet& arms, const History& history, Predictor& predictor,
                      Rng& rng, StepOptions options) {
  if (history.kind() != HistoryKind::loss) throw std::invalid_argument("RO-LLM needs a loss history");
  Selection sel;
  sel.temperature = 0.0;
  std::vector<PredictionRequest> requests(static_cast<std::size_t>(arms.size()));
  for (int i = 0; i < arms.size(); ++i) {
    auto& r = requests[static_cast<std::size_t>(i)];
    r.history = &history;
    r.query_features = arms.arm(i);
    r.temperature = 0.0;
    r.kind = PredictionKind::loss;
    r.sample_index = static_cast<std::uint64_t>(i);
  }
  const std::uint64_t step_seed = rng();
  collect(predict_all(predictor, requests, stream_seeds(step_seed, requests.size()), options.parallel),
          sel.predictions, sel.transcript);
  auto [dist, leader] = ro_llm_distribution(sel.predictions, config.gamma, config.mu_for(arms.size()), rng);
  (void)leader;
  sel.arm = sample_from_distribution(dist, rng);
  sel.distribution = std::move(dist);
  return sel;
}

FeatureVector pair_feature(const FeatureVector& x1, const FeatureVector& x2, PairEncoding encoding) {
  if (x1.size() != x2.size()) throw std::invalid_argument("pair_feature: dimension mismatch");
  if (encoding == PairEncoding::difference) return x1 - x2;
  FeatureVector out(x1.size() + x2.size());
  out << x1, x2;
  return out;
}

namespace {

PredictionRequest preference_request(const History& history, const FeatureVector& xa, const FeatureVector& xb,
                                     PairEncoding encoding, double temperature, std::uint64_t sample_index) {
  PredictionRequest r;
  r.history = &history;
  r.query_features = pair_feature(xa, xb, encoding);
  r.pair = std::make_pair(xa, xb);
  r.temperature = temperature;
  r.kind = PredictionKind::preference_probability;
  r.sample_index = sample_index;
  return r;
}

std::vector<int> sample_opponents(int arm, int num_arms, int n, Rng& rng) {
  std::vector<int> pool;
  pool.reserve(static_cast<std::size_t>(num_arms - 1));
  for (int j = 0; j < num_arms; ++j)
    if (j != arm) pool.push_back(j);
  for (int k = 0; k < n; ++k) {
    std::uniform_int_distribution<int> pick(k, static_cast<int>(pool.size()) - 1);
    std::swap(pool[static_cast<std::size_t>(k)], pool[static_cast<std::size_t>(pick(rng))]);
  }
  pool.resize(static_cast<std::size_t>(n));
  return pool;
}

}  // namespace

BordaEstimate borda_estimate(int arm, const ArmSet& arms, const History& history, Predictor& predictor,
                             int num_opponents, double temperature, PairEncoding encoding, Rng& rng,
                             StepOptions options) {
  if (num_opponents < 1 || num_opponents > arms.size() - 1)
    throw std::invalid_argument("borda_estimate: need 1 <= N <= K-1");
  if (arm < 0 || arm >= arms.size()) throw std::out_of_range("borda_estimate: arm index");
  BordaEstimate est;
  est.opponents = sample_opponents(arm, arms.size(), num_opponents, rng);
  const FeatureVector xi = arms.arm(arm);
  std::vector<PredictionRequest> requests;
  requests.reserve(est.opponents.size());
  for (std::size_t n = 0; n < est.opponents.size(); ++n)
    requests.push_back(preference_request(history, xi, arms.arm(est.opponents[n]), encoding, temperature,
                                          static_cast<std::uint64_t>(arm) * static_cast<std::uint64_t>(arms.size()) + n));
  const std::uint64_t seed = rng();
  collect(predict_all(predictor, requests, stream_seeds(seed, requests.size()), options.parallel), est.predictions,
          est.transcript);
  est.value = std::accumulate(est.predictions.begin(), est.predictions.end(), 0.0) /
              static_cast<double>(est.predictions.size());
  return est;
}

DuelSelection ts_llm_db_step(const TsLlmDbConfig& config, const ArmSet& arms, const History& history,
                             Predictor& predictor, int t, Rng& rng, StepOptions options) {
  if (history.kind() != HistoryKind::preference) throw std::invalid_argument("TS-LLM-DB needs a preference history");
  const int k = arms.size();
  DuelSelection sel;
  sel.first_temperature = temperature_at(config.first_arm_schedule, t);
  sel.second_temperature = temperature_at(config.second_arm_schedule, t);

  for (int i = 0; i < k; ++i) {
    auto est = borda_estimate(i, arms, history, predictor, config.num_opponents, sel.first_temperature,
                              config.pair_encoding, rng, options);
    sel.borda.push_back(est.value);
    for (auto& s : est.transcript) sel.transcript.push_back(std::move(s));
  }
  sel.first = argmax_with_tiebreak(sel.borda, rng);

  const FeatureVector x_first = arms.arm(sel.first);
  std::vector<int> candidates;
  std::vector<PredictionRequest> requests;
  const std::uint64_t base_index = static_cast<std::uint64_t>(k) * static_cast<std::uint64_t>(k);
  for (int j = 0; j < k; ++j) {
    if (j == sel.first && !config.allow_self_duel) continue;
    candidates.push_back(j);
    requests.push_back(preference_request(history, arms.arm(j), x_first, config.pair_encoding,
                                          sel.second_temperature, base_index + static_cast<std::uint64_t>(j)));
  }
  const std::uint64_t seed = rng();
  std::vector<double> scores;
  collect(predict_all(predictor, requests, stream_seeds(seed, requests.size()), options.parallel), scores,
          sel.transcript);
  sel.second = candidates[static_cast<std::size_t>(argmax_with_tiebreak(scores, rng))];
  return sel;
}

int baseline_random_step(int num_arms, Rng& rng) {
  if (num_arms < 1) throw std::invalid_argument("random baseline needs arms");
  std::uniform_int_distribution<int> pick(0, num_arms - 1);
  return pick(rng);
}

Selection baseline_direct_step(const DirectBaseline& baseline, const std::vector<std::string>& labels,
                               const Eigen::MatrixXd& arm_features, const std::vector<LabeledPull>& pulls,
                               int horizon, int t, Rng& rng) {
  if (!baseline.gateway) throw std::invalid_argument("direct baseline needs a configured gateway");
  Selection sel;
  sel.temperature = baseline.temperature;
  const std::string prompt = render_baseline_prompt(baseline.variant, labels, arm_features, pulls, horizon);
  std::string last_error;
  for (int attempt = 0; attempt < baseline.max_attempts; ++attempt) {
    ChatRequest chat = make_user_request(baseline.model, prompt, baseline.temperature, baseline.max_tokens);
    chat.sample_index = static_cast<std::uint64_t>(t);
    chat.attempt = attempt;
    const std::string text = baseline.gateway->cached_complete(chat).text;
    sel.transcript.push_back(text);
    try {
      ArmDistribution dist = parse_distribution_response(text, labels);
      sel.arm = sample_from_distribution(dist, rng);
      sel.distribution = std::move(dist);
      return sel;
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw ParseError("direct baseline: no valid distribution after " + std::to_string(baseline.max_attempts) +
                   " attempts: " + last_error);
}

Selection ts_llm_text_step(const TemperatureSchedule& schedule, const std::vector<std::string>& labels,
                           const History& history, Predictor& predictor, const std::string& title,
                           const std::string& content, int t, Rng& rng, StepOptions options) {
  if (history.kind() != HistoryKind::text) throw std::invalid_argument("text TS-LLM needs a text history");
  Selection sel;
  sel.temperature = temperature_at(schedule, t);
  std::vector<PredictionRequest> requests(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& r = requests[i];
    r.history = &history;
    r.text = TextQuery{title, content, labels[i]};
    r.temperature = sel.temperature;
    r.kind = PredictionKind::reward;
    r.sample_index = i;
  }
  const std::uint64_t step_seed = rng();
  collect(predict_all(predictor, requests, stream_seeds(step_seed, requests.size()), options.parallel),
          sel.predictions, sel.transcript);
  sel.arm = argmax_with_tiebreak(sel.predictions, rng);
  return sel;
}

Selection text_direct_step(const DirectBaseline& baseline, const std::vector<std::string>& labels,
                           const History& history, const std::string& title, const std::string& content, int t) {
  if (!baseline.gateway) throw std::invalid_argument("direct baseline needs a configured gateway");
  Selection sel;
  sel.temperature = baseline.temperature;
  const std::string prompt = render_text_direct_prompt(labels, history, title, content);
  std::string last_error;
  for (int attempt = 0; attempt < baseline.max_attempts; ++attempt) {
    ChatRequest chat = make_user_request(baseline.model, prompt, baseline.temperature, baseline.max_tokens);
    chat.sample_index = static_cast<std::uint64_t>(t);
    chat.attempt = attempt;
    const std::string text = baseline.gateway->cached_complete(chat).text;
    sel.transcript.push_back(text);
    try {
      sel.arm = parse_label_response(text, labels);
      return sel;
    } catch (const ParseError& e) {
      last_error = e.what();
    }
  }
  throw ParseError("direct baseline: no valid label after " + std::to_string(baseline.max_attempts) +
                   " attempts: " + last_error);
}

}  // namespace llmbandit
