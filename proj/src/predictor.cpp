#include "llmbandit/predictor.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <iostream>

namespace llmbandit {

const char* to_string(PredictionKind kind) {
  switch (kind) {
    case PredictionKind::reward: return "reward";
    case PredictionKind::loss: return "loss";
    case PredictionKind::preference_probability: return "preference_probability";
  }
  return "?";
}

void validate_request(const PredictionRequest& request) {
  if (request.history == nullptr) throw std::invalid_argument("prediction request without history");
  if (!(request.temperature >= 0.0)) throw std::invalid_argument("prediction temperature must be >= 0");
  const HistoryKind hk = request.history->kind();
  bool ok = false;
  switch (request.kind) {
    case PredictionKind::reward: ok = hk == HistoryKind::reward || hk == HistoryKind::text; break;
    case PredictionKind::loss: ok = hk == HistoryKind::loss; break;
    case PredictionKind::preference_probability: ok = hk == HistoryKind::preference; break;
  }
  if (!ok)
    throw std::invalid_argument(std::string("a ") + to_string(request.kind) + " request cannot use a " +
                                to_string(hk) + " history");
  if (hk == HistoryKind::text && !request.text) throw std::invalid_argument("text history needs a text query");
  if (request.kind == PredictionKind::preference_probability && !request.pair && request.query_features.size() == 0)
    throw std::invalid_argument("preference request needs pair features");
}

std::uint64_t fingerprint(const FeatureVector& v, std::uint64_t seed) {
  std::uint64_t h = mix64(seed ^ static_cast<std::uint64_t>(v.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) h = mix64(h ^ std::bit_cast<std::uint64_t>(v(i)));
  return h;
}

namespace {

std::uint64_t string_fingerprint(const std::string& s, std::uint64_t seed) {
  std::uint64_t h = mix64(seed ^ s.size());
  for (unsigned char c : s) h = mix64(h ^ c);
  return h;
}

double bias_noise(const OracleSpec& spec, std::uint64_t fp) {
  if (spec.bias_std <= 0.0) return 0.0;
  Rng rng(derive_stream_seed(spec.bias_seed, fp));
  std::normal_distribution<double> n(0.0, spec.bias_std);
  return n(rng);
}

double temperature_noise(const OracleSpec& spec, double temperature, Rng& rng) {
  const double sd = spec.kappa * temperature;
  if (sd <= 0.0) return 0.0;
  std::normal_distribution<double> n(0.0, sd);
  return n(rng);
}

std::uint64_t request_fingerprint(const PredictionRequest& r) {
  std::uint64_t h = fingerprint(*r.history);
  h = fingerprint(r.query_features, h);
  if (r.pair) h = fingerprint(r.pair->second, fingerprint(r.pair->first, h));
  if (r.text) h = string_fingerprint(r.text->label, string_fingerprint(r.text->content, string_fingerprint(r.text->title, h)));
  return h;
}

}  // namespace

std::uint64_t fingerprint(const History& history) {
  std::uint64_t h = mix64(static_cast<std::uint64_t>(history.kind()) + 1);
  for (const auto& e : history.entries()) {
    std::visit(
        [&](const auto& entry) {
          using T = std::decay_t<decltype(entry)>;
          if constexpr (std::is_same_v<T, RewardHistoryEntry>) {
            h = mix64(fingerprint(entry.features, h) ^ std::bit_cast<std::uint64_t>(entry.observation));
          } else if constexpr (std::is_same_v<T, PreferenceHistoryEntry>) {
            h = mix64(fingerprint(entry.pair_features, h) ^ static_cast<std::uint64_t>(entry.outcome));
          } else {
            h = string_fingerprint(entry.title, h);
            h = string_fingerprint(entry.content, h);
            h = string_fingerprint(entry.label, h);
            h = mix64(h ^ std::bit_cast<std::uint64_t>(entry.reward));
          }
        },
        e);
  }
  return h;
}

OracleRewardPredictor::OracleRewardPredictor(RewardFunction truth, OracleSpec spec)
    : truth_(std::move(truth)), spec_(spec) {
  if (spec_.kappa < 0.0 || spec_.bias_std < 0.0) throw std::invalid_argument("oracle noise scales must be >= 0");
}

PredictionResponse OracleRewardPredictor::predict(const PredictionRequest& request, Rng& rng) {
  validate_request(request);
  if (request.kind == PredictionKind::preference_probability)
    throw std::invalid_argument("reward oracle cannot answer preference requests");
  double value = truth_(request.query_features);
  if (request.kind == PredictionKind::loss) value = -value;
  if (spec_.bias_std > 0.0) value += bias_noise(spec_, request_fingerprint(request));
  value += temperature_noise(spec_, request.temperature, rng);
  return {value, std::nullopt, 1};
}

double oracle_preference_predict(const RewardFunction& latent, double sharpness, const OracleSpec& spec,
                                 const FeatureVector& x1, const FeatureVector& x2, double temperature, Rng& rng,
                                 std::uint64_t bias_fingerprint) {
  if (x1.size() != x2.size()) throw std::invalid_argument("preference oracle: dimension mismatch");
  double p = btl_probability(latent(x1), latent(x2), sharpness);
  p += bias_noise(spec, bias_fingerprint);
  p += temperature_noise(spec, temperature, rng);
  return std::clamp(p, 0.0, 1.0);
}

OraclePreferencePredictor::OraclePreferencePredictor(RewardFunction latent, double sharpness, OracleSpec spec)
    : latent_(std::move(latent)), sharpness_(sharpness), spec_(spec) {
  if (!(sharpness_ > 0.0)) throw std::invalid_argument("BTL sharpness must be positive");
  if (spec_.kappa < 0.0 || spec_.bias_std < 0.0) throw std::invalid_argument("oracle noise scales must be >= 0");
}

PredictionResponse OraclePreferencePredictor::predict(const PredictionRequest& request, Rng& rng) {
  validate_request(request);
  if (request.kind != PredictionKind::preference_probability || !request.pair)
    throw std::invalid_argument("preference oracle needs a preference request carrying both arms");
  const double p = oracle_preference_predict(latent_, sharpness_, spec_, request.pair->first, request.pair->second,
                                             request.temperature, rng,
                                             spec_.bias_std > 0.0 ? request_fingerprint(request) : 0);
  return {p, std::nullopt, 1};
}

OracleTextPredictor::OracleTextPredictor(std::map<std::string, std::string> correct_by_content, OracleSpec spec)
    : correct_(std::move(correct_by_content)), spec_(spec) {}

PredictionResponse OracleTextPredictor::predict(const PredictionRequest& request, Rng& rng) {
  validate_request(request);
  if (!request.text) throw std::invalid_argument("text oracle needs a text query");
  const auto it = correct_.find(request.text->content);
  if (it == correct_.end()) throw std::invalid_argument("text oracle: unknown context");
  double value = it->second == request.text->label ? 1.0 : 0.0;
  if (spec_.bias_std > 0.0) value += bias_noise(spec_, request_fingerprint(request));
  value += temperature_noise(spec_, request.temperature, rng);
  return {value, std::nullopt, 1};
}

// --- response parsing -------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string_view strip_decorations(std::string_view s) {
  s = trim(s);
  while (s.size() >= 2 && ((s.front() == '[' && s.back() == ']') || (s.front() == '\'' && s.back() == '\'') ||
                           (s.front() == '"' && s.back() == '"')))
    s = trim(s.substr(1, s.size() - 2));
  return s;
}

std::vector<std::string_view> hash_spans(std::string_view text) {
  std::vector<std::string_view> spans;
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find('#', pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find('#', open + 1);
    if (close == std::string_view::npos) break;
    spans.push_back(text.substr(open + 1, close - open - 1));
    pos = close + 1;
  }
  return spans;
}

std::optional<double> parse_decimal(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

double parse_scalar_response(const std::string& text) {
  const auto spans = hash_spans(text);
  if (spans.empty()) throw ParseError("no #...# span in response: " + text);
  const auto first = parse_decimal(spans.front());
  if (!first) throw ParseError("non-numeric #...# span: '" + std::string(spans.front()) + "'");
  for (std::size_t i = 1; i < spans.size(); ++i) {
    const auto other = parse_decimal(spans[i]);
    if (other && *other != *first) throw ParseError("conflicting #...# spans in response: " + text);
  }
  return *first;
}

ArmDistribution parse_distribution_response(const std::string& text, const std::vector<std::string>& labels) {
  std::string_view body = text;
  const auto open = body.find("<Answer>");
  if (open != std::string_view::npos) {
    const auto close = body.find("</Answer>", open);
    if (close == std::string_view::npos) throw ParseError("unterminated <Answer> tag");
    body = body.substr(open + 8, close - open - 8);
  }
  const auto spans = hash_spans(body);
  if (!spans.empty()) {
    body = spans.front();
  } else if (open == std::string_view::npos) {
    throw ParseError("no distribution span in response");
  }

  std::vector<double> p(labels.size(), 0.0);
  std::vector<bool> seen(labels.size(), false);
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto comma = body.find(',', pos);
    if (comma == std::string_view::npos) comma = body.size();
    const auto item = trim(body.substr(pos, comma - pos));
    pos = comma + 1;
    if (item.empty()) {
      if (comma == body.size()) break;
      throw ParseError("empty label:probability pair");
    }
    const auto colon = item.rfind(':');
    if (colon == std::string_view::npos) throw ParseError("unparseable pair '" + std::string(item) + "'");
    const auto label = strip_decorations(item.substr(0, colon));
    const auto value = parse_decimal(item.substr(colon + 1));
    if (!value) throw ParseError("unparseable probability in '" + std::string(item) + "'");
    const auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw ParseError("unknown label '" + std::string(label) + "'");
    const auto idx = static_cast<std::size_t>(it - labels.begin());
    if (seen[idx]) throw ParseError("label '" + std::string(label) + "' listed twice");
    seen[idx] = true;
    p[idx] = *value;
  }
  try {
    return validate_distribution(p);
  } catch (const BanditError& e) {
    throw ParseError(e.what());
  }
}

int parse_label_response(const std::string& text, const std::vector<std::string>& labels) {
  const auto spans = hash_spans(text);
  const auto label = strip_decorations(spans.empty() ? std::string_view(text) : spans.front());
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) throw ParseError("response names no known label: " + text);
  return static_cast<int>(it - labels.begin());
}

}  // namespace llmbandit
