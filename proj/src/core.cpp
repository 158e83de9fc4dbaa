#include "llmbandit/core.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <sstream>

namespace llmbandit {

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix64(mix64(seed ^ mix64(a)) + 0x632be59bd9b4e019ULL * (b + 1));
}

ArmSet::ArmSet(Eigen::MatrixXd f, std::vector<std::string> l)
    : features(std::move(f)), labels(std::move(l)) {
  if (features.rows() < 2) throw std::invalid_argument("ArmSet needs at least 2 arms");
  if (features.cols() < 1) throw std::invalid_argument("ArmSet needs dimension >= 1");
  if (!features.allFinite()) throw std::invalid_argument("ArmSet features must be finite");
  if (!labels.empty() && static_cast<Eigen::Index>(labels.size()) != features.rows())
    throw std::invalid_argument("ArmSet labels must match arm count");
}

const char* to_string(HistoryKind kind) {
  switch (kind) {
    case HistoryKind::reward: return "reward";
    case HistoryKind::loss: return "loss";
    case HistoryKind::preference: return "preference";
    case HistoryKind::text: return "text";
  }
  return "?";
}

void History::append_reward(FeatureVector features, double observation) {
  if (kind_ != HistoryKind::reward && kind_ != HistoryKind::loss)
    throw std::logic_error("reward entry appended to a " + std::string(to_string(kind_)) + " history");
  if (!std::isfinite(observation)) throw std::invalid_argument("history observation must be finite");
  entries_.emplace_back(RewardHistoryEntry{std::move(features), observation});
}

void History::append_preference(FeatureVector pair_features, int outcome) {
  if (kind_ != HistoryKind::preference)
    throw std::logic_error("preference entry appended to a " + std::string(to_string(kind_)) + " history");
  if (outcome != 0 && outcome != 1) throw std::invalid_argument("preference outcome must be 0 or 1");
  entries_.emplace_back(PreferenceHistoryEntry{std::move(pair_features), outcome});
}

void History::append_text(TextHistoryEntry entry) {
  if (kind_ != HistoryKind::text)
    throw std::logic_error("text entry appended to a " + std::string(to_string(kind_)) + " history");
  if (!std::isfinite(entry.reward)) throw std::invalid_argument("history reward must be finite");
  entries_.emplace_back(std::move(entry));
}

History History::tail(std::size_t n) const {
  History out(kind_);
  const std::size_t start = entries_.size() > n ? entries_.size() - n : 0;
  out.entries_.assign(entries_.begin() + static_cast<std::ptrdiff_t>(start), entries_.end());
  return out;
}

namespace {

void require_finite(std::span<const double> values, const char* what) {
  if (values.empty()) throw std::invalid_argument(std::string(what) + ": empty input");
  for (double v : values)
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite entry");
}

template <typename Better>
int extremum_with_tiebreak(std::span<const double> values, Rng& rng, Better better, const char* what) {
  require_finite(values, what);
  double best = values[0];
  for (double v : values)
    if (better(v, best)) best = v;
  std::vector<int> ties;
  for (std::size_t i = 0; i < values.size(); ++i)
    if (values[i] == best) ties.push_back(static_cast<int>(i));
  // Always consume one draw so the stream position does not depend on the tie pattern.
  std::uniform_int_distribution<std::size_t> pick(0, ties.size() - 1);
  return ties[pick(rng)];
}

}  // namespace

int argmax_with_tiebreak(std::span<const double> values, Rng& rng) {
  return extremum_with_tiebreak(values, rng, std::greater<>{}, "argmax");
}

int argmin_with_tiebreak(std::span<const double> values, Rng& rng) {
  return extremum_with_tiebreak(values, rng, std::less<>{}, "argmin");
}

RegretLedger cumulative_regret(std::span<const double> selected_values, double optimal_value) {
  if (!std::isfinite(optimal_value)) throw std::invalid_argument("regret: non-finite optimal value");
  RegretLedger ledger;
  ledger.optimal_value = optimal_value;
  ledger.instantaneous.reserve(selected_values.size());
  ledger.cumulative.reserve(selected_values.size());
  double running = 0.0;
  for (double v : selected_values) {
    if (!std::isfinite(v)) throw std::invalid_argument("regret: non-finite selected value");
    const double r = optimal_value - v;
    running += r;
    ledger.instantaneous.push_back(r);
    ledger.cumulative.push_back(running);
  }
  return ledger;
}

RegretLedger dueling_first_arm_regret(std::span<const double> first_arm_values, double optimal_value) {
  return cumulative_regret(first_arm_values, optimal_value);
}

ArmDistribution validate_distribution(std::span<const double> p) {
  if (p.empty()) throw BanditError("distribution is empty");
  double mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < -kNegativityTolerance || p[i] > 1.0 + kNegativityTolerance) {
      std::ostringstream msg;
      msg << "invalid distribution: p[" << i << "] = " << p[i] << " outside [0,1]";
      throw BanditError(msg.str());
    }
    mass += p[i];
  }
  if (std::abs(mass - 1.0) > kMassTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "invalid distribution: total mass " << mass << " differs from 1";
    throw BanditError(msg.str());
  }
  ArmDistribution out;
  out.p_.reserve(p.size());
  double clamped_mass = 0.0;
  bool clamped = false;
  for (double v : p) {
    const double c = std::clamp(v, 0.0, 1.0);
    clamped |= c != v;
    out.p_.push_back(c);
    clamped_mass += c;
  }
  if (clamped)
    for (double& v : out.p_) v /= clamped_mass;
  return out;
}

int sample_from_distribution(const ArmDistribution& p, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) last_positive = static_cast<int>(i);
    acc += p[i];
    if (u < acc) return static_cast<int>(i);
  }
  // u landed in the rounding gap above the accumulated mass.
  return last_positive;
}

}  // namespace llmbandit
