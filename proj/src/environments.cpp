#include "llmbandit/environments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <json.hpp>

namespace llmbandit {

const char* to_string(RewardKind kind) {
  switch (kind) {
    case RewardKind::linear: return "linear";
    case RewardKind::square: return "square";
    case RewardKind::sinusoidal: return "sinusoidal";
    case RewardKind::gp_sample: return "gp_sample";
  }
  return "?";
}

RewardKind parse_reward_kind(const std::string& name) {
  if (name == "linear") return RewardKind::linear;
  if (name == "square") return RewardKind::square;
  if (name == "sinusoidal") return RewardKind::sinusoidal;
  if (name == "gp_sample" || name == "gp") return RewardKind::gp_sample;
  throw std::invalid_argument("unknown reward function kind: " + name);
}

double eval_reward(const RewardFunctionSpec& spec, const FeatureVector& x) {
  if (spec.theta.size() != x.size())
    throw std::invalid_argument("reward: dimension mismatch (theta " + std::to_string(spec.theta.size()) +
                                ", x " + std::to_string(x.size()) + ")");
  const double z = spec.theta.dot(x);
  switch (spec.kind) {
    case RewardKind::linear: return z;
    case RewardKind::square: return z * z;
    case RewardKind::sinusoidal: return std::sin(z);
    case RewardKind::gp_sample: break;
  }
  throw std::logic_error("gp_sample rewards are only defined on a registered arm set");
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& points, double lengthscale) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd gram(n, n);
  const double denom = 2.0 * lengthscale * lengthscale;
  for (Eigen::Index i = 0; i < n; ++i) {
    gram(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v = std::exp(-(points.row(i) - points.row(j)).squaredNorm() / denom);
      gram(i, j) = v;
      gram(j, i) = v;
    }
  }
  return gram;
}

Eigen::VectorXd sample_gp_reward_table(const ArmSet& arms, double lengthscale, std::uint64_t seed) {
  if (!(lengthscale > 0.0)) throw std::invalid_argument("GP lengthscale must be positive");
  const Eigen::Index n = arms.features.rows();
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (arms.features.row(i) == arms.features.row(j))
        throw BanditError("GP sample: arms " + std::to_string(j) + " and " + std::to_string(i) + " are identical");

  const Eigen::MatrixXd gram = rbf_gram(arms.features, lengthscale);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(n, n);
  for (double jitter = 1e-8; jitter <= 1e-4 * (1.0 + 1e-9); jitter *= 10.0) {
    Eigen::LLT<Eigen::MatrixXd> llt(gram + jitter * identity);
    if (llt.info() != Eigen::Success) continue;
    Rng rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd z(n);
    for (Eigen::Index i = 0; i < n; ++i) z(i) = normal(rng);
    return llt.matrixL() * z;
  }
  throw BanditError("GP sample: Cholesky failed with jitter up to 1e-4 (near-duplicate arms?)");
}

RewardFunction::RewardFunction(RewardFunctionSpec spec, const ArmSet& arms)
    : spec_(std::move(spec)), registered_(arms.features) {
  if (spec_.kind == RewardKind::gp_sample) {
    arm_values_ = sample_gp_reward_table(arms, spec_.gp_lengthscale, spec_.gp_seed);
  } else {
    if (spec_.theta.size() != arms.dim()) throw std::invalid_argument("reward: theta dimension differs from arms");
    arm_values_.resize(arms.size());
    for (int i = 0; i < arms.size(); ++i) arm_values_(i) = eval_reward(spec_, arms.arm(i));
  }
}

double RewardFunction::operator()(const FeatureVector& x) const {
  if (x.size() != registered_.cols())
    throw std::invalid_argument("reward: dimension mismatch (arms " + std::to_string(registered_.cols()) +
                                ", x " + std::to_string(x.size()) + ")");
  if (spec_.kind != RewardKind::gp_sample) return eval_reward(spec_, x);
  for (Eigen::Index i = 0; i < registered_.rows(); ++i)
    if (registered_.row(i) == x.transpose()) return arm_values_(i);
  throw std::invalid_argument("reward: gp_sample evaluated at an unregistered arm");
}

double observe_reward(const RewardFunction& f, const NoiseSpec& noise, const FeatureVector& x, Rng& rng) {
  if (noise.variance < 0.0) throw std::invalid_argument("noise variance must be non-negative");
  const double value = f(x);
  if (noise.variance == 0.0) return value;
  std::normal_distribution<double> eps(0.0, std::sqrt(noise.variance));
  return value + eps(rng);
}

double btl_probability(double f1, double f2, double sharpness) {
  const double z = sharpness * (f1 - f2);
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

int sample_preference(const RewardFunction& f, double sharpness, const FeatureVector& x1, const FeatureVector& x2,
                      Rng& rng) {
  if (x1.size() != x2.size()) throw std::invalid_argument("preference: dimension mismatch");
  std::bernoulli_distribution coin(btl_probability(f(x1), f(x2), sharpness));
  return coin(rng) ? 1 : 0;
}

ArmSet generate_arms(int num_arms, int dim, std::uint64_t seed) {
  if (num_arms < 2 || dim < 1) throw std::invalid_argument("generate_arms: need K >= 2 and d >= 1");
  Rng rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd features(num_arms, dim);
  for (int i = 0; i < num_arms; ++i)
    for (int j = 0; j < dim; ++j) features(i, j) = unit(rng);
  return ArmSet(std::move(features));
}

FeatureVector generate_theta(int dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("generate_theta: need d >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureVector theta(dim);
  do {
    for (int j = 0; j < dim; ++j) theta(j) = normal(rng);
  } while (theta.norm() == 0.0);
  return theta / theta.norm();
}

int count_words(const std::string& text) {
  std::istringstream in(text);
  std::string word;
  int n = 0;
  while (in >> word) ++n;
  return n;
}

ContextualDataset load_contextual_dataset(const std::filesystem::path& path, const ContextualFilter& filter) {
  std::ifstream in(path);
  if (!in) throw BanditError("cannot open dataset " + path.string());

  ContextualDataset out;
  std::vector<ContextualRecord> candidates;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      ContextualRecord rec;
      rec.context_text = j.at("context").get<std::string>();
      if (j.contains("title")) rec.title = j.at("title").get<std::string>();
      const auto& label = j.at("label");
      if (label.is_string()) {
        rec.correct_label = label.get<std::string>();
      } else if (label.is_number_integer()) {
        rec.correct_label = std::to_string(label.get<long long>());
      } else {
        throw std::invalid_argument("label must be a string or an integer (single-label records only)");
      }
      candidates.push_back(std::move(rec));
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": skipped malformed record: " << e.what();
      out.warnings.push_back(msg.str());
      std::cerr << "warning: " << msg.str() << '\n';
    }
  }

  std::erase_if(candidates, [&](const ContextualRecord& r) {
    if (filter.max_context_words > 0 && count_words(r.context_text) > filter.max_context_words) return true;
    if (filter.max_context_chars > 0 && static_cast<int>(r.context_text.size()) > filter.max_context_chars)
      return true;
    return false;
  });

  if (!filter.pool.empty()) {
    out.arm_pool = filter.pool;
  } else {
    std::map<std::string, std::pair<int, int>> stats;  // label -> (count, first index)
    for (int i = 0; i < static_cast<int>(candidates.size()); ++i) {
      auto [it, inserted] = stats.try_emplace(candidates[i].correct_label, 0, i);
      ++it->second.first;
    }
    std::vector<std::pair<std::string, std::pair<int, int>>> ranked(stats.begin(), stats.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.second.first != b.second.first) return a.second.first > b.second.first;
      return a.second.second < b.second.second;
    });
    const int keep = std::min<int>(filter.arm_pool_size, static_cast<int>(ranked.size()));
    for (int i = 0; i < keep; ++i) out.arm_pool.push_back(ranked[i].first);
  }

  for (auto& r : candidates)
    if (std::find(out.arm_pool.begin(), out.arm_pool.end(), r.correct_label) != out.arm_pool.end())
      out.records.push_back(std::move(r));

  if (out.records.empty()) throw BanditError("dataset " + path.string() + ": no records left after filtering");
  return out;
}

}  // namespace llmbandit
