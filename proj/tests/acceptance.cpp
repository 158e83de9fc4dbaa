// Acceptance suite. `acceptance N` runs criterion N, `acceptance` runs all of them.
// Exit status is non-zero if any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "llmbandit/cli.hpp"
#include "llmbandit/runner.hpp"
#include "support.hpp"

using namespace llmbandit;
using nlohmann::json;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

// Latent values computed here, independently of the library's evaluator.
Eigen::VectorXd latent_values(const std::string& kind, const ArmSet& arms, const RunStreams& s, int dim) {
  if (kind == "gp") return sample_gp_reward_table(arms, 0.4, s.gp_seed);
  const FeatureVector theta = generate_theta(dim, s.theta_seed);
  Eigen::VectorXd v(arms.size());
  for (int i = 0; i < arms.size(); ++i) {
    double dot = 0.0;
    for (int k = 0; k < dim; ++k) dot += theta(k) * arms.features(i, k);
    v(i) = kind == "linear" ? dot : kind == "square" ? dot * dot : std::sin(dot);
  }
  return v;
}

int brute_force_argmax(const Eigen::VectorXd& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return best;
}

double mean_final(const ExperimentConfig& c, const AgentSpec& agent) {
  double total = 0.0;
  for (int r = 0; r < c.repetitions; ++r) total += run_single(c, agent, r).iterations.back().cumulative;
  return total / c.repetitions;
}

const AgentSpec& agent_named(const ExperimentConfig& c, const std::string& name) {
  for (const auto& a : c.agents)
    if (a.name == name) return a;
  throw std::logic_error("no agent " + name);
}

// --- criteria ----------------------------------------------------------------

Outcome formula_exactness() {
  Outcome o;
  Rng rng(7);
  const std::vector<double> losses{0.1, 0.3};
  const auto [p, leader] = ro_llm_distribution(losses, 5.0, 2.0, rng);
  // p_1 = 1 / (2 + 5 * 0.2) = 1/3, p_0 = 1 - 1/3
  o.require(leader == 0, "leader " + std::to_string(leader) + " != 0");
  o.require(std::abs(p[0] - 2.0 / 3.0) <= 1e-12 && std::abs(p[1] - 1.0 / 3.0) <= 1e-12,
            "hand case gave (" + fmt(p[0], 17) + ", " + fmt(p[1], 17) + ")");

  const std::vector<double> equal(16, 0.37);
  const auto [pe, le] = ro_llm_distribution(equal, 4.2, 16.0, rng);
  for (std::size_t i = 0; i < 16; ++i) o.require(pe[i] == 1.0 / 16.0, "equal losses: p[" + std::to_string(i) + "] = " + fmt(pe[i], 17));

  for (int K : {2, 5, 16}) {
    std::vector<double> l(static_cast<std::size_t>(K));
    std::normal_distribution<double> n(0.0, 1.0);
    for (auto& x : l) x = n(rng);
    const auto [pg, lg] = ro_llm_distribution(l, 0.0, K, rng);
    for (int i = 0; i < K; ++i)
      o.require(pg[static_cast<std::size_t>(i)] == 1.0 / K, "gamma=0, K=" + std::to_string(K) + ": p[" + std::to_string(i) + "] = " + fmt(pg[static_cast<std::size_t>(i)], 17));
  }
  if (o.pass) o.detail = "(2/3, 1/3) within 1e-12; uniform limits exact";
  return o;
}

Outcome btl_checks() {
  Outcome o;
  for (double f : {-3.0, 0.0, 0.25, 10.0}) o.require(btl_probability(f, f, 10.0) == 0.5, "Delta=0 not exactly 0.5 at f=" + fmt(f));
  Rng rng(11);
  std::uniform_real_distribution<double> fv(-5.0, 5.0), sv(0.01, 50.0);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double a = fv(rng), b = fv(rng), s = sv(rng);
    worst = std::max(worst, std::abs(btl_probability(a, b, s) + btl_probability(b, a, s) - 1.0));
  }
  o.require(worst <= 1e-12, "complement symmetry error " + fmt(worst));
  const double expected = 1.0 / (1.0 + std::exp(-1.0));
  const double got = btl_probability(0.6, 0.5, 10.0);
  o.require(std::abs(got - 0.731059) <= 1e-6, "Delta=0.1 gave " + fmt(got, 10));
  o.require(std::abs(got - expected) <= 1e-12, "Delta=0.1 differs from 1/(1+e^-1)");
  if (o.pass) o.detail = "0.5 exact; max |p(a,b)+p(b,a)-1| = " + fmt(worst) + "; Delta=0.1 -> " + fmt(got, 10);
  return o;
}

Outcome temperature_schedules() {
  Outcome o;
  const TemperatureSchedule mab{1.5, 0.1, 1.4, std::nullopt};
  o.require(temperature_at(mab, 1) == 1.5 - 0.1, "temp(1) = " + fmt(temperature_at(mab, 1), 17));
  o.require(temperature_at(mab, 100) == 1.5 - 1.0, "temp(100) = " + fmt(temperature_at(mab, 100), 17));
  o.require(temperature_at(mab, 196) == 1.5 - 1.4, "temp(196) = " + fmt(temperature_at(mab, 196), 17));

  const TsLlmDbConfig sq = square_dueling_defaults();
  for (int t : {1, 50, 150}) {
    const double first = 1.6 - std::min(0.13 * std::sqrt(static_cast<double>(t)), 1.5);
    const double second = 1.6 - std::min(0.13 * std::sqrt(static_cast<double>(t)), 1.1);
    o.require(temperature_at(sq.first_arm_schedule, t) == first, "square first-arm temp at t=" + std::to_string(t));
    o.require(temperature_at(sq.second_arm_schedule, t) == second, "square second-arm temp at t=" + std::to_string(t));
  }
  const TsLlmDbConfig lin;
  for (int t : {1, 50, 150}) {
    o.require(temperature_at(lin.first_arm_schedule, t) == 1.5 - std::min(0.1 * std::sqrt(static_cast<double>(t)), 1.4),
              "linear first-arm temp at t=" + std::to_string(t));
    o.require(temperature_at(lin.second_arm_schedule, t) == 1.5 - std::min(0.1 * std::sqrt(static_cast<double>(t)), 1.1),
              "linear second-arm temp at t=" + std::to_string(t));
  }
  if (o.pass)
    o.detail = "temp(1,100,196) = (" + fmt(temperature_at(mab, 1)) + ", " + fmt(temperature_at(mab, 100)) + ", " +
               fmt(temperature_at(mab, 196)) + "); square first-arm at t=1,50,150: " +
               fmt(temperature_at(sq.first_arm_schedule, 1)) + ", " + fmt(temperature_at(sq.first_arm_schedule, 50)) +
               ", " + fmt(temperature_at(sq.first_arm_schedule, 150));
  return o;
}

Outcome exact_oracle_degeneracies() {
  Outcome o;
  int checked = 0;
  for (const std::string kind : {"linear", "square", "sinusoidal", "gp"}) {
    const json j = {{"task", "mab"}, {"K", 16}, {"d", 4}, {"T", 50}, {"repetitions", 5}, {"base_seed", 101},
                    {"environment", {{"reward", kind}}},
                    {"predictor", {{"kappa", 0.0}}},
                    {"agents", {{{"type", "ts_llm"}}}}};
    const ExperimentConfig c = config_from_json(j);
    for (int r = 0; r < c.repetitions; ++r) {
      const RunRecord rec = run_single(c, c.agents[0], r);
      const RunStreams s(derive_run_seed(c.base_seed, static_cast<std::uint64_t>(r)));
      const ArmSet arms = generate_arms(16, 4, s.arms_seed);
      const Eigen::VectorXd v = latent_values(kind, arms, s, 4);
      const int best = brute_force_argmax(v);
      for (const auto& it : rec.iterations) {
        if (it.iteration <= c.init_pulls) {
          o.require(it.init, kind + ": iteration " + std::to_string(it.iteration) + " should be initialization");
          continue;
        }
        ++checked;
        if (it.arms[0] != best || it.instantaneous != 0.0)
          o.require(false, kind + " seed " + std::to_string(r) + " t=" + std::to_string(it.iteration) + ": arm " +
                               std::to_string(it.arms[0]) + " vs argmax " + std::to_string(best));
      }
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " post-initialization selections all equal the brute-force argmax";
  return o;
}

Outcome borda_equivalence() {
  Outcome o;
  int checked = 0;
  for (const std::string kind : {"linear", "square"})
    for (const std::string enc : {"difference", "concatenation"})
      for (int K : {4, 16}) {
        const json j = {{"task", "dueling"}, {"K", K}, {"d", 4}, {"T", 150}, {"repetitions", 5}, {"base_seed", 202},
                        {"environment", {{"reward", kind}}},
                        {"predictor", {{"kappa", 0.0}}},
                        {"agents", {{{"type", "ts_llm_db"}, {"N", K - 1}, {"pair_encoding", enc}, {"init_pairs", 0}}}}};
        const ExperimentConfig c = config_from_json(j);
        for (int r = 0; r < c.repetitions; ++r) {
          const RunRecord rec = run_single(c, c.agents[0], r);
          const RunStreams s(derive_run_seed(c.base_seed, static_cast<std::uint64_t>(r)));
          const ArmSet arms = generate_arms(K, 4, s.arms_seed);
          const int best = brute_force_argmax(latent_values(kind, arms, s, 4));
          for (const auto& it : rec.iterations) {
            ++checked;
            if (it.arms[0] != best)
              o.require(false, kind + "/" + enc + " K=" + std::to_string(K) + " seed " + std::to_string(r) + " t=" +
                                   std::to_string(it.iteration) + ": first arm " + std::to_string(it.arms[0]) +
                                   " vs argmax " + std::to_string(best));
          }
        }
      }
  if (o.pass) o.detail = std::to_string(checked) + " first-arm selections equal argmax f (linear and square latents)";
  return o;
}

Outcome regret_ordering() {
  Outcome o;
  const json j = {{"task", "mab"}, {"K", 16}, {"d", 4}, {"T", 100}, {"repetitions", 10}, {"base_seed", 303},
                  {"environment", {{"reward", "linear"}}},
                  {"predictor", {{"kappa", 0.3}}},
                  {"agents", {{{"type", "ts_llm"}, {"name", "ts"}},
                              {{"type", "ro_llm"}, {"name", "ro"}, {"gamma", 5.0}, {"mu", 16.0}},
                              {{"type", "random"}, {"name", "random"}}}}};
  const ExperimentConfig c = config_from_json(j);
  const double ts_mean = mean_final(c, agent_named(c, "ts"));
  const double ro_mean = mean_final(c, agent_named(c, "ro"));
  const double rnd = mean_final(c, agent_named(c, "random"));
  o.require(ts_mean <= 0.4 * rnd, "TS-LLM " + fmt(ts_mean) + " > 40% of random " + fmt(rnd));
  o.require(ro_mean <= 0.6 * rnd, "RO-LLM " + fmt(ro_mean) + " > 60% of random " + fmt(rnd));
  o.detail = (o.detail.empty() ? "" : o.detail + " | ") + "mean cumulative regret: random " + fmt(rnd) + ", TS-LLM " +
             fmt(ts_mean) + " (" + fmt(100 * ts_mean / rnd, 3) + "%), RO-LLM " + fmt(ro_mean) + " (" +
             fmt(100 * ro_mean / rnd, 3) + "%)";
  return o;
}

Outcome gamma_ablation() {
  Outcome o;
  const json j = {{"task", "mab"}, {"K", 16}, {"d", 4}, {"T", 100}, {"repetitions", 10}, {"base_seed", 404},
                  {"environment", {{"reward", "linear"}}},
                  {"predictor", {{"kappa", 0.0}, {"bias_std", 0.05}}},
                  {"agents", {{{"type", "ro_llm"}, {"name", "gamma1"}, {"gamma", 1.0}},
                              {{"type", "ro_llm"}, {"name", "gamma5"}, {"gamma", 5.0}}}}};
  const ExperimentConfig c = config_from_json(j);
  const double g1 = mean_final(c, agent_named(c, "gamma1"));
  const double g5 = mean_final(c, agent_named(c, "gamma5"));
  o.require(g1 > g5, "gamma=1 regret " + fmt(g1) + " not above gamma=5 regret " + fmt(g5));
  o.detail = (o.detail.empty() ? "" : o.detail + " | ") + "gamma=1: " + fmt(g1) + ", gamma=5: " + fmt(g5);
  return o;
}

Outcome n_ablation() {
  Outcome o;
  const json j = {{"task", "dueling"}, {"K", 16}, {"d", 4}, {"T", 100}, {"repetitions", 10}, {"base_seed", 505},
                  {"environment", {{"reward", "linear"}}},
                  {"predictor", {{"kappa", 0.0}, {"bias_std", 0.1}}},
                  {"agents", {{{"type", "ts_llm_db"}, {"name", "n15"}, {"N", 15}},
                              {{"type", "ts_llm_db"}, {"name", "n3"}, {"N", 3}}}}};
  const ExperimentConfig c = config_from_json(j);
  const double n15 = mean_final(c, agent_named(c, "n15"));
  const double n3 = mean_final(c, agent_named(c, "n3"));
  o.require(n15 <= n3, "N=15 first-arm regret " + fmt(n15) + " above N=3 " + fmt(n3));
  o.detail = (o.detail.empty() ? "" : o.detail + " | ") + "mean first-arm regret N=15: " + fmt(n15) + ", N=3: " + fmt(n3);
  return o;
}

Outcome prompt_fidelity() {
  Outcome o;
  for (TemplateId id : all_template_ids()) {
    const std::string name = to_string(id);
    const json fixture = json::parse(ts::slurp(ts::fixture("prompts/" + name + ".json")));
    const std::string golden = ts::slurp(ts::fixture("golden/" + name + ".txt"));
    const std::string rendered = render_fixture(id, fixture);
    if (rendered != golden) {
      std::size_t at = 0;
      while (at < rendered.size() && at < golden.size() && rendered[at] == golden[at]) ++at;
      o.require(false, name + " differs at byte " + std::to_string(at));
    }
  }
  if (o.pass) o.detail = "8/8 templates byte-identical to golden files";
  return o;
}

Outcome replay_determinism() {
  Outcome o;
  ts::StubServer stub([](const std::string& prompt, const json&) -> std::pair<int, std::string> {
    if (prompt.rfind("You are in a room", 0) == 0)
      return {200, "Thinking... <Answer>#blue:0.1,green:0.2,red:0.3,yellow:0.4#</Answer>"};
    const std::size_t h = std::hash<std::string>{}(prompt);
    char buf[32];
    std::snprintf(buf, sizeof buf, "#%.3f#", static_cast<double>(h % 2001) / 1000.0 - 1.0);
    return {200, buf};
  });
  ts::TempDir tmp("replay");
  const auto log = tmp.path() / "responses.log";
  json j = {{"task", "mab"}, {"K", 4}, {"d", 2}, {"T", 8}, {"repetitions", 1}, {"base_seed", 606},
            {"predictor", {{"backend", "llm"}}},
            {"gateway", {{"mode", "record"}, {"log", log.string()}, {"model", "stub-model"}}},
            {"agents", {{{"type", "ts_llm"}}, {{"type", "ro_llm"}}, {{"type", "direct"}, {"variant", "historyfeature"}}}},
            {"output_dir", (tmp.path() / "recorded").string()}};
  const ExperimentConfig rec_cfg = config_from_json(j);
  RunnerHooks hooks;
  hooks.transport = std::make_shared<HttplibTransport>(stub.base_url());
  const auto recorded = run_experiment(rec_cfg, hooks);
  for (const auto& r : recorded) o.require(!r.failed, "record run failed: " + r.error);
  const int recorded_requests = stub.requests();
  o.require(recorded_requests > 0, "record mode made no requests");

  j["gateway"]["mode"] = "replay";
  j["output_dir"] = (tmp.path() / "replayed").string();
  const ExperimentConfig rep_cfg = config_from_json(j);
  auto watched = std::make_shared<HttplibTransport>(stub.base_url());
  RunnerHooks replay_hooks;
  replay_hooks.transport = watched;
  const auto replayed = run_experiment(rep_cfg, replay_hooks);
  for (const auto& r : replayed) o.require(!r.failed, "replay run failed: " + r.error);

  o.require(watched->operations() == 0, "replay performed " + std::to_string(watched->operations()) + " network operations");
  o.require(stub.requests() == recorded_requests, "stub saw requests during replay");
  int files = 0;
  for (const auto& agent : rec_cfg.agents) {
    for (const std::string f : {"rep_0.jsonl", "rep_0.transcript.jsonl"}) {
      const auto a = ts::slurp(tmp.path() / "recorded" / "runs" / agent.name / f);
      const auto b = ts::slurp(tmp.path() / "replayed" / "runs" / agent.name / f);
      o.require(!a.empty() && a == b, agent.name + "/" + f + " differs between record and replay");
      ++files;
    }
  }
  if (o.pass)
    o.detail = std::to_string(files) + " record files byte-identical; " + std::to_string(recorded_requests) +
               " recorded requests, 0 network operations on replay";
  return o;
}

struct ParseCase {
  bool distribution;
  std::string text;
  bool accept;
  std::vector<double> expected;  // one value for scalars, K for distributions
};

std::vector<ParseCase> parser_corpus() {
  return {
      // scalar: valid, prose-wrapped, tagged, malformed
      {false, "#3.14#", true, {3.14}},
      {false, "The value is #-0.5# based on the trend.", true, {-0.5}},
      {false, "no idea", false, {}},
      {false, "#abc#", false, {}},
      {false, "#1.0# and later #2.0#", false, {}},
      {false, "#0.25# so again #0.25#", true, {0.25}},
      {false, "# 0.7 #", true, {0.7}},
      {false, "#+2#", true, {2.0}},
      {false, "#1e-3#", true, {0.001}},
      {false, "##", false, {}},
      {false, "#0.5", false, {}},
      {false, "#nan#", false, {}},
      {false, "#inf#", false, {}},
      {false, "#1,000#", false, {}},
      {false, "Sure! #0.42#", true, {0.42}},
      {false, "#-0#", true, {0.0}},
      {false, "#1.2.3#", false, {}},
      {false, "value: 0.8", false, {}},
      {false, "#function value#", false, {}},
      {false, "#0.9#\n", true, {0.9}},
      {false, "Prediction:\n#-1.25#\nDone.", true, {-1.25}},
      {false, "#0.3# (see #note#)", true, {0.3}},
      {false, "#.5#", true, {0.5}},
      {false, "#12#", true, {12.0}},
      {false, "", false, {}},
      // distribution over (blue, green, red)
      {true, "#blue:0.5,green:0.5#", true, {0.5, 0.5, 0.0}},
      {true, "<Answer>#blue:1.0,green:0.0#</Answer>", true, {1.0, 0.0, 0.0}},
      {true, "#blue:0.9,green:0.9#", false, {}},
      {true, "Let's think. <Answer>#blue:0.2,green:0.3,red:0.5#</Answer>", true, {0.2, 0.3, 0.5}},
      {true, "#purple:1.0#", false, {}},
      {true, "#blue:0.5,blue:0.5#", false, {}},
      {true, "#blue=0.5,green=0.5#", false, {}},
      {true, "#blue:0.6,green:0.3#", false, {}},
      {true, "#'blue':0.5,'green':0.5#", true, {0.5, 0.5, 0.0}},
      {true, "#blue: 0.25, green: 0.25, red: 0.5#", true, {0.25, 0.25, 0.5}},
      {true, "<Answer>blue:0.5,green:0.5</Answer>", true, {0.5, 0.5, 0.0}},
      {true, "<Answer>#blue:0.5,green:0.5#", false, {}},
      {true, "nothing here", false, {}},
      {true, "#blue:1.2,green:-0.2#", false, {}},
      {true, "#blue:1.0000000000001,green:-0.0000000000001#", true, {1.0, 0.0, 0.0}},
      {true, "#blue:abc,green:1#", false, {}},
      {true, "#blue:0.5,green:0.5,#", true, {0.5, 0.5, 0.0}},
      {true, "#blue:0.5,,green:0.5#", false, {}},
      {true, "#red:1#", true, {0.0, 0.0, 1.0}},
      {true, "#[blue]:0.5,[green]:0.5#", true, {0.5, 0.5, 0.0}},
      {true, "First #blue:1.0# then <Answer>#green:1.0#</Answer>", true, {0.0, 1.0, 0.0}},
      {true, "#blue:0.333333333333,green:0.333333333333,red:0.333333333334#", true, {1.0 / 3, 1.0 / 3, 1.0 / 3}},
      {true, "#blue:0.5,green:0.4999#", false, {}},
      {true, "<Answer></Answer>", false, {}},
      {true, "#BLUE:1.0#", false, {}},
  };
}

Outcome parser_robustness() {
  Outcome o;
  const std::vector<std::string> labels{"blue", "green", "red"};
  const auto corpus = parser_corpus();
  o.require(corpus.size() == 50, "corpus has " + std::to_string(corpus.size()) + " cases");
  int agreed = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& c = corpus[i];
    bool accepted = false;
    bool values_ok = true;
    try {
      if (c.distribution) {
        const auto p = parse_distribution_response(c.text, labels);
        accepted = true;
        for (std::size_t k = 0; k < labels.size() && c.accept; ++k) values_ok &= std::abs(p[k] - c.expected[k]) <= 1e-9;
      } else {
        const double v = parse_scalar_response(c.text);
        accepted = true;
        if (c.accept) values_ok = std::abs(v - c.expected[0]) <= 1e-12;
      }
    } catch (const ParseError&) {
      accepted = false;
    }
    if (accepted == c.accept && values_ok) {
      ++agreed;
    } else {
      o.require(false, "case " + std::to_string(i + 1) + " '" + c.text + "' " + (accepted ? "accepted" : "rejected") +
                           (values_ok ? "" : " with wrong values"));
    }
  }
  if (o.pass) o.detail = std::to_string(agreed) + "/50 cases match the expected accept/reject outcome and values";
  return o;
}

Outcome statistical_sanity() {
  Outcome o;
  const ArmSet arms = generate_arms(4, 3, 9);
  const RewardFunction f({RewardKind::linear, generate_theta(3, 10), 0.4, 0}, arms);
  const FeatureVector x = arms.arm(2);
  Rng rng(12);
  const int n = 10000;
  std::vector<double> ys(n);
  for (auto& y : ys) y = observe_reward(f, NoiseSpec{0.02}, x, rng);
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double ss = 0.0;
  for (double y : ys) ss += (y - mean) * (y - mean);
  const double var = ss / (n - 1);
  o.require(std::abs(var - 0.02) <= 0.2 * 0.02, "observation variance " + fmt(var));

  // Marginal of one arm; a far-away second arm keeps the set valid without correlating.
  Eigen::MatrixXd pts(2, 4);
  pts << 0.3, -0.2, 0.9, 0.1, 50.0, 50.0, 50.0, 50.0;
  const ArmSet pair(pts);
  double s1 = 0.0, s2 = 0.0;
  for (int seed = 0; seed < n; ++seed) {
    const double g = sample_gp_reward_table(pair, 0.4, static_cast<std::uint64_t>(seed))(0);
    s1 += g;
    s2 += g * g;
  }
  const double gm = s1 / n;
  const double gv = (s2 - n * gm * gm) / (n - 1);
  o.require(std::abs(gm) <= 0.05, "GP marginal mean " + fmt(gm));
  o.require(std::abs(gv - 1.0) <= 0.1, "GP marginal variance " + fmt(gv));
  o.detail = (o.detail.empty() ? "" : o.detail + " | ") + "noise variance " + fmt(var) + " (target 0.02 +/- 20%); GP mean " +
             fmt(gm) + ", variance " + fmt(gv);
  return o;
}

struct Criterion {
  int id;
  const char* name;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "formula exactness", 1.0, formula_exactness},
      {2, "BTL checks", 1.0, btl_checks},
      {3, "temperature schedules", 1.0, temperature_schedules},
      {4, "exact-oracle degeneracies", 10.0, exact_oracle_degeneracies},
      {5, "Borda equivalence", 30.0, borda_equivalence},
      {6, "regret ordering under noisy oracles", 120.0, regret_ordering},
      {7, "gamma ablation direction", 120.0, gamma_ablation},
      {8, "N ablation direction", 180.0, n_ablation},
      {9, "prompt fidelity", 1.0, prompt_fidelity},
      {10, "replay determinism", 5.0, replay_determinism},
      {11, "parser robustness", 1.0, parser_robustness},
      {12, "statistical sanity", 5.0, statistical_sanity},
  };
  std::optional<int> only;
  if (argc > 1) only = std::stoi(argv[1]);

  int failures = 0;
  for (const auto& c : all) {
    if (only && *only != c.id) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (secs > c.limit_seconds) o.require(false, "runtime " + fmt(secs, 3) + "s over the " + fmt(c.limit_seconds) + "s limit");
    failures += o.pass ? 0 : 1;
    std::printf("criterion %2d %s  %s: %s  [%.2fs, limit %gs]\n", c.id, o.pass ? "PASS" : "FAIL", c.name,
                o.detail.c_str(), secs, c.limit_seconds);
  }
  std::fflush(stdout);
  return failures ? 1 : 0;
}
