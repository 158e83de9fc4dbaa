#include "llmbandit/runner.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>

namespace llmbandit {

using nlohmann::json;

const char* to_string(TaskKind t) {
  switch (t) {
    case TaskKind::mab: return "mab";
    case TaskKind::dueling: return "dueling";
    case TaskKind::contextual: return "contextual";
  }
  return "?";
}

const char* to_string(AgentType t) {
  switch (t) {
    case AgentType::ts_llm: return "ts_llm";
    case AgentType::ro_llm: return "ro_llm";
    case AgentType::ts_llm_db: return "ts_llm_db";
    case AgentType::random: return "random";
    case AgentType::direct: return "direct";
  }
  return "?";
}

namespace {

TaskKind parse_task(const std::string& s) {
  if (s == "mab") return TaskKind::mab;
  if (s == "dueling") return TaskKind::dueling;
  if (s == "contextual") return TaskKind::contextual;
  throw std::invalid_argument("unknown task: " + s);
}

AgentType parse_agent_type(const std::string& s) {
  for (AgentType t : {AgentType::ts_llm, AgentType::ro_llm, AgentType::ts_llm_db, AgentType::random, AgentType::direct})
    if (s == to_string(t)) return t;
  throw std::invalid_argument("unknown agent type: " + s);
}

BaselineVariant parse_variant(const std::string& s) {
  for (BaselineVariant v : {BaselineVariant::nofeature, BaselineVariant::framingfeature, BaselineVariant::historyfeature})
    if (s == to_string(v)) return v;
  throw std::invalid_argument("unknown baseline variant: " + s);
}

const char* to_string(GatewayMode m) {
  switch (m) {
    case GatewayMode::live: return "live";
    case GatewayMode::record: return "record";
    case GatewayMode::replay: return "replay";
  }
  return "?";
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw std::invalid_argument(where + " must be an object");
  for (const auto& [k, _] : j.items())
    if (!allowed.count(k)) throw std::invalid_argument("unknown key '" + k + "' in " + where);
}

TemperatureSchedule schedule_from_json(const json& j, TemperatureSchedule fallback, const std::string& where) {
  if (j.is_null()) return fallback;
  check_keys(j, {"base", "rate", "cap", "floor"}, where);
  TemperatureSchedule s;
  s.base = j.value("base", fallback.base);
  s.rate = j.value("rate", fallback.rate);
  s.cap = j.value("cap", fallback.cap);
  if (j.contains("floor")) s.floor = j.at("floor").get<double>();
  s.validate();
  return s;
}

json schedule_to_json(const TemperatureSchedule& s) {
  return {{"base", s.base}, {"rate", s.rate}, {"cap", s.cap}, {"floor", s.effective_floor()}};
}

json get_or_null(const json& j, const char* key) { return j.contains(key) ? j.at(key) : json(); }

}  // namespace

ExperimentConfig config_from_json(const json& j) {
  check_keys(j, {"task", "K", "d", "T", "repetitions", "base_seed", "init_pulls", "environment", "predictor",
                 "gateway", "agents", "output_dir", "parallel_predictions"},
             "config");
  ExperimentConfig c;
  c.task = parse_task(j.value("task", std::string("mab")));
  c.num_arms = j.value("K", c.num_arms);
  c.dim = j.value("d", c.dim);
  c.horizon = j.value("T", c.horizon);
  c.repetitions = j.value("repetitions", c.repetitions);
  c.base_seed = j.value("base_seed", c.base_seed);
  c.init_pulls = j.value("init_pulls", c.init_pulls);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.parallel_predictions = j.value("parallel_predictions", c.parallel_predictions);

  if (j.contains("environment")) {
    const auto& e = j.at("environment");
    check_keys(e, {"reward", "gp_lengthscale", "noise_variance", "sharpness", "dataset"}, "environment");
    c.reward = parse_reward_kind(e.value("reward", std::string("linear")));
    c.gp_lengthscale = e.value("gp_lengthscale", c.gp_lengthscale);
    c.noise.variance = e.value("noise_variance", c.noise.variance);
    c.sharpness = e.value("sharpness", c.sharpness);
    if (e.contains("dataset")) {
      const auto& d = e.at("dataset");
      check_keys(d, {"path", "max_words", "max_chars", "pool", "pool_size"}, "environment.dataset");
      c.dataset.path = d.value("path", std::string());
      c.dataset.filter.max_context_words = d.value("max_words", 0);
      c.dataset.filter.max_context_chars = d.value("max_chars", 0);
      c.dataset.filter.arm_pool_size = d.value("pool_size", 10);
      if (d.contains("pool"))
        for (const auto& label : d.at("pool"))
          c.dataset.filter.pool.push_back(label.is_string() ? label.get<std::string>() : label.dump());
    }
  }
  if (j.contains("predictor")) {
    const auto& p = j.at("predictor");
    check_keys(p, {"backend", "kappa", "bias_std", "max_tokens", "max_prompt_chars"}, "predictor");
    c.predictor.backend = p.value("backend", c.predictor.backend);
    c.predictor.kappa = p.value("kappa", c.predictor.kappa);
    c.predictor.bias_std = p.value("bias_std", c.predictor.bias_std);
    c.predictor.max_tokens = p.value("max_tokens", c.predictor.max_tokens);
    c.predictor.max_prompt_chars = p.value("max_prompt_chars", c.predictor.max_prompt_chars);
  }
  if (j.contains("gateway")) {
    const auto& g = j.at("gateway");
    check_keys(g, {"mode", "log", "model", "api_base", "requests_per_minute", "max_tries", "backoff_ms"}, "gateway");
    c.gateway.mode = parse_gateway_mode(g.value("mode", std::string("live")));
    c.gateway.log_path = g.value("log", std::string());
    c.gateway.model = g.value("model", std::string());
    c.gateway.api_base = g.value("api_base", std::string());
    c.gateway.requests_per_minute = g.value("requests_per_minute", 0.0);
    c.gateway.max_tries = g.value("max_tries", 5);
    c.gateway.backoff_ms = g.value("backoff_ms", 1000);
  }

  std::set<std::string> names;
  for (const auto& a : j.value("agents", json::array())) {
    check_keys(a, {"type", "name", "schedule", "init_pulls", "gamma", "mu", "N", "first_schedule", "second_schedule",
                   "pair_encoding", "allow_self_duel", "init_pairs", "variant", "temperature"},
               "agent");
    AgentSpec s;
    s.type = parse_agent_type(a.at("type").get<std::string>());
    s.ts.schedule = schedule_from_json(get_or_null(a, "schedule"), s.ts.schedule, "agent.schedule");
    if (a.contains("init_pulls")) {
      s.init_pulls = a.at("init_pulls").get<int>();
      s.ts.init_pulls = *s.init_pulls;
    } else {
      s.ts.init_pulls = c.init_pulls;
    }
    s.ro.gamma = a.value("gamma", s.ro.gamma);
    if (a.contains("mu")) s.ro.mu = a.at("mu").get<double>();
    TsLlmDbConfig db_defaults = c.reward == RewardKind::linear ? TsLlmDbConfig{} : square_dueling_defaults();
    s.db = db_defaults;
    s.db.num_opponents = a.value("N", std::min(db_defaults.num_opponents, c.num_arms - 1));
    s.db.first_arm_schedule = schedule_from_json(get_or_null(a, "first_schedule"), db_defaults.first_arm_schedule,
                                                 "agent.first_schedule");
    s.db.second_arm_schedule = schedule_from_json(get_or_null(a, "second_schedule"),
                                                  db_defaults.second_arm_schedule, "agent.second_schedule");
    if (a.contains("pair_encoding")) s.db.pair_encoding = parse_pair_encoding(a.at("pair_encoding").get<std::string>());
    s.db.allow_self_duel = a.value("allow_self_duel", false);
    s.db.init_pairs = a.value("init_pairs", db_defaults.init_pairs);
    if (a.contains("variant")) s.variant = parse_variant(a.at("variant").get<std::string>());
    s.direct_temperature = a.value("temperature", s.direct_temperature);

    std::string name = a.value("name", std::string());
    if (name.empty()) {
      name = to_string(s.type);
      if (s.type == AgentType::direct) name += std::string("_") + to_string(s.variant);
      for (int n = 2; names.count(name); ++n) name = std::string(to_string(s.type)) + "_" + std::to_string(n);
    }
    if (!names.insert(name).second) throw std::invalid_argument("duplicate agent name: " + name);
    s.name = name;
    c.agents.push_back(std::move(s));
  }
  c.validate();
  return c;
}

void ExperimentConfig::validate() const {
  if (horizon < 1) throw std::invalid_argument("T must be >= 1");
  if (repetitions < 1) throw std::invalid_argument("repetitions must be >= 1");
  if (task != TaskKind::contextual && (num_arms < 2 || dim < 1)) throw std::invalid_argument("need K >= 2 and d >= 1");
  if (init_pulls < 0) throw std::invalid_argument("init_pulls must be >= 0");
  if (noise.variance < 0.0) throw std::invalid_argument("noise variance must be >= 0");
  if (!(sharpness > 0.0)) throw std::invalid_argument("sharpness must be > 0");
  if (!(gp_lengthscale > 0.0)) throw std::invalid_argument("gp_lengthscale must be > 0");
  if (predictor.backend != "oracle" && predictor.backend != "llm")
    throw std::invalid_argument("predictor.backend must be oracle or llm");
  if (predictor.kappa < 0.0 || predictor.bias_std < 0.0) throw std::invalid_argument("oracle noise must be >= 0");
  if (agents.empty()) throw std::invalid_argument("config lists no agents");
  if (task == TaskKind::contextual && dataset.path.empty())
    throw std::invalid_argument("contextual task needs environment.dataset.path");
  if (task == TaskKind::dueling && reward == RewardKind::gp_sample)
    throw std::invalid_argument("dueling task supports closed-form latent rewards only");
  const bool uses_gateway = predictor.backend == "llm" ||
                            std::any_of(agents.begin(), agents.end(), [](const AgentSpec& a) { return a.type == AgentType::direct; });
  if (uses_gateway && gateway.mode != GatewayMode::live && gateway.log_path.empty())
    throw std::invalid_argument("gateway record/replay mode needs gateway.log");
  for (const auto& a : agents) {
    const bool ok = [&] {
      switch (task) {
        case TaskKind::mab: return a.type != AgentType::ts_llm_db;
        case TaskKind::dueling: return a.type == AgentType::ts_llm_db || a.type == AgentType::random;
        case TaskKind::contextual: return a.type == AgentType::ts_llm || a.type == AgentType::random || a.type == AgentType::direct;
      }
      return false;
    }();
    if (!ok) throw std::invalid_argument(std::string("agent type ") + to_string(a.type) + " does not fit task " + to_string(task));
    if (a.type == AgentType::ts_llm && a.ts.init_pulls < 1 && task == TaskKind::mab)
      throw std::invalid_argument("TS-LLM init_pulls must be >= 1");
    if (a.type == AgentType::ro_llm) {
      if (!(a.ro.gamma > 0.0)) throw std::invalid_argument("RO-LLM gamma must be > 0");
      if (a.ro.mu && !(*a.ro.mu > 0.0)) throw std::invalid_argument("RO-LLM mu must be > 0");
    }
    if (a.type == AgentType::ts_llm_db && (a.db.num_opponents < 1 || a.db.num_opponents > num_arms - 1))
      throw std::invalid_argument("TS-LLM-DB needs 1 <= N <= K-1");
    if (a.type == AgentType::ts_llm_db && a.db.init_pairs < 0) throw std::invalid_argument("init_pairs must be >= 0");
  }
}

json config_to_json(const ExperimentConfig& c, bool provenance_only) {
  json j;
  j["task"] = to_string(c.task);
  j["K"] = c.num_arms;
  j["d"] = c.dim;
  j["T"] = c.horizon;
  j["repetitions"] = c.repetitions;
  j["base_seed"] = c.base_seed;
  j["init_pulls"] = c.init_pulls;
  json env = {{"reward", to_string(c.reward)},
              {"gp_lengthscale", c.gp_lengthscale},
              {"noise_variance", c.noise.variance},
              {"sharpness", c.sharpness}};
  if (c.task == TaskKind::contextual)
    env["dataset"] = {{"path", c.dataset.path},
                      {"max_words", c.dataset.filter.max_context_words},
                      {"max_chars", c.dataset.filter.max_context_chars},
                      {"pool", c.dataset.filter.pool},
                      {"pool_size", c.dataset.filter.arm_pool_size}};
  j["environment"] = env;
  j["predictor"] = {{"backend", c.predictor.backend},
                    {"kappa", c.predictor.kappa},
                    {"bias_std", c.predictor.bias_std},
                    {"max_tokens", c.predictor.max_tokens},
                    {"max_prompt_chars", c.predictor.max_prompt_chars}};
  json gw = {{"model", c.gateway.model}};
  if (!provenance_only) {
    gw["mode"] = to_string(c.gateway.mode);
    gw["log"] = c.gateway.log_path;
    gw["api_base"] = c.gateway.api_base;
    gw["requests_per_minute"] = c.gateway.requests_per_minute;
    gw["max_tries"] = c.gateway.max_tries;
    gw["backoff_ms"] = c.gateway.backoff_ms;
  }
  j["gateway"] = gw;
  json agents = json::array();
  for (const auto& a : c.agents) {
    json aj = {{"name", a.name}, {"type", to_string(a.type)}};
    switch (a.type) {
      case AgentType::ts_llm:
        aj["schedule"] = schedule_to_json(a.ts.schedule);
        aj["init_pulls"] = a.ts.init_pulls;
        break;
      case AgentType::ro_llm:
        aj["gamma"] = a.ro.gamma;
        aj["mu"] = a.ro.mu_for(c.num_arms);
        aj["init_pulls"] = a.init_pulls.value_or(c.init_pulls);
        break;
      case AgentType::ts_llm_db:
        aj["N"] = a.db.num_opponents;
        aj["first_schedule"] = schedule_to_json(a.db.first_arm_schedule);
        aj["second_schedule"] = schedule_to_json(a.db.second_arm_schedule);
        aj["pair_encoding"] = to_string(a.db.pair_encoding);
        aj["allow_self_duel"] = a.db.allow_self_duel;
        aj["init_pairs"] = a.db.init_pairs;
        break;
      case AgentType::random:
        aj["init_pulls"] = a.init_pulls.value_or(c.init_pulls);
        break;
      case AgentType::direct:
        aj["variant"] = to_string(a.variant);
        aj["temperature"] = a.direct_temperature;
        aj["init_pulls"] = a.init_pulls.value_or(c.init_pulls);
        break;
    }
    agents.push_back(aj);
  }
  j["agents"] = agents;
  if (!provenance_only) {
    j["output_dir"] = c.output_dir;
    j["parallel_predictions"] = c.parallel_predictions;
  }
  return j;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

std::string config_digest(const ExperimentConfig& config) {
  return sha256_hex(config_to_json(config, true).dump());
}

RunStreams::RunStreams(std::uint64_t run_seed)
    : arms_seed(derive_stream_seed(run_seed, 1, 0)),
      theta_seed(derive_stream_seed(run_seed, 1, 1)),
      gp_seed(derive_stream_seed(run_seed, 1, 2)),
      agent_seed(derive_stream_seed(run_seed, 2)),
      observe_seed(derive_stream_seed(run_seed, 3)),
      bias_seed(derive_stream_seed(run_seed, 4)) {}

std::uint64_t derive_run_seed(std::uint64_t base_seed, std::uint64_t repetition) {
  // base + odd * (r + 1) is injective in r modulo 2^64 and mix64 is a bijection.
  return mix64(base_seed + 0x9e3779b97f4a7c15ULL * (repetition + 1));
}

// --- run records ------------------------------------------------------------

std::string serialize_run_record(const RunRecord& r) {
  std::string out;
  json header = {{"type", "header"},      {"method", r.method},
                 {"repetition", r.repetition}, {"seed", r.seed},
                 {"config_digest", r.config_digest}, {"metric", r.metric},
                 {"optimal_value", r.optimal_value}, {"iterations", r.iterations.size()},
                 {"config", r.config}};
  out += header.dump() + "\n";
  for (const auto& it : r.iterations) {
    json line = {{"type", "iteration"},
                 {"t", it.iteration},
                 {"init", it.init},
                 {"temperature", it.temperature ? json(*it.temperature) : json()},
                 {"arms", it.arms},
                 {"observation", it.observation},
                 {"value", it.value},
                 {"instantaneous", it.instantaneous},
                 {"cumulative", it.cumulative},
                 {"transcript", it.transcript_ref ? json(*it.transcript_ref) : json()}};
    if (it.second_temperature) line["second_temperature"] = *it.second_temperature;
    out += line.dump() + "\n";
  }
  return out;
}

RunRecord parse_run_record(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  RunRecord r;
  bool have_header = false;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    const std::string type = j.at("type").get<std::string>();
    if (type == "header") {
      r.method = j.at("method").get<std::string>();
      r.repetition = j.at("repetition").get<int>();
      r.seed = j.at("seed").get<std::uint64_t>();
      r.config_digest = j.at("config_digest").get<std::string>();
      r.metric = j.at("metric").get<std::string>();
      r.optimal_value = j.at("optimal_value").get<double>();
      r.config = j.at("config");
      expected = j.at("iterations").get<std::size_t>();
      have_header = true;
    } else if (type == "iteration") {
      if (!have_header) throw BanditError("run record: iteration before header");
      IterationRecord it;
      it.iteration = j.at("t").get<int>();
      it.init = j.at("init").get<bool>();
      if (!j.at("temperature").is_null()) it.temperature = j.at("temperature").get<double>();
      if (j.contains("second_temperature")) it.second_temperature = j.at("second_temperature").get<double>();
      it.arms = j.at("arms").get<std::vector<int>>();
      it.observation = j.at("observation").get<double>();
      it.value = j.at("value").get<double>();
      it.instantaneous = j.at("instantaneous").get<double>();
      it.cumulative = j.at("cumulative").get<double>();
      if (!j.at("transcript").is_null()) it.transcript_ref = j.at("transcript").get<std::string>();
      r.iterations.push_back(std::move(it));
    } else {
      throw BanditError("run record: unknown line type " + type);
    }
  }
  if (!have_header) throw BanditError("run record: missing header");
  if (r.iterations.size() != expected)
    throw BanditError("run record: expected " + std::to_string(expected) + " iterations, found " +
                      std::to_string(r.iterations.size()));
  return r;
}

void check_run_record(const RunRecord& r) {
  double running = 0.0;
  for (std::size_t i = 0; i < r.iterations.size(); ++i) {
    const auto& it = r.iterations[i];
    if (it.iteration != static_cast<int>(i) + 1) throw BanditError("run record: iterations out of order");
    running += it.instantaneous;
    if (std::abs(running - it.cumulative) > 1e-9 * std::max(1.0, std::abs(running)))
      throw BanditError("run record " + r.method + "/" + std::to_string(r.repetition) +
                        ": cumulative column disagrees with instantaneous values at t=" + std::to_string(it.iteration));
  }
}

// --- execution --------------------------------------------------------------

namespace {

std::shared_ptr<CachingGateway> make_gateway(const ExperimentConfig& c, const RunnerHooks& hooks) {
  const bool needed = c.predictor.backend == "llm" ||
                      std::any_of(c.agents.begin(), c.agents.end(), [](const AgentSpec& a) { return a.type == AgentType::direct; });
  if (!needed) return nullptr;
  if (c.gateway.mode == GatewayMode::replay) {
    // The client is wired only so an instrumented transport can confirm it stays unused.
    auto client = hooks.transport ? std::make_shared<ChatClient>(hooks.transport, ClientConfig{}) : nullptr;
    return std::make_shared<CachingGateway>(GatewayMode::replay, client, c.gateway.log_path);
  }
  const GatewayEnv env = GatewayEnv::from_environment();
  std::shared_ptr<HttpTransport> transport = hooks.transport;
  if (!transport) {
    const std::string base = !c.gateway.api_base.empty() ? c.gateway.api_base : env.api_base;
    if (base.empty()) throw std::invalid_argument("no LLM endpoint: set gateway.api_base or LLM_API_BASE");
    transport = std::make_shared<HttplibTransport>(base);
  }
  ClientConfig cc;
  cc.api_key = env.api_key;
  cc.max_tries = c.gateway.max_tries;
  cc.backoff_base = std::chrono::milliseconds(c.gateway.backoff_ms);
  cc.requests_per_minute = c.gateway.requests_per_minute;
  cc.sleep = hooks.sleep;
  auto client = std::make_shared<ChatClient>(transport, cc);
  return std::make_shared<CachingGateway>(c.gateway.mode, client, c.gateway.log_path);
}

std::string model_name(const ExperimentConfig& c) {
  if (!c.gateway.model.empty()) return c.gateway.model;
  const auto env = GatewayEnv::from_environment();
  if (!env.model.empty()) return env.model;
  throw std::invalid_argument("no model configured: set gateway.model or LLM_MODEL");
}

std::vector<std::string> arm_labels(const ArmSet& arms) {
  if (!arms.labels.empty()) return arms.labels;
  const auto& colors = default_button_labels();
  std::vector<std::string> out;
  for (int i = 0; i < arms.size(); ++i)
    out.push_back(i < static_cast<int>(colors.size()) ? colors[static_cast<std::size_t>(i)]
                                                      : "button" + std::to_string(i + 1));
  return out;
}

std::vector<int> distinct_arms(int num_arms, int count, Rng& rng) {
  std::vector<int> idx(static_cast<std::size_t>(num_arms));
  std::iota(idx.begin(), idx.end(), 0);
  count = std::min(count, num_arms);
  for (int k = 0; k < count; ++k) {
    std::uniform_int_distribution<int> pick(k, num_arms - 1);
    std::swap(idx[static_cast<std::size_t>(k)], idx[static_cast<std::size_t>(pick(rng))]);
  }
  idx.resize(static_cast<std::size_t>(count));
  return idx;
}

class TranscriptLog {
 public:
  explicit TranscriptLog(std::string file) : file_(std::move(file)) {}
  std::optional<std::string> add(int t, const std::vector<std::string>& responses, std::vector<std::string>& sink) {
    if (responses.empty()) return std::nullopt;
    sink.push_back(json({{"t", t}, {"responses", responses}}).dump());
    return file_ + ":" + std::to_string(sink.size());
  }

 private:
  std::string file_;
};

void finish_iteration(RunRecord& rec, IterationRecord it) {
  const double prev = rec.iterations.empty() ? 0.0 : rec.iterations.back().cumulative;
  it.cumulative = prev + it.instantaneous;
  rec.iterations.push_back(std::move(it));
}

void run_mab(const ExperimentConfig& c, const AgentSpec& agent, const RunStreams& s, RunRecord& rec,
             const std::shared_ptr<CachingGateway>& gateway) {
  const ArmSet arms = generate_arms(c.num_arms, c.dim, s.arms_seed);
  RewardFunctionSpec spec{c.reward, generate_theta(c.dim, s.theta_seed), c.gp_lengthscale, s.gp_seed};
  const RewardFunction f(spec, arms);
  rec.optimal_value = f.optimal_value();

  const HistoryKind kind = agent.type == AgentType::ro_llm ? HistoryKind::loss : HistoryKind::reward;
  History history(kind);
  std::vector<LabeledPull> pulls;
  Rng agent_rng(s.agent_seed);
  Rng observe_rng(s.observe_seed);
  const OracleSpec oracle{c.predictor.kappa, c.predictor.bias_std, s.bias_seed};

  std::unique_ptr<Predictor> predictor;
  if (agent.type == AgentType::ts_llm || agent.type == AgentType::ro_llm) {
    if (c.predictor.backend == "oracle") {
      predictor = std::make_unique<OracleRewardPredictor>(f, oracle);
    } else {
      LlmPredictor::Options o;
      o.model = model_name(c);
      o.max_tokens = c.predictor.max_tokens;
      o.prompt.max_chars = c.predictor.max_prompt_chars;
      predictor = std::make_unique<LlmPredictor>(gateway, o);
    }
  }
  DirectBaseline direct;
  std::vector<std::string> labels;
  if (agent.type == AgentType::direct) {
    direct = {agent.variant, gateway, model_name(c), agent.direct_temperature, 1024, 3};
    labels = arm_labels(arms);
  }

  const int init = agent.type == AgentType::ts_llm ? agent.ts.init_pulls : agent.init_pulls.value_or(c.init_pulls);
  const std::vector<int> init_arms = distinct_arms(arms.size(), init, agent_rng);
  const StepOptions opts{c.parallel_predictions};
  TranscriptLog tlog("rep_" + std::to_string(rec.repetition) + ".transcript.jsonl");

  for (int t = 1; t <= c.horizon; ++t) {
    IterationRecord it;
    it.iteration = t;
    int arm = 0;
    std::vector<std::string> responses;
    if (t <= static_cast<int>(init_arms.size())) {
      it.init = true;
      arm = init_arms[static_cast<std::size_t>(t - 1)];
    } else {
      switch (agent.type) {
        case AgentType::ts_llm: {
          auto sel = ts_llm_step(agent.ts, arms, history, *predictor, t, agent_rng, opts);
          arm = sel.arm;
          it.temperature = sel.temperature;
          responses = std::move(sel.transcript);
          break;
        }
        case AgentType::ro_llm: {
          auto sel = ro_llm_step(agent.ro, arms, history, *predictor, agent_rng, opts);
          arm = sel.arm;
          it.temperature = 0.0;
          responses = std::move(sel.transcript);
          break;
        }
        case AgentType::random: arm = baseline_random_step(arms.size(), agent_rng); break;
        case AgentType::direct: {
          auto sel = baseline_direct_step(direct, labels, arms.features, pulls, c.horizon, t, agent_rng);
          arm = sel.arm;
          it.temperature = sel.temperature;
          responses = std::move(sel.transcript);
          break;
        }
        case AgentType::ts_llm_db: throw std::logic_error("dueling agent in MAB task");
      }
    }
    const FeatureVector x = arms.arm(arm);
    const double y = observe_reward(f, c.noise, x, observe_rng);
    history.append_reward(x, kind == HistoryKind::loss ? -y : y);
    pulls.push_back({arm, y});
    it.arms = {arm};
    it.observation = y;
    it.value = f.arm_values()(arm);
    it.instantaneous = rec.optimal_value - it.value;
    it.transcript_ref = tlog.add(t, responses, rec.transcript);
    finish_iteration(rec, std::move(it));
  }
}

void run_dueling(const ExperimentConfig& c, const AgentSpec& agent, const RunStreams& s, RunRecord& rec,
                 const std::shared_ptr<CachingGateway>& gateway) {
  const ArmSet arms = generate_arms(c.num_arms, c.dim, s.arms_seed);
  RewardFunctionSpec spec{c.reward, generate_theta(c.dim, s.theta_seed), c.gp_lengthscale, s.gp_seed};
  const RewardFunction f(spec, arms);
  rec.optimal_value = f.optimal_value();

  History history(HistoryKind::preference);
  Rng agent_rng(s.agent_seed);
  Rng observe_rng(s.observe_seed);
  const OracleSpec oracle{c.predictor.kappa, c.predictor.bias_std, s.bias_seed};
  std::unique_ptr<Predictor> predictor;
  if (agent.type == AgentType::ts_llm_db) {
    if (c.predictor.backend == "oracle") {
      predictor = std::make_unique<OraclePreferencePredictor>(f, c.sharpness, oracle);
    } else {
      LlmPredictor::Options o;
      o.model = model_name(c);
      o.max_tokens = c.predictor.max_tokens;
      o.prompt.max_chars = c.predictor.max_prompt_chars;
      predictor = std::make_unique<LlmPredictor>(gateway, o);
    }
  }
  const PairEncoding enc = agent.db.pair_encoding;
  const int init = agent.type == AgentType::ts_llm_db ? agent.db.init_pairs : agent.init_pulls.value_or(1);
  const StepOptions opts{c.parallel_predictions};
  TranscriptLog tlog("rep_" + std::to_string(rec.repetition) + ".transcript.jsonl");

  for (int t = 1; t <= c.horizon; ++t) {
    IterationRecord it;
    it.iteration = t;
    int first = 0, second = 1;
    std::vector<std::string> responses;
    if (t <= init || agent.type == AgentType::random) {
      it.init = t <= init;
      const auto pair = distinct_arms(arms.size(), 2, agent_rng);
      first = pair[0];
      second = pair[1];
    } else {
      auto sel = ts_llm_db_step(agent.db, arms, history, *predictor, t, agent_rng, opts);
      first = sel.first;
      second = sel.second;
      it.temperature = sel.first_temperature;
      it.second_temperature = sel.second_temperature;
      responses = std::move(sel.transcript);
    }
    const FeatureVector x1 = arms.arm(first), x2 = arms.arm(second);
    const int outcome = sample_preference(f, c.sharpness, x1, x2, observe_rng);
    history.append_preference(pair_feature(x1, x2, enc), outcome);
    it.arms = {first, second};
    it.observation = outcome;
    it.value = f.arm_values()(first);
    it.instantaneous = rec.optimal_value - it.value;
    it.transcript_ref = tlog.add(t, responses, rec.transcript);
    finish_iteration(rec, std::move(it));
  }
}

void run_contextual(const ExperimentConfig& c, const AgentSpec& agent, const RunStreams& s, RunRecord& rec,
                    const std::shared_ptr<CachingGateway>& gateway) {
  const ContextualDataset data = load_contextual_dataset(c.dataset.path, c.dataset.filter);
  const auto& labels = data.arm_pool;
  rec.metric = "reward";
  rec.optimal_value = 1.0;

  History history(HistoryKind::text);
  Rng agent_rng(s.agent_seed);
  Rng order_rng(s.observe_seed);
  std::vector<std::size_t> order(data.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), order_rng);

  std::unique_ptr<Predictor> predictor;
  if (agent.type == AgentType::ts_llm) {
    if (c.predictor.backend == "oracle") {
      std::map<std::string, std::string> truth;
      for (const auto& r : data.records) truth[r.context_text] = r.correct_label;
      predictor = std::make_unique<OracleTextPredictor>(truth, OracleSpec{c.predictor.kappa, c.predictor.bias_std, s.bias_seed});
    } else {
      LlmPredictor::Options o;
      o.model = model_name(c);
      o.max_tokens = c.predictor.max_tokens;
      o.prompt.max_chars = c.predictor.max_prompt_chars;
      o.label_pool = labels;
      predictor = std::make_unique<LlmPredictor>(gateway, o);
    }
  }
  DirectBaseline direct;
  if (agent.type == AgentType::direct) direct = {agent.variant, gateway, model_name(c), agent.direct_temperature, 64, 3};

  const int init = agent.type == AgentType::ts_llm ? agent.ts.init_pulls : agent.init_pulls.value_or(c.init_pulls);
  const StepOptions opts{c.parallel_predictions};
  TranscriptLog tlog("rep_" + std::to_string(rec.repetition) + ".transcript.jsonl");

  for (int t = 1; t <= c.horizon; ++t) {
    const ContextualRecord& ctx = data.records[order[static_cast<std::size_t>(t - 1) % order.size()]];
    IterationRecord it;
    it.iteration = t;
    int arm = 0;
    std::vector<std::string> responses;
    if (t <= init || agent.type == AgentType::random) {
      it.init = t <= init;
      arm = baseline_random_step(static_cast<int>(labels.size()), agent_rng);
    } else if (agent.type == AgentType::ts_llm) {
      auto sel = ts_llm_text_step(agent.ts.schedule, labels, history, *predictor, ctx.title, ctx.context_text, t,
                                  agent_rng, opts);
      arm = sel.arm;
      it.temperature = sel.temperature;
      responses = std::move(sel.transcript);
    } else {
      auto sel = text_direct_step(direct, labels, history, ctx.title, ctx.context_text, t);
      arm = sel.arm;
      it.temperature = sel.temperature;
      responses = std::move(sel.transcript);
    }
    const std::string& chosen = labels[static_cast<std::size_t>(arm)];
    const double reward = chosen == ctx.correct_label ? 1.0 : 0.0;
    history.append_text({ctx.title, ctx.context_text, chosen, reward});
    it.arms = {arm};
    it.observation = reward;
    it.value = reward;
    it.instantaneous = reward;
    it.transcript_ref = tlog.add(t, responses, rec.transcript);
    finish_iteration(rec, std::move(it));
  }
}

RunRecord run_one(const ExperimentConfig& c, const AgentSpec& agent, int repetition,
                  const std::shared_ptr<CachingGateway>& gateway) {
  RunRecord rec;
  rec.method = agent.name;
  rec.repetition = repetition;
  rec.seed = derive_run_seed(c.base_seed, static_cast<std::uint64_t>(repetition));
  rec.config = config_to_json(c, true);
  rec.config_digest = config_digest(c);
  const RunStreams streams(rec.seed);
  const auto start = std::chrono::steady_clock::now();
  switch (c.task) {
    case TaskKind::mab: run_mab(c, agent, streams, rec, gateway); break;
    case TaskKind::dueling: run_dueling(c, agent, streams, rec, gateway); break;
    case TaskKind::contextual: run_contextual(c, agent, streams, rec, gateway); break;
  }
  rec.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw BanditError("cannot write " + tmp);
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw BanditError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

RunRecord run_single(const ExperimentConfig& config, const AgentSpec& agent, int repetition, const RunnerHooks& hooks) {
  config.validate();
  return run_one(config, agent, repetition, make_gateway(config, hooks));
}

std::filesystem::path run_file(const std::filesystem::path& output_dir, const std::string& method, int repetition) {
  return output_dir / "runs" / method / ("rep_" + std::to_string(repetition) + ".jsonl");
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const RunnerHooks& hooks) {
  config.validate();
  const auto gateway = make_gateway(config, hooks);
  const std::string digest = config_digest(config);
  const std::filesystem::path out_dir = config.output_dir;
  std::filesystem::create_directories(out_dir);
  write_atomic(out_dir / "config.resolved.json", config_to_json(config).dump(2) + "\n");

  std::vector<RunRecord> records;
  for (const auto& agent : config.agents) {
    for (int r = 0; r < config.repetitions; ++r) {
      const auto path = run_file(out_dir, agent.name, r);
      const auto failed_path = path.parent_path() / ("rep_" + std::to_string(r) + ".failed.json");
      if (std::filesystem::exists(path)) {
        try {
          RunRecord existing = parse_run_record(read_file(path));
          check_run_record(existing);
          if (existing.config_digest == digest && existing.method == agent.name && existing.repetition == r &&
              static_cast<int>(existing.iterations.size()) == config.horizon) {
            records.push_back(std::move(existing));
            continue;
          }
        } catch (const std::exception& e) {
          std::cerr << "warning: re-running " << path.string() << ": " << e.what() << '\n';
        }
      }
      try {
        RunRecord rec = run_one(config, agent, r, gateway);
        if (!rec.transcript.empty()) {
          std::string lines;
          for (const auto& l : rec.transcript) lines += l + "\n";
          write_atomic(path.parent_path() / ("rep_" + std::to_string(r) + ".transcript.jsonl"), lines);
        }
        write_atomic(path.parent_path() / ("rep_" + std::to_string(r) + ".timing.json"),
                     json({{"wall_clock_seconds", rec.wall_clock_seconds}}).dump() + "\n");
        write_atomic(path, serialize_run_record(rec));
        std::filesystem::remove(failed_path);
        records.push_back(std::move(rec));
      } catch (const std::exception& e) {
        std::cerr << "error: " << agent.name << " repetition " << r << " failed: " << e.what() << '\n';
        RunRecord rec;
        rec.method = agent.name;
        rec.repetition = r;
        rec.seed = derive_run_seed(config.base_seed, static_cast<std::uint64_t>(r));
        rec.config_digest = digest;
        rec.failed = true;
        rec.error = e.what();
        write_atomic(failed_path, json({{"method", rec.method}, {"repetition", r}, {"seed", rec.seed},
                                        {"config_digest", digest}, {"error", rec.error}}).dump() + "\n");
        records.push_back(std::move(rec));
      }
    }
  }
  return records;
}

std::vector<RunRecord> load_run_records(const std::filesystem::path& output_dir) {
  std::vector<RunRecord> out;
  const auto runs = output_dir / "runs";
  if (!std::filesystem::exists(runs)) throw BanditError("no runs directory under " + output_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::recursive_directory_iterator(runs)) {
    const auto name = e.path().filename().string();
    if (!e.is_regular_file() || name.rfind("rep_", 0) != 0) continue;
    if (name.ends_with(".failed.json") || (name.ends_with(".jsonl") && name.find(".transcript.") == std::string::npos))
      files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    if (f.string().ends_with(".failed.json")) {
      const auto j = json::parse(read_file(f));
      RunRecord r;
      r.method = j.at("method").get<std::string>();
      r.repetition = j.at("repetition").get<int>();
      r.failed = true;
      r.error = j.at("error").get<std::string>();
      out.push_back(std::move(r));
      continue;
    }
    RunRecord r = parse_run_record(read_file(f));
    check_run_record(r);
    out.push_back(std::move(r));
  }
  // Order by method as listed in configs is unknown here; sort by (method, repetition).
  std::stable_sort(out.begin(), out.end(), [](const RunRecord& a, const RunRecord& b) {
    return a.method != b.method ? a.method < b.method : a.repetition < b.repetition;
  });
  return out;
}

// --- aggregation and plot data ----------------------------------------------

Summary aggregate(const std::vector<RunRecord>& records) {
  Summary s;
  std::map<std::string, std::vector<const RunRecord*>> by_method;
  bool metric_set = false;
  for (const auto& r : records) {
    if (std::find(s.methods.begin(), s.methods.end(), r.method) == s.methods.end()) s.methods.push_back(r.method);
    if (r.failed) {
      ++s.failed[r.method];
      continue;
    }
    if (metric_set && r.metric != s.metric) throw BanditError("aggregate: mixed metrics across records");
    s.metric = r.metric;
    metric_set = true;
    by_method[r.method].push_back(&r);
  }
  for (const auto& method : s.methods) {
    const auto& runs = by_method[method];
    if (runs.empty()) throw BanditError("aggregate: no successful repetition for " + method);
    const std::size_t horizon = runs.front()->iterations.size();
    for (const auto* r : runs)
      if (r->iterations.size() != horizon) throw BanditError("aggregate: mixed horizons for " + method);
    const double n = static_cast<double>(runs.size());
    for (std::size_t t = 0; t < horizon; ++t) {
      double mean = 0.0;
      for (const auto* r : runs) mean += r->iterations[t].cumulative;
      mean /= n;
      double ss = 0.0;
      for (const auto* r : runs) ss += (r->iterations[t].cumulative - mean) * (r->iterations[t].cumulative - mean);
      const double se = runs.size() > 1 ? std::sqrt(ss / (n - 1.0)) / std::sqrt(n) : 0.0;
      s.rows.push_back({method, static_cast<int>(t) + 1, mean, se, static_cast<int>(runs.size())});
    }
  }
  return s;
}

namespace {

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string svg_plot(const Summary& s) {
  const double width = 720, height = 440, left = 70, right = 180, top = 30, bottom = 50;
  const double pw = width - left - right, ph = height - top - bottom;
  int max_t = 1;
  double lo = 0.0, hi = 0.0;
  for (const auto& r : s.rows) {
    max_t = std::max(max_t, r.iteration);
    lo = std::min(lo, r.mean - r.stderr_);
    hi = std::max(hi, r.mean + r.stderr_);
  }
  if (hi - lo <= 0.0) hi = lo + 1.0;
  auto x = [&](double t) { return left + pw * (max_t > 1 ? (t - 1.0) / (max_t - 1.0) : 0.5); };
  auto y = [&](double v) { return top + ph * (1.0 - (v - lo) / (hi - lo)); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

  std::ostringstream o;
  o.setf(std::ios::fixed);
  o.precision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
    << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\" stroke=\"black\"/>\n";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\" font-size=\"13\">iteration</text>\n";
  o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 " << top + ph / 2
    << ")\" text-anchor=\"middle\">mean cumulative " << s.metric << " (+/- standard error)</text>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = lo + (hi - lo) * k / 4.0;
    o << "<text x=\"" << left - 6 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\" font-size=\"11\">" << v << "</text>\n";
  }
  o << "<text x=\"" << left << "\" y=\"" << top + ph + 16 << "\" font-size=\"11\" text-anchor=\"middle\">1</text>\n";
  o << "<text x=\"" << left + pw << "\" y=\"" << top + ph + 16 << "\" font-size=\"11\" text-anchor=\"middle\">" << max_t
    << "</text>\n";
  for (std::size_t m = 0; m < s.methods.size(); ++m) {
    const char* color = colors[m % 8];
    std::ostringstream band_hi, band_lo, line;
    band_hi.setf(std::ios::fixed);
    band_lo.setf(std::ios::fixed);
    line.setf(std::ios::fixed);
    band_hi.precision(2);
    band_lo.precision(2);
    line.precision(2);
    std::vector<std::string> lower;
    for (const auto& r : s.rows) {
      if (r.method != s.methods[m]) continue;
      line << x(r.iteration) << "," << y(r.mean) << " ";
      band_hi << x(r.iteration) << "," << y(r.mean + r.stderr_) << " ";
      std::ostringstream p;
      p.setf(std::ios::fixed);
      p.precision(2);
      p << x(r.iteration) << "," << y(r.mean - r.stderr_) << " ";
      lower.push_back(p.str());
    }
    std::string band = band_hi.str();
    for (auto it = lower.rbegin(); it != lower.rend(); ++it) band += *it;
    o << "<polygon points=\"" << band << "\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
    o << "<polyline points=\"" << line.str() << "\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    const double ly = top + 16.0 * static_cast<double>(m + 1);
    o << "<line x1=\"" << left + pw + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 32 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << left + pw + 38 << "\" y=\"" << ly + 4 << "\" font-size=\"12\">" << s.methods[m] << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace

std::vector<std::filesystem::path> emit_plot_data(const Summary& summary, const std::filesystem::path& dir,
                                                  bool with_svg) {
  if (summary.rows.empty()) throw BanditError("emit_plot_data: empty summary");
  std::filesystem::create_directories(dir);
  const std::string mean_col = "mean_cumulative_" + summary.metric;
  std::vector<std::filesystem::path> written;
  std::string combined = "method," + std::string("iteration,") + mean_col + ",standard_error,repetitions\n";
  for (const auto& method : summary.methods) {
    std::string table = "iteration," + mean_col + ",standard_error\n";
    for (const auto& r : summary.rows) {
      if (r.method != method) continue;
      table += std::to_string(r.iteration) + "," + shortest(r.mean) + "," + shortest(r.stderr_) + "\n";
      combined += method + "," + std::to_string(r.iteration) + "," + shortest(r.mean) + "," + shortest(r.stderr_) +
                  "," + std::to_string(r.count) + "\n";
    }
    const auto path = dir / ("summary_" + method + ".csv");
    write_atomic(path, table);
    written.push_back(path);
  }
  write_atomic(dir / "summary.csv", combined);
  written.push_back(dir / "summary.csv");
  if (with_svg) {
    write_atomic(dir / ("cumulative_" + summary.metric + ".svg"), svg_plot(summary));
    written.push_back(dir / ("cumulative_" + summary.metric + ".svg"));
  }
  return written;
}

Summary read_summary_csv(const std::filesystem::path& combined_csv) {
  std::istringstream in(read_file(combined_csv));
  std::string line;
  Summary s;
  if (!std::getline(in, line)) throw BanditError("empty summary table " + combined_csv.string());
  const std::string prefix = "method,iteration,mean_cumulative_";
  if (line.rfind(prefix, 0) != 0) throw BanditError("unexpected summary header in " + combined_csv.string());
  s.metric = line.substr(prefix.size(), line.find(',', prefix.size()) - prefix.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string col;
    while (std::getline(ls, col, ',')) cols.push_back(col);
    if (cols.size() < 4) throw BanditError("malformed summary row: " + line);
    SummaryRow r{cols[0], std::stoi(cols[1]), std::stod(cols[2]), std::stod(cols[3]),
                 cols.size() > 4 ? std::stoi(cols[4]) : 0};
    if (std::find(s.methods.begin(), s.methods.end(), r.method) == s.methods.end()) s.methods.push_back(r.method);
    s.rows.push_back(r);
  }
  return s;
}

// --- sweeps -----------------------------------------------------------------

namespace {

json parse_scalar(const std::string& v) {
  try {
    return json::parse(v);
  } catch (const json::parse_error&) {
    return json(v);
  }
}

bool set_everywhere(json& node, const std::string& key, const json& value) {
  bool found = false;
  if (node.is_object()) {
    if (node.contains(key)) {
      node[key] = value;
      found = true;
    }
    for (auto& [k, child] : node.items())
      if (k != key) found = set_everywhere(child, key, value) || found;
  } else if (node.is_array()) {
    for (auto& child : node) found = set_everywhere(child, key, value) || found;
  }
  return found;
}

}  // namespace

std::vector<std::pair<std::string, json>> sweep_variants(const json& config, const std::string& param) {
  const auto eq = param.find('=');
  if (eq == std::string::npos || eq == 0) throw std::invalid_argument("sweep parameter must look like key=v1,v2");
  const std::string key = param.substr(0, eq);
  std::vector<std::string> values;
  std::stringstream ss(param.substr(eq + 1));
  std::string v;
  while (std::getline(ss, v, ',')) {
    if (v.empty()) throw std::invalid_argument("empty value in sweep parameter " + param);
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("sweep parameter has no values: " + param);

  std::vector<std::pair<std::string, json>> out;
  for (const auto& value : values) {
    json variant = config;
    const json parsed = parse_scalar(value);
    if (key.find('.') != std::string::npos) {
      std::string pointer;
      std::stringstream ks(key);
      std::string part;
      while (std::getline(ks, part, '.')) pointer += "/" + part;
      const json::json_pointer ptr(pointer);
      if (!variant.contains(ptr.parent_pointer())) throw std::invalid_argument("sweep path not found: " + key);
      variant[ptr] = parsed;
    } else if (!set_everywhere(variant, key, parsed)) {
      // Agent parameters that were left at their defaults.
      bool applied = false;
      static const std::set<std::string> agent_keys = {"gamma", "mu", "N", "init_pulls", "pair_encoding", "temperature"};
      if (agent_keys.count(key) && variant.contains("agents")) {
        for (auto& a : variant["agents"]) {
          const std::string type = a.value("type", std::string());
          const bool fits = (key == "gamma" || key == "mu") ? type == "ro_llm"
                            : (key == "N" || key == "pair_encoding") ? type == "ts_llm_db"
                            : key == "temperature" ? type == "direct"
                                                   : true;
          if (fits) {
            a[key] = parsed;
            applied = true;
          }
        }
      }
      if (!applied) throw std::invalid_argument("sweep key '" + key + "' not found in config");
    }
    const std::string label = key + "_" + value;
    const std::string base_out = config.value("output_dir", std::string("results"));
    variant["output_dir"] = (std::filesystem::path(base_out) / ("sweep_" + label)).string();
    out.emplace_back(label, std::move(variant));
  }
  return out;
}

}  // namespace llmbandit
