#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "llmbandit/agents.hpp"
#include "llmbandit/environments.hpp"
#include "llmbandit/gateway.hpp"

namespace llmbandit {

enum class TaskKind { mab, dueling, contextual };

const char* to_string(TaskKind t);

enum class AgentType { ts_llm, ro_llm, ts_llm_db, random, direct };

const char* to_string(AgentType t);

struct AgentSpec {
  std::string name;
  AgentType type = AgentType::ts_llm;
  TsLlmConfig ts;
  RoLlmConfig ro;
  TsLlmDbConfig db;
  BaselineVariant variant = BaselineVariant::nofeature;  // direct
  double direct_temperature = 1.0;
  std::optional<int> init_pulls;  // overrides the experiment default
};

struct PredictorSettings {
  std::string backend = "oracle";  // oracle | llm
  double kappa = 0.3;
  double bias_std = 0.0;
  int max_tokens = 64;
  std::size_t max_prompt_chars = 0;
};

struct GatewaySettings {
  GatewayMode mode = GatewayMode::live;
  std::string log_path;
  std::string model;
  std::string api_base;
  double requests_per_minute = 0.0;
  int max_tries = 5;
  int backoff_ms = 1000;
};

struct DatasetSettings {
  std::string path;
  ContextualFilter filter;
};

struct ExperimentConfig {
  TaskKind task = TaskKind::mab;
  int num_arms = 16;  // K
  int dim = 4;        // d
  int horizon = 100;  // T
  int repetitions = 10;
  std::uint64_t base_seed = 0;
  int init_pulls = 2;
  RewardKind reward = RewardKind::linear;
  double gp_lengthscale = 0.4;
  NoiseSpec noise;
  double sharpness = 10.0;
  DatasetSettings dataset;
  PredictorSettings predictor;
  GatewaySettings gateway;
  std::vector<AgentSpec> agents;
  std::string output_dir = "results";
  bool parallel_predictions = false;

  void validate() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
/// Fully-resolved form, every default made explicit. With `provenance_only`
/// the transport-level settings (gateway mode and log, endpoint, rate limits,
/// output directory) are left out, so record and replay runs share a digest.
nlohmann::json config_to_json(const ExperimentConfig& config, bool provenance_only = false);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_digest(const ExperimentConfig& config);

/// Seed of repetition r: a fixed mix of the two integers, injective in r.
std::uint64_t derive_run_seed(std::uint64_t base_seed, std::uint64_t repetition);

/// Sub-streams of one run seed: arms (1,0), theta (1,1), GP table (1,2),
/// agent (2), observations and record order (3), oracle bias (4).
struct RunStreams {
  std::uint64_t arms_seed, theta_seed, gp_seed, agent_seed, observe_seed, bias_seed;
  explicit RunStreams(std::uint64_t run_seed);
};

struct IterationRecord {
  int iteration = 0;
  bool init = false;
  std::optional<double> temperature;
  std::optional<double> second_temperature;
  std::vector<int> arms;  // one arm, or (first, second) for duels
  double observation = 0.0;
  double value = 0.0;          // f of the (first) selected arm, or the contextual reward
  double instantaneous = 0.0;  // regret, or reward for contextual runs
  double cumulative = 0.0;
  std::optional<std::string> transcript_ref;
};

struct RunRecord {
  std::string method;
  int repetition = 0;
  std::uint64_t seed = 0;
  std::string config_digest;
  nlohmann::json config;
  std::string metric = "regret";  // regret | reward
  double optimal_value = 0.0;
  std::vector<IterationRecord> iterations;
  double wall_clock_seconds = 0.0;  // stored beside the record, not inside it
  std::vector<std::string> transcript;  // predictor responses, one JSON line per iteration that had any
  bool failed = false;
  std::string error;
};

/// Line-delimited JSON: a header line, then one line per iteration.
std::string serialize_run_record(const RunRecord& record);
RunRecord parse_run_record(const std::string& text);

/// Throws if a stored cumulative column disagrees with the prefix sum of the instantaneous column.
void check_run_record(const RunRecord& record);

struct RunnerHooks {
  /// Replaces the HTTP transport for llm backends (tests, stub servers).
  std::shared_ptr<HttpTransport> transport;
  std::function<void(std::chrono::milliseconds)> sleep;
};

/// Runs every (agent, repetition) pair, persisting each repetition under
/// <output_dir>/runs/<method>/rep_<r>.jsonl. Existing valid files are reused.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config, const RunnerHooks& hooks = {});

/// One repetition of one agent, no persistence.
RunRecord run_single(const ExperimentConfig& config, const AgentSpec& agent, int repetition,
                     const RunnerHooks& hooks = {});

std::filesystem::path run_file(const std::filesystem::path& output_dir, const std::string& method, int repetition);

std::vector<RunRecord> load_run_records(const std::filesystem::path& output_dir);

struct SummaryRow {
  std::string method;
  int iteration = 0;
  double mean = 0.0;
  double stderr_ = 0.0;
  int count = 0;
};

struct Summary {
  std::string metric = "regret";
  std::vector<std::string> methods;  // first-seen order
  std::vector<SummaryRow> rows;
  std::map<std::string, int> failed;  // method -> excluded repetitions
};

/// Per-iteration mean and standard error (sample sd / sqrt(n)) of the cumulative column.
Summary aggregate(const std::vector<RunRecord>& records);

/// Writes summary_<method>.csv per method, summary.csv combined, and regret.svg.
std::vector<std::filesystem::path> emit_plot_data(const Summary& summary, const std::filesystem::path& dir,
                                                  bool with_svg = true);

Summary read_summary_csv(const std::filesystem::path& combined_csv);

/// Parses "gamma=1,5,10" and returns one variant per value. The key may be a
/// dotted path ("agents.0.gamma") or a bare name applied wherever it appears.
std::vector<std::pair<std::string, nlohmann::json>> sweep_variants(const nlohmann::json& config,
                                                                   const std::string& param);

}  // namespace llmbandit
