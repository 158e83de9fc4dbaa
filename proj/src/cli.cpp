#include "llmbandit/cli.hpp"

#include <fstream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "llmbandit/runner.hpp"

namespace llmbandit {

using nlohmann::json;

namespace {

FeatureVector to_vector(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  return json::parse(in, nullptr, true, true);
}

void print_summary(const Summary& s, std::ostream& out) {
  for (const auto& method : s.methods) {
    const SummaryRow* last = nullptr;
    for (const auto& r : s.rows)
      if (r.method == method) last = &r;
    out << method;
    if (last)
      out << ": cumulative " << s.metric << " at t=" << last->iteration << " = " << last->mean << " +/- "
          << last->stderr_ << " (n=" << last->count << ")";
    auto f = s.failed.find(method);
    if (f != s.failed.end()) out << ", " << f->second << " failed repetition(s) excluded";
    out << '\n';
  }
}

int finish_run(const ExperimentConfig& config, const RunnerHooks& hooks, std::ostream& out) {
  const auto records = run_experiment(config, hooks);
  int failed = 0;
  for (const auto& r : records) failed += r.failed ? 1 : 0;
  out << "wrote " << records.size() - static_cast<std::size_t>(failed) << " run record(s) under "
      << config.output_dir << "/runs\n";
  if (failed) out << failed << " repetition(s) failed\n";
  if (static_cast<std::size_t>(failed) < records.size()) {
    const Summary s = aggregate(records);
    emit_plot_data(s, std::filesystem::path(config.output_dir) / "summary");
    print_summary(s, out);
  }
  return failed ? 3 : 0;
}

}  // namespace

std::string render_fixture(TemplateId id, const json& f) {
  switch (id) {
    case TemplateId::ts_reward:
    case TemplateId::ts_loss: {
      const HistoryKind kind = id == TemplateId::ts_reward ? HistoryKind::reward : HistoryKind::loss;
      History h(kind);
      for (const auto& e : f.value("history", json::array())) h.append_reward(to_vector(e.at("x")), e.at("y").get<double>());
      return render_reward_prompt(h, to_vector(f.at("query")), kind);
    }
    case TemplateId::dueling: {
      History h(HistoryKind::preference);
      for (const auto& e : f.value("history", json::array())) h.append_preference(to_vector(e.at("x")), e.at("y").get<int>());
      return render_dueling_prompt(h, to_vector(f.at("query")));
    }
    case TemplateId::baseline_nofeature:
    case TemplateId::baseline_framingfeature:
    case TemplateId::baseline_historyfeature: {
      const BaselineVariant v = id == TemplateId::baseline_nofeature       ? BaselineVariant::nofeature
                                : id == TemplateId::baseline_framingfeature ? BaselineVariant::framingfeature
                                                                            : BaselineVariant::historyfeature;
      const auto rows = f.at("features");
      Eigen::MatrixXd features(static_cast<Eigen::Index>(rows.size()), rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size()));
      for (std::size_t i = 0; i < rows.size(); ++i) features.row(static_cast<Eigen::Index>(i)) = to_vector(rows[i]).transpose();
      std::vector<std::string> labels = f.contains("labels") ? f.at("labels").get<std::vector<std::string>>()
                                                             : std::vector<std::string>(default_button_labels().begin(),
                                                                                        default_button_labels().begin() + features.rows());
      std::vector<LabeledPull> pulls;
      for (const auto& p : f.value("pulls", json::array())) pulls.push_back({p.at("arm").get<int>(), p.at("reward").get<double>()});
      return render_baseline_prompt(v, labels, features, pulls, f.at("horizon").get<int>());
    }
    case TemplateId::text_ts:
    case TemplateId::text_direct: {
      History h(HistoryKind::text);
      for (const auto& e : f.value("history", json::array()))
        h.append_text({e.at("title").get<std::string>(), e.at("content").get<std::string>(),
                       e.at("label").get<std::string>(), e.at("reward").get<double>()});
      const auto pool = f.at("pool").get<std::vector<std::string>>();
      if (id == TemplateId::text_ts)
        return render_text_ts_prompt(pool, h, f.at("title").get<std::string>(), f.at("content").get<std::string>(),
                                     f.at("label").get<std::string>());
      return render_text_direct_prompt(pool, h, f.at("title").get<std::string>(), f.at("content").get<std::string>());
    }
  }
  throw std::invalid_argument("unknown template");
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"LLM-driven bandit experiments"};
  app.require_subcommand(1);

  std::string config_path, log_path, dir, template_name, fixture_path, param;
  bool dry_run = false;
  std::optional<int> max_words, max_chars;
  std::optional<std::string> pool;

  auto* run = app.add_subcommand("run", "run every agent and repetition of a config");
  run->add_option("config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  auto* replay = app.add_subcommand("replay", "re-run a config from a recorded response log, offline");
  replay->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  replay->add_option("--log", log_path, "replay log written by a record-mode run")->required()->check(CLI::ExistingFile);

  for (auto* sub : {run, replay}) {
    sub->add_option("--max-words", max_words, "drop contextual records with more words than this");
    sub->add_option("--max-chars", max_chars, "drop contextual records with more characters than this");
    sub->add_option("--pool", pool, "comma-separated label pool for contextual runs");
  }

  auto* agg = app.add_subcommand("aggregate", "summarize the run records under an output directory");
  agg->add_option("dir", dir)->required()->check(CLI::ExistingDirectory);

  auto* plot = app.add_subcommand("plot", "write summary tables and an SVG regret plot");
  plot->add_option("dir", dir)->required()->check(CLI::ExistingDirectory);

  auto* prompts = app.add_subcommand("prompts", "prompt template tooling");
  prompts->require_subcommand(1);
  auto* render = prompts->add_subcommand("render", "print a template rendered from a fixture");
  render->add_option("template-id", template_name)->required();
  render->add_option("--fixture", fixture_path)->required()->check(CLI::ExistingFile);

  auto* sweep = app.add_subcommand("sweep", "run one config per value of a parameter");
  sweep->add_option("config", config_path)->required()->check(CLI::ExistingFile);
  sweep->add_option("--param", param, "key=v1,v2,...")->required();
  sweep->add_flag("--dry-run", dry_run, "write the variant configs without running them");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    auto loaded = [&] {
      ExperimentConfig c = load_config(config_path);
      if (max_words) c.dataset.filter.max_context_words = *max_words;
      if (max_chars) c.dataset.filter.max_context_chars = *max_chars;
      if (pool) {
        c.dataset.filter.pool.clear();
        std::stringstream ss(*pool);
        for (std::string label; std::getline(ss, label, ',');)
          if (!label.empty()) c.dataset.filter.pool.push_back(label);
      }
      return c;
    };
    if (*run) return finish_run(loaded(), {}, out);
    if (*replay) {
      ExperimentConfig c = loaded();
      c.gateway.mode = GatewayMode::replay;
      c.gateway.log_path = log_path;
      return finish_run(c, {}, out);
    }
    if (*agg || *plot) {
      const Summary s = aggregate(load_run_records(dir));
      const auto files = emit_plot_data(s, std::filesystem::path(dir) / "summary", plot->parsed());
      print_summary(s, out);
      for (const auto& f : files) out << "wrote " << f.string() << '\n';
      return 0;
    }
    if (*render) {
      out << render_fixture(parse_template_id(template_name), read_json(fixture_path));
      return 0;
    }
    if (*sweep) {
      const json base = read_json(config_path);
      int status = 0;
      for (auto& [label, variant] : sweep_variants(base, param)) {
        const ExperimentConfig c = config_from_json(variant);
        std::filesystem::create_directories(c.output_dir);
        const auto path = std::filesystem::path(c.output_dir) / "config.json";
        std::ofstream(path) << variant.dump(2) << '\n';
        out << label << ": " << path.string() << '\n';
        if (!dry_run) status = std::max(status, finish_run(c, {}, out));
      }
      return status;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  err << app.help();
  return 2;
}

}  // namespace llmbandit
