#include "llmbandit/prompts.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

namespace llmbandit {

const char* to_string(TemplateId id) {
  switch (id) {
    case TemplateId::ts_reward: return "ts_reward";
    case TemplateId::ts_loss: return "ts_loss";
    case TemplateId::dueling: return "dueling";
    case TemplateId::baseline_nofeature: return "baseline_nofeature";
    case TemplateId::baseline_framingfeature: return "baseline_framingfeature";
    case TemplateId::baseline_historyfeature: return "baseline_historyfeature";
    case TemplateId::text_ts: return "text_ts";
    case TemplateId::text_direct: return "text_direct";
  }
  return "?";
}

std::vector<TemplateId> all_template_ids() {
  return {TemplateId::ts_reward,          TemplateId::ts_loss,
          TemplateId::dueling,            TemplateId::baseline_nofeature,
          TemplateId::baseline_framingfeature, TemplateId::baseline_historyfeature,
          TemplateId::text_ts,            TemplateId::text_direct};
}

TemplateId parse_template_id(const std::string& name) {
  for (TemplateId id : all_template_ids())
    if (name == to_string(id)) return id;
  throw std::invalid_argument("unknown template id: " + name);
}

const char* to_string(BaselineVariant v) {
  switch (v) {
    case BaselineVariant::nofeature: return "nofeature";
    case BaselineVariant::framingfeature: return "framingfeature";
    case BaselineVariant::historyfeature: return "historyfeature";
  }
  return "?";
}

const std::vector<std::string>& default_button_labels() {
  static const std::vector<std::string> labels = {"blue", "green",    "red",   "yellow", "purple", "orange",
                                                  "cyan", "magenta",  "lime",  "pink",   "teal",   "lavender",
                                                  "brown", "beige",   "maroon", "mint"};
  return labels;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  std::string s = buf;
  if (s == "-0.0000") s = "0.0000";
  return s;
}

std::string format_features(const FeatureVector& x) {
  std::string out = "[";
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (i) out += ", ";
    out += format_value(x(i));
  }
  return out + "]";
}

namespace {

// Every placeholder a template may contain.
const std::set<std::string>& slot_names() {
  static const std::set<std::string> names = {"INPUT", "OUTPUT", "COLOR", "REWARD", "FEATURE", "TIMES",
                                              "Title", "Content", "Label", "K",    "HORIZON", "LABELS",
                                              "DIST",  "PLIST"};
  return names;
}

std::string format_reward_compact(double v) {
  if (v == std::floor(v) && std::abs(v) < 1e15) return std::to_string(static_cast<long long>(v));
  return format_value(v);
}

std::string python_list(const std::vector<std::string>& labels, bool quoted) {
  std::string out = "[";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (i) out += ", ";
    out += quoted ? "'" + labels[i] + "'" : labels[i];
  }
  return out + "]";
}

/// Drops the oldest entries pairwise until `render` fits the budget.
std::string render_with_budget(const History& history, const PromptOptions& options,
                               const std::function<std::string(const History&)>& render) {
  std::string text = render(history);
  if (options.max_chars == 0 || text.size() <= options.max_chars) return text;
  std::size_t keep = history.size();
  while (text.size() > options.max_chars && keep > 0) {
    keep = keep >= 2 ? keep - 2 : 0;
    text = render(history.tail(keep));
  }
  std::cerr << "warning: prompt exceeded " << options.max_chars << " chars; dropped " << history.size() - keep
            << " oldest history entries\n";
  return text;
}

}  // namespace

std::string fill_slots(const std::string& body, const std::vector<std::pair<std::string, std::string>>& values) {
  const auto& names = slot_names();
  std::string out;
  out.reserve(body.size());
  std::size_t i = 0;
  while (i < body.size()) {
    if (body[i] == '[') {
      const auto close = body.find(']', i + 1);
      if (close != std::string::npos) {
        const std::string name = body.substr(i + 1, close - i - 1);
        if (names.count(name)) {
          const auto it = std::find_if(values.begin(), values.end(), [&](const auto& kv) { return kv.first == name; });
          if (it == values.end()) throw std::invalid_argument("unfilled template slot [" + name + "]");
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += body[i++];
  }
  for (const auto& [name, _] : values)
    if (body.find("[" + name + "]") == std::string::npos)
      throw std::invalid_argument("template has no slot [" + name + "]");
  return out;
}

// --- reward / loss / dueling ------------------------------------------------

namespace {

constexpr const char* kRewardHeader =
    "Help me predict the function value at the last input. Each function value is associated with a Normal "
    "distribution with a fixed but unknown mean. Your response should only contain the function value in the "
    "format of #function value#.\n";

constexpr const char* kDuelingHeader =
    "Help me predict the value for the last input as a continuous value between 0 and 1. Your response MUST only "
    "contain the value in the format of #value#.\n";

constexpr const char* kExampleLine = "input: [INPUT], output: [OUTPUT]\n";
constexpr const char* kQueryLine = "input: [INPUT], output:";

}  // namespace

std::string render_reward_prompt(const History& history, const FeatureVector& query, HistoryKind kind,
                                 const PromptOptions& options) {
  if (kind != HistoryKind::reward && kind != HistoryKind::loss)
    throw std::invalid_argument("reward prompt needs kind reward or loss");
  if (history.kind() != kind)
    throw std::invalid_argument(std::string("reward prompt: history kind ") + to_string(history.kind()) +
                                " does not match " + to_string(kind));
  return render_with_budget(history, options, [&](const History& h) {
    std::string text = kRewardHeader;
    for (const auto& e : h.entries()) {
      const auto& r = std::get<RewardHistoryEntry>(e);
      text += fill_slots(kExampleLine, {{"INPUT", format_features(r.features)}, {"OUTPUT", format_value(r.observation)}});
    }
    text += fill_slots(kQueryLine, {{"INPUT", format_features(query)}});
    return text;
  });
}

std::string render_dueling_prompt(const History& history, const FeatureVector& pair_features,
                                  const PromptOptions& options) {
  if (history.kind() != HistoryKind::preference) throw std::invalid_argument("dueling prompt needs a preference history");
  return render_with_budget(history, options, [&](const History& h) {
    std::string text = kDuelingHeader;
    for (const auto& e : h.entries()) {
      const auto& p = std::get<PreferenceHistoryEntry>(e);
      text += fill_slots(kExampleLine, {{"INPUT", format_features(p.pair_features)}, {"OUTPUT", std::to_string(p.outcome)}});
    }
    text += fill_slots(kQueryLine, {{"INPUT", format_features(pair_features)}});
    return text;
  });
}

// --- direct-selection baselines ---------------------------------------------

namespace {

constexpr const char* kBaselineIntro = "You are in a room with [K] buttons labeled\n[LABELS]\n";
constexpr const char* kFeatureLine = "Feature of [COLOR] button: [FEATURE]\n";
constexpr const char* kBaselineFraming =
    "Each button is associated with a Normal distribution with a fixed but unknown mean; the means for the "
    "buttons could be different and are associated with features of buttons. For each button, when you press it, "
    "you will get a reward that is sampled from the button's associated distribution.\n"
    "You have [HORIZON] time steps and, on each time step, you can choose any button and receive the reward. Your "
    "goal is to maximize the total reward over the [HORIZON] time steps.";
constexpr const char* kBaselinePlayed = "So far you have played [TIMES] times with the following choices and rewards:\n";
constexpr const char* kBaselinePull = "[COLOR] button, reward [REWARD]\n";
constexpr const char* kBaselineInstructions =
    "You MUST output a distribution over the [K] buttons as probabilities, formatted EXACTLY like this example: "
    "#[DIST]#. Each probability value([PLIST]) MUST be a number between 0 and 1, and the total of all "
    "probabilities MUST equal 1.\n"
    "Let's think step by step to make sure we make a good choice. Which button will you choose next? YOU MUST "
    "provide your final answer within the tags <Answer>DIST</Answer> where DIST is #[DIST]#.";

std::string example_distribution(const std::vector<std::string>& labels) {
  const std::size_t k = labels.size();
  auto item = [&](std::size_t i) { return labels[i] + ":p" + std::to_string(i + 1); };
  if (k <= 3) {
    std::string out;
    for (std::size_t i = 0; i < k; ++i) out += (i ? "," : "") + item(i);
    return out;
  }
  return item(0) + "," + item(1) + ",...," + item(k - 1);
}

std::string probability_list(std::size_t k) {
  if (k <= 3) {
    std::string out;
    for (std::size_t i = 0; i < k; ++i) out += (i ? ",p" : "p") + std::to_string(i + 1);
    return out;
  }
  return "p1,p2,...,p" + std::to_string(k);
}

}  // namespace

std::string render_baseline_prompt(BaselineVariant variant, const std::vector<std::string>& arm_labels,
                                   const Eigen::MatrixXd& arm_features, const std::vector<LabeledPull>& history,
                                   int horizon) {
  const std::size_t k = arm_labels.size();
  if (k < 2) throw std::invalid_argument("baseline prompt needs at least 2 labels");
  if (variant != BaselineVariant::nofeature && static_cast<std::size_t>(arm_features.rows()) != k)
    throw std::invalid_argument("baseline prompt: feature rows differ from label count");

  const std::string ks = std::to_string(k);
  std::string features;
  if (variant != BaselineVariant::nofeature)
    for (std::size_t i = 0; i < k; ++i)
      features += fill_slots(kFeatureLine, {{"COLOR", arm_labels[i]},
                                            {"FEATURE", format_features(arm_features.row(static_cast<Eigen::Index>(i)).transpose())}});

  std::string text = fill_slots(kBaselineIntro, {{"K", ks}, {"LABELS", python_list(arm_labels, true)}});
  if (variant == BaselineVariant::framingfeature) text += features;
  text += fill_slots(kBaselineFraming, {{"HORIZON", std::to_string(horizon)}});
  if (variant == BaselineVariant::historyfeature) {
    text += "\n" + features;
  } else {
    text += " ";
  }
  text += fill_slots(kBaselinePlayed, {{"TIMES", std::to_string(history.size())}});
  for (const auto& pull : history) {
    if (pull.arm < 0 || static_cast<std::size_t>(pull.arm) >= k) throw std::out_of_range("baseline pull arm index");
    text += fill_slots(kBaselinePull, {{"COLOR", arm_labels[static_cast<std::size_t>(pull.arm)]},
                                       {"REWARD", format_value(pull.reward)}});
  }
  text += fill_slots(kBaselineInstructions,
                     {{"K", ks}, {"DIST", example_distribution(arm_labels)}, {"PLIST", probability_list(k)}});
  return text;
}

// --- text-feature tasks -----------------------------------------------------

namespace {

constexpr const char* kTextIntro =
    "There are Titles and Contents of some items. \n\n"
    "Labels and items correspond one-to-one.\n"
    "There are a total of [K] items.The Labels MUST be ONE of the following numbers: [LABELS]\n\n"
    "The Reward is a number between 0 and 1 determined by whether the Label is correct or not.\n\n";
constexpr const char* kTextTsTask =
    "Help me predict the Reward at the last Title, Content and Label.\n\n"
    "Your response MUST be the predicted Reward only, formatted as #predicted Reward#.\n\n";
constexpr const char* kTextDirectTask =
    "Help me choose the correct Label at the last Title and Content. Your response MUST be the chosen Label "
    "only, formatted as #chosen Label#.\n\n";
constexpr const char* kTextExample = "**Title**: [Title]\n**Content**: [Content]\n**Label**: [Label]\n**Reward**: [REWARD]\n\n";
constexpr const char* kTextTsQuery = "**Title**: [Title]\n**Content**: [Content]\n**Label**: [Label]\n**Reward**:";
constexpr const char* kTextDirectQuery = "**Title**: [Title]\n**Content**: [Content]\n**Label**:";

std::string text_examples(const History& h) {
  std::string out;
  for (const auto& e : h.entries()) {
    const auto& t = std::get<TextHistoryEntry>(e);
    out += fill_slots(kTextExample, {{"Title", t.title},
                                     {"Content", t.content},
                                     {"Label", t.label},
                                     {"REWARD", format_reward_compact(t.reward)}});
  }
  return out;
}

std::string text_intro(const std::vector<std::string>& pool) {
  return fill_slots(kTextIntro, {{"K", std::to_string(pool.size())}, {"LABELS", python_list(pool, false)}});
}

}  // namespace

std::string render_text_ts_prompt(const std::vector<std::string>& label_pool, const History& history,
                                  const std::string& title, const std::string& content, const std::string& label,
                                  const PromptOptions& options) {
  if (history.kind() != HistoryKind::text) throw std::invalid_argument("text prompt needs a text history");
  return render_with_budget(history, options, [&](const History& h) {
    return text_intro(label_pool) + kTextTsTask + text_examples(h) +
           fill_slots(kTextTsQuery, {{"Title", title}, {"Content", content}, {"Label", label}});
  });
}

std::string render_text_direct_prompt(const std::vector<std::string>& label_pool, const History& history,
                                      const std::string& title, const std::string& content,
                                      const PromptOptions& options) {
  if (history.kind() != HistoryKind::text) throw std::invalid_argument("text prompt needs a text history");
  return render_with_budget(history, options, [&](const History& h) {
    return text_intro(label_pool) + kTextDirectTask + text_examples(h) +
           fill_slots(kTextDirectQuery, {{"Title", title}, {"Content", content}});
  });
}

}  // namespace llmbandit
