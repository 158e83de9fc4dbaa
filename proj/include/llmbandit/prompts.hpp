#pragma once

#include <string>
#include <vector>

#include "llmbandit/core.hpp"

namespace llmbandit {

enum class TemplateId {
  ts_reward,
  ts_loss,
  dueling,
  baseline_nofeature,
  baseline_framingfeature,
  baseline_historyfeature,
  text_ts,
  text_direct,
};

const char* to_string(TemplateId id);
TemplateId parse_template_id(const std::string& name);
std::vector<TemplateId> all_template_ids();

/// "[0.1234, -0.5000]"
std::string format_features(const FeatureVector& x);

/// Fixed 4-decimal rendering used for every numeric output slot.
std::string format_value(double v);

/// Fills [NAME] slots. Throws if a slot is missing from `values` or left unfilled.
std::string fill_slots(const std::string& body, const std::vector<std::pair<std::string, std::string>>& values);

struct PromptOptions {
  /// Upper bound on prompt length; 0 disables truncation. When exceeded the
  /// oldest history entries are dropped two at a time.
  std::size_t max_chars = 0;
};

std::string render_reward_prompt(const History& history, const FeatureVector& query, HistoryKind kind,
                                 const PromptOptions& options = {});

std::string render_dueling_prompt(const History& history, const FeatureVector& pair_features,
                                  const PromptOptions& options = {});

enum class BaselineVariant { nofeature, framingfeature, historyfeature };

const char* to_string(BaselineVariant v);

/// One pull in a direct-selection baseline history.
struct LabeledPull {
  int arm = 0;
  double reward = 0.0;
};

std::string render_baseline_prompt(BaselineVariant variant, const std::vector<std::string>& arm_labels,
                                   const Eigen::MatrixXd& arm_features, const std::vector<LabeledPull>& history,
                                   int horizon);

/// Contextual prompts (titles/contents/labels). `text_ts` asks for the reward of
/// (query, label); `text_direct` asks for the label.
std::string render_text_ts_prompt(const std::vector<std::string>& label_pool, const History& history,
                                  const std::string& title, const std::string& content, const std::string& label,
                                  const PromptOptions& options = {});

std::string render_text_direct_prompt(const std::vector<std::string>& label_pool, const History& history,
                                      const std::string& title, const std::string& content,
                                      const PromptOptions& options = {});

/// Sixteen button colors used by the direct-selection baselines.
const std::vector<std::string>& default_button_labels();

}  // namespace llmbandit
