#pragma once

#include <ostream>
#include <string>

#include <json.hpp>

#include "llmbandit/prompts.hpp"

namespace llmbandit {

/// Renders a template from a JSON fixture. Fixture shapes:
///   ts_reward, ts_loss, dueling: {"history": [{"x": [...], "y": v}], "query": [...]}
///   baseline_*: {"labels": [...], "features": [[...]], "pulls": [{"arm": i, "reward": v}], "horizon": T}
///   text_ts, text_direct: {"pool": [...], "history": [{"title", "content", "label", "reward"}],
///                          "title", "content", "label"}
std::string render_fixture(TemplateId id, const nlohmann::json& fixture);

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace llmbandit
