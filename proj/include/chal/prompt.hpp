#pragma once

#include "chal/belief.hpp"
#include "chal/strength.hpp"
#include "chal/value_systems.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chal {

enum class PromptStage { Opening, Challenge, Rebuttal, Adjudicate, Phase1, Phase2 };

std::string_view to_string(PromptStage stage) noexcept;

/// A dynamic section of a prompt. Blocks with drop_rank > 0 may be dropped when the prompt
/// exceeds its budget, lowest rank first (changelog = 1, resolved uncertainties = 2).
struct PromptBlock {
    std::string name;
    std::string text;
    int drop_rank = 0;
};

inline constexpr int kDropChangelog = 1;
inline constexpr int kDropResolvedUncertainties = 2;

struct PromptContext {
    PromptStage stage = PromptStage::Opening;
    std::string persona;        // council stages
    std::string logic_system;   // adjudicator stage
    std::string ethics_system;  // adjudicator stage
    std::map<std::string, std::string> vars;  // {{name}} substitutions in the task text
    std::vector<PromptBlock> blocks;
    std::optional<PositionAnalysis> analysis;  // Phase 2 only
};

struct PromptDocument {
    std::string system;
    std::string user;
    std::vector<std::string> sections;  // in emitted order
    std::vector<std::string> dropped;
    bool over_budget = false;           // still above budget after dropping everything droppable

    std::string text() const { return system + "\n" + user; }
};

/// Rough token estimate: one token per four characters.
std::size_t estimate_tokens(std::string_view text);

/// Fixed section order: preamble, persona (or logic and ethics systems), calibration scales,
/// task instructions, dynamic blocks, position analysis. Throws RegistryError on unknown keys.
PromptDocument assemble_prompt(const PromptContext& context, const Registries& registries,
                               std::size_t token_budget);

/// Belief as prompt blocks: the document without resolved uncertainties, then those as a
/// droppable block.
std::vector<PromptBlock> belief_blocks(const Belief& belief, const std::string& label);

/// Targeted nodes plus everything that depends on them, with the thesis stance.
nlohmann::ordered_json belief_excerpt(const Belief& belief, std::span<const NodeId> targets);

/// Replaces {{name}} placeholders; unknown placeholders are left as they are.
std::string substitute(std::string_view text, const std::map<std::string, std::string>& vars);

enum class OutputShape { Belief, Challenges, Rebuttals, Patches, Phase2, Scores };

std::string_view to_string(OutputShape shape) noexcept;

struct StructuredOutput {
    std::optional<nlohmann::json> value;  // normalized to an object for list shapes
    std::vector<std::string> diagnostics;

    bool ok() const noexcept { return value.has_value(); }
};

/// Finds the first JSON document of the expected shape in a free-form reply, tolerating
/// surrounding prose and fenced blocks. Diagnostics are phrased for a corrective prompt.
StructuredOutput parse_structured_output(std::string_view raw, OutputShape shape);

/// Every well-formed JSON object or array embedded in the text, fenced blocks first.
std::vector<nlohmann::json> extract_json_candidates(std::string_view raw);

} // namespace chal
