#include "chal/prompt.hpp"

#include "chal/agent.hpp"
#include "chal/belief_io.hpp"
#include "chal/error.hpp"
#include "chal/protocol.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace chal {

namespace {

std::string_view task_template(PromptStage stage) {
    switch (stage) {
    case PromptStage::Opening: return "task_opening";
    case PromptStage::Challenge: return "task_challenge";
    case PromptStage::Rebuttal: return "task_rebuttal";
    case PromptStage::Adjudicate: return "task_adjudicate";
    case PromptStage::Phase1: return "task_phase1";
    case PromptStage::Phase2: return "task_phase2";
    }
    return "task_opening";
}

std::string section(const std::string& title, const std::string& body) {
    std::string out = "## " + title + "\n" + body;
    if (!out.empty() && out.back() != '\n') out += '\n';
    return out;
}

// Scans for a balanced {...} or [...] starting at `start`, honoring string literals.
std::optional<std::size_t> balanced_end(std::string_view text, std::size_t start) {
    std::vector<char> stack;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_string) {
            if (escaped) escaped = false;
            else if (c == '\\') escaped = true;
            else if (c == '"') in_string = false;
            continue;
        }
        if (c == '"') in_string = true;
        else if (c == '{' || c == '[') stack.push_back(c == '{' ? '}' : ']');
        else if (c == '}' || c == ']') {
            if (stack.empty() || stack.back() != c) return std::nullopt;
            stack.pop_back();
            if (stack.empty()) return i + 1;
        }
    }
    return std::nullopt;
}

void scan(std::string_view text, std::vector<nlohmann::json>& out) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] != '{' && text[i] != '[') continue;
        auto end = balanced_end(text, i);
        if (!end) continue;
        auto parsed = nlohmann::json::parse(text.substr(i, *end - i), nullptr, false);
        if (parsed.is_discarded()) continue;
        out.push_back(std::move(parsed));
        i = *end - 1;
    }
}

// Wraps a bare list into {"key": list}.
nlohmann::json as_object(const nlohmann::json& v, const char* key) {
    if (v.is_array()) return nlohmann::json{{key, v}};
    return v;
}

std::vector<std::string> check_list(const nlohmann::json& v, const char* key, auto&& each) {
    std::vector<std::string> problems;
    if (!v.is_object() || !v.contains(key) || !v[key].is_array()) {
        problems.push_back(std::string("expected an object with a list \"") + key + "\"");
        return problems;
    }
    std::size_t i = 0;
    for (const auto& item : v[key]) {
        try {
            each(item);
        } catch (const std::exception& e) {
            problems.push_back(std::string(key) + "[" + std::to_string(i) + "]: " + e.what());
        }
        ++i;
    }
    return problems;
}

std::vector<std::string> check_shape(const nlohmann::json& v, OutputShape shape) {
    switch (shape) {
    case OutputShape::Belief: {
        auto result = parse_belief(v);
        std::vector<std::string> problems;
        for (const auto& viol : result.report.violations)
            problems.push_back(viol.node + ": " + viol.rule + ": " + std::string(rule_text(viol.rule)) + " (" +
                               viol.message + ")");
        return problems;
    }
    case OutputShape::Challenges:
        return check_list(v, "challenges", [](const nlohmann::json& item) {
            auto d = challenge_draft_from_json(item);
            if (!strategy_matches(d.attack_type, d.attack_strategy))
                throw std::invalid_argument("attack_strategy \"" + d.attack_strategy + "\" is not a " +
                                            std::string(to_string(d.attack_type)) + " strategy");
        });
    case OutputShape::Rebuttals:
        return check_list(v, "rebuttals", [](const nlohmann::json& item) { rebuttal_from_json(item); });
    case OutputShape::Patches:
        return check_list(v, "patches", [](const nlohmann::json& item) {
            std::string error;
            if (!patch_from_json(item, &error)) throw std::invalid_argument(error);
        });
    case OutputShape::Phase2:
        try {
            phase2_response_from_json(v);
            return {};
        } catch (const std::exception& e) {
            return {e.what()};
        }
    case OutputShape::Scores:
        try {
            score_response_from_json(v);
            return {};
        } catch (const std::exception& e) {
            return {e.what()};
        }
    }
    return {"unknown output shape"};
}

} // namespace

std::string_view to_string(PromptStage stage) noexcept {
    switch (stage) {
    case PromptStage::Opening: return "opening";
    case PromptStage::Challenge: return "challenge";
    case PromptStage::Rebuttal: return "rebuttal";
    case PromptStage::Adjudicate: return "adjudicate";
    case PromptStage::Phase1: return "phase1";
    case PromptStage::Phase2: return "phase2";
    }
    return "?";
}

std::string_view to_string(OutputShape shape) noexcept {
    switch (shape) {
    case OutputShape::Belief: return "belief";
    case OutputShape::Challenges: return "challenges";
    case OutputShape::Rebuttals: return "rebuttals";
    case OutputShape::Patches: return "patches";
    case OutputShape::Phase2: return "phase2";
    case OutputShape::Scores: return "scores";
    }
    return "?";
}

std::size_t estimate_tokens(std::string_view text) { return (text.size() + 3) / 4; }

std::string substitute(std::string_view text, const std::map<std::string, std::string>& vars) {
    std::string out;
    std::size_t i = 0;
    while (i < text.size()) {
        auto open = text.find("{{", i);
        if (open == std::string_view::npos) break;
        auto close = text.find("}}", open + 2);
        if (close == std::string_view::npos) break;
        out.append(text.substr(i, open - i));
        std::string name(text.substr(open + 2, close - open - 2));
        auto it = vars.find(name);
        if (it != vars.end()) out += it->second;
        else out.append(text.substr(open, close + 2 - open));
        i = close + 2;
    }
    out.append(text.substr(std::min(i, text.size())));
    return out;
}

PromptDocument assemble_prompt(const PromptContext& ctx, const Registries& reg, std::size_t token_budget) {
    PromptDocument doc;
    std::vector<std::pair<std::string, std::string>> head;
    const bool adjudicating = ctx.stage == PromptStage::Adjudicate;

    head.emplace_back("preamble", reg.prompt(adjudicating ? "adjudicator_preamble" : "preamble"));
    if (adjudicating) {
        const auto& logic = reg.logic_system(ctx.logic_system);
        const auto& ethics = reg.ethics_system(ctx.ethics_system);
        head.emplace_back("logic system", logic.display_name + ": " + logic.description + "\n" + logic.prompt_text);
        head.emplace_back("ethics system", ethics.display_name + ": " + ethics.description + "\n" + ethics.prompt_text);
    } else {
        const auto& persona = reg.persona(ctx.persona);
        head.emplace_back("persona", "You are the " + persona.display_name + ". Core commitment: " +
                                         persona.core_commitment + "\n" + persona.prompt_text +
                                         "\nTreat this worldview as a lens for analysis, not a set of conclusions "
                                         "to defend. Update when it conflicts with strong evidence.");
    }
    std::string scales = "Strength scale:\n" + reg.scales.strength.render();
    if (adjudicating) scales += "Logic scale:\n" + reg.scales.logic.render() + "Ethics scale:\n" + reg.scales.ethics.render();
    head.emplace_back("calibration", scales);

    for (const auto& [title, body] : head) {
        doc.system += section(title, body);
        doc.sections.push_back(title);
    }

    std::string task = substitute(reg.prompt(task_template(ctx.stage)), ctx.vars);
    std::vector<PromptBlock> blocks = ctx.blocks;
    if (ctx.stage == PromptStage::Phase2 && ctx.analysis)
        blocks.push_back({"position analysis", render_position_analysis(*ctx.analysis), 0});

    auto total = [&](const std::vector<bool>& keep) {
        std::size_t chars = doc.system.size() + task.size();
        for (std::size_t i = 0; i < blocks.size(); ++i)
            if (keep[i]) chars += blocks[i].name.size() + blocks[i].text.size() + 8;
        return estimate_tokens(std::string(chars, ' '));
    };
    std::vector<bool> keep(blocks.size(), true);
    std::vector<std::size_t> droppable;
    for (std::size_t i = 0; i < blocks.size(); ++i)
        if (blocks[i].drop_rank > 0) droppable.push_back(i);
    std::stable_sort(droppable.begin(), droppable.end(),
                     [&](std::size_t a, std::size_t b) { return blocks[a].drop_rank < blocks[b].drop_rank; });
    for (std::size_t idx : droppable) {
        if (total(keep) <= token_budget) break;
        keep[idx] = false;
        doc.dropped.push_back(blocks[idx].name);
    }
    doc.over_budget = total(keep) > token_budget;

    doc.user = section("task", task);
    doc.sections.push_back("task");
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        if (!keep[i]) continue;
        doc.user += section(blocks[i].name, blocks[i].text);
        doc.sections.push_back(blocks[i].name);
    }
    return doc;
}

std::vector<PromptBlock> belief_blocks(const Belief& belief, const std::string& label) {
    Belief open = belief;
    Belief resolved;
    for (auto it = open.uncertainties.begin(); it != open.uncertainties.end();) {
        if (it->second.status == UncertaintyStatus::Resolved) {
            resolved.uncertainties.insert(*it);
            it = open.uncertainties.erase(it);
        } else {
            ++it;
        }
    }
    std::vector<PromptBlock> out;
    out.push_back({label, encode_belief(open).dump(2), 0});
    if (!resolved.uncertainties.empty()) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& [id, u] : resolved.uncertainties) arr.push_back(encode_node(AnyNode{u}));
        out.push_back({label + " (resolved uncertainties)", arr.dump(2), kDropResolvedUncertainties});
    }
    return out;
}

nlohmann::ordered_json belief_excerpt(const Belief& belief, std::span<const NodeId> targets) {
    std::set<NodeId> selected;
    std::deque<NodeId> queue;
    for (NodeId t : targets)
        if (belief.contains(t) && selected.insert(t).second) queue.push_back(t);
    while (!queue.empty()) {
        NodeId id = queue.front();
        queue.pop_front();
        for (NodeKind kind : {NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim})
            for (NodeId other : belief.ids(kind)) {
                auto deps = belief.dependencies(other);
                if (std::find(deps.begin(), deps.end(), id) != deps.end() && selected.insert(other).second)
                    queue.push_back(other);
            }
    }
    nlohmann::ordered_json o;
    o["thesis"] = belief.thesis.stance;
    o["targets"] = encode_ids({targets.begin(), targets.end()});
    auto nodes = nlohmann::ordered_json::array();
    for (NodeId id : selected) nodes.push_back(encode_node(belief, id));
    o["nodes"] = std::move(nodes);
    return o;
}

std::vector<nlohmann::json> extract_json_candidates(std::string_view raw) {
    std::vector<nlohmann::json> out;
    std::size_t pos = 0;
    while ((pos = raw.find("```", pos)) != std::string_view::npos) {
        auto body_start = raw.find('\n', pos);
        if (body_start == std::string_view::npos) break;
        auto close = raw.find("```", body_start);
        if (close == std::string_view::npos) break;
        scan(raw.substr(body_start + 1, close - body_start - 1), out);
        pos = close + 3;
    }
    scan(raw, out);
    return out;
}

StructuredOutput parse_structured_output(std::string_view raw, OutputShape shape) {
    StructuredOutput result;
    auto candidates = extract_json_candidates(raw);
    if (candidates.empty()) {
        result.diagnostics.push_back("no structured document found");
        return result;
    }
    const char* list_key = shape == OutputShape::Challenges  ? "challenges"
                           : shape == OutputShape::Rebuttals ? "rebuttals"
                           : shape == OutputShape::Patches   ? "patches"
                                                             : nullptr;
    std::optional<std::vector<std::string>> first_problems;
    for (const auto& c : candidates) {
        nlohmann::json v = list_key ? as_object(c, list_key) : c;
        auto problems = check_shape(v, shape);
        if (problems.empty()) {
            result.value = std::move(v);
            return result;
        }
        if (!first_problems) first_problems = std::move(problems);
    }
    result.diagnostics = std::move(*first_problems);
    return result;
}

} // namespace chal
