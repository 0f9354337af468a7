#include "chal/scripted.hpp"

#include "chal/error.hpp"

#include <fstream>

namespace chal {

namespace {

std::string join_path(const std::vector<std::string>& path) {
    std::string out;
    for (const auto& part : path) out += (out.empty() ? "" : "/") + part;
    return out;
}

template <typename F>
auto wrap(const std::vector<std::string>& path, F&& f) {
    try {
        return f();
    } catch (const ScenarioError&) {
        throw;
    } catch (const std::exception& e) {
        throw ScenarioError("malformed scenario entry " + join_path(path) + ": " + e.what());
    }
}

std::vector<Patch> parse_patch_list(const nlohmann::json& list) {
    if (!list.is_array()) throw std::invalid_argument("expected a list of patches");
    std::vector<Patch> out;
    for (const auto& pj : list) {
        std::string error;
        auto p = patch_from_json(pj, &error);
        if (!p) throw std::invalid_argument(error);
        out.push_back(std::move(*p));
    }
    return out;
}

} // namespace

ScriptedScenario::ScriptedScenario(nlohmann::json document) : doc_(std::move(document)) {
    if (!doc_.is_object()) throw ScenarioError("scenario must be an object");
}

ScriptedScenario ScriptedScenario::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioError("cannot open scenario " + path.string());
    auto doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw ScenarioError("scenario " + path.string() + " is not valid JSON");
    return ScriptedScenario(std::move(doc));
}

const nlohmann::json* ScriptedScenario::find(const std::vector<std::string>& path) const {
    const nlohmann::json* node = &doc_;
    for (const auto& key : path) {
        if (!node->is_object()) return nullptr;
        auto it = node->find(key);
        if (it == node->end()) it = node->find("*");
        if (it == node->end()) return nullptr;
        node = &*it;
    }
    return node;
}

bool ScriptedScenario::has(const std::vector<std::string>& path) const { return find(path) != nullptr; }

const nlohmann::json& ScriptedScenario::lookup(const std::vector<std::string>& path) const {
    const nlohmann::json* node = find(path);
    if (!node) throw ScenarioError("missing scenario entry " + join_path(path));
    return *node;
}

ScriptedBackend::ScriptedBackend(ScriptedScenario scenario) : scenario_(std::move(scenario)) {}

nlohmann::json ScriptedBackend::generate_opening(const OpeningRequest& request) {
    return scenario_.lookup({"openings", request.agent});
}

std::vector<ChallengeDraft> ScriptedBackend::generate_challenges(const ChallengeRequest& request) {
    std::vector<std::string> path{"challenges", std::to_string(request.round), request.challenger, request.defender};
    const auto& entry = scenario_.lookup(path);
    return wrap(path, [&] {
        if (!entry.is_array()) throw std::invalid_argument("expected a list of challenges");
        std::vector<ChallengeDraft> out;
        for (const auto& item : entry) out.push_back(challenge_draft_from_json(item));
        return out;
    });
}

std::vector<Rebuttal> ScriptedBackend::generate_rebuttals(const RebuttalRequest& request) {
    std::vector<Rebuttal> out;
    for (const auto& c : request.challenges) {
        std::vector<std::string> path{"rebuttals", std::to_string(request.round), request.defender, c.id};
        nlohmann::json entry = scenario_.lookup(path);
        out.push_back(wrap(path, [&] {
            if (!entry.is_object()) throw std::invalid_argument("expected a rebuttal object");
            entry["challenge_id"] = c.id;
            return rebuttal_from_json(entry);
        }));
    }
    return out;
}

std::vector<Patch> ScriptedBackend::revise_phase1(const Phase1Request& request) {
    std::vector<std::string> path{"phase1", std::to_string(request.round), request.agent};
    const auto& entry = scenario_.lookup(path);
    return wrap(path, [&]() -> std::vector<Patch> {
        if (entry.is_array()) return parse_patch_list(entry);
        if (!entry.is_object() || !entry.contains("policy") || !entry["policy"].is_string())
            throw std::invalid_argument("expected a patch list or a policy");
        const auto policy = entry["policy"].get<std::string>();
        if (policy == "comply") return synthesize_obligation_patches(request.obligations, request.belief);
        if (policy == "noncomply") return {};
        if (policy == "partial") {
            // Weakening only: counterpositions and uncertainties are left for the engine.
            ObligationSet weaken_only = request.obligations;
            weaken_only.uncertainty.clear();
            std::vector<Patch> out;
            for (auto& p : synthesize_obligation_patches(weaken_only, request.belief))
                if (p.op == PatchOp::Update) out.push_back(std::move(p));
            return out;
        }
        throw std::invalid_argument("unknown policy \"" + policy + "\"");
    });
}

Phase2Response ScriptedBackend::revise_phase2(const Phase2Request& request) {
    std::vector<std::string> path{"phase2", std::to_string(request.round), request.agent};
    const auto& entry = scenario_.lookup(path);
    return wrap(path, [&]() -> Phase2Response {
        if (entry.is_object() && entry.contains("policy")) {
            if (entry["policy"] != "none") throw std::invalid_argument("unknown policy");
            return {};
        }
        return phase2_response_from_json(entry);
    });
}

ScoreResponse ScriptedBackend::score_pair(const ScoreRequest& request) {
    std::vector<std::string> path{"scores", request.challenge.id};
    const auto& entry = scenario_.lookup(path);
    return wrap(path, [&] { return score_response_from_json(entry); });
}

} // namespace chal
