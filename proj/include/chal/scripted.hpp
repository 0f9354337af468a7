#pragma once

#include "chal/agent.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace chal {

/// Scripted outputs for every backend call, keyed by path:
///   openings/{agent}
///   challenges/{round}/{challenger}/{defender}   list of challenge drafts
///   rebuttals/{round}/{defender}/{challenge_id}  rebuttal (challenge_id may be omitted)
///   phase1/{round}/{agent}                       patch list or {"policy": comply|noncomply|partial}
///   phase2/{round}/{agent}                       {patches, stance, summary_bullets} or {"policy": "none"}
///   scores/{challenge_id}                        four component scores plus reasoning
/// A "*" key at any level matches when no exact key exists. Lookups that match nothing
/// throw ScenarioError naming the path.
class ScriptedScenario {
public:
    ScriptedScenario() = default;
    explicit ScriptedScenario(nlohmann::json document);

    static ScriptedScenario load(const std::filesystem::path& path);

    const nlohmann::json& lookup(const std::vector<std::string>& path) const;
    bool has(const std::vector<std::string>& path) const;
    const nlohmann::json& document() const noexcept { return doc_; }

private:
    const nlohmann::json* find(const std::vector<std::string>& path) const;

    nlohmann::json doc_ = nlohmann::json::object();
};

/// Deterministic backend over a scenario; serves both contracts and holds no mutable state,
/// so concurrent calls are safe.
class ScriptedBackend final : public CouncilBackend, public AdjudicatorBackend {
public:
    explicit ScriptedBackend(ScriptedScenario scenario);

    nlohmann::json generate_opening(const OpeningRequest& request) override;
    std::vector<ChallengeDraft> generate_challenges(const ChallengeRequest& request) override;
    std::vector<Rebuttal> generate_rebuttals(const RebuttalRequest& request) override;
    std::vector<Patch> revise_phase1(const Phase1Request& request) override;
    Phase2Response revise_phase2(const Phase2Request& request) override;
    ScoreResponse score_pair(const ScoreRequest& request) override;

    const ScriptedScenario& scenario() const noexcept { return scenario_; }

private:
    ScriptedScenario scenario_;
};

} // namespace chal
