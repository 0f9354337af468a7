#pragma once

#include "chal/belief.hpp"
#include "chal/graph.hpp"
#include "chal/patch.hpp"
#include "chal/protocol.hpp"
#include "chal/strength.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace chal {

// Requests carry everything a backend may need; backends keep no per-debate state.

struct OpeningRequest {
    std::string agent;
    std::string persona;
    std::string topic;
};

/// A challenge as emitted by a backend; the pipeline assigns round, agents, index and id.
struct ChallengeDraft {
    std::string text;
    std::vector<NodeId> targets;
    AttackType attack_type = AttackType::Undermining;
    std::string attack_strategy;

    bool operator==(const ChallengeDraft&) const = default;
};

struct ChallengeRequest {
    int round = 1;
    std::string challenger;
    std::string defender;
    std::string persona;
    std::string topic;
    Belief own;
    Belief opponent;
    VulnerabilityReport vulnerabilities;
    std::vector<Exchange> prior;  // earlier exchanges between the same pair
    int max_challenges = 1;
};

struct RebuttalRequest {
    int round = 1;
    std::string defender;
    std::string persona;
    std::string topic;
    Belief own;
    std::vector<Challenge> challenges;
};

struct Phase1Request {
    int round = 1;
    std::string agent;
    std::string persona;
    std::string topic;
    Belief belief;
    std::vector<Exchange> exchanges;  // this round's exchanges with the agent as defender
    ObligationSet obligations;
    int attempt = 1;                          // 2 on the corrective retry
    std::optional<ComplianceReport> previous;  // set on the corrective retry
};

struct Phase2Request {
    int round = 1;
    std::string agent;
    std::string persona;
    std::string topic;
    Belief belief;
    PositionAnalysis analysis;
    ComplianceReport compliance;
};

struct Phase2Response {
    std::vector<Patch> patches;
    std::optional<std::string> stance;
    std::optional<std::vector<std::string>> summary_bullets;
};

struct ScoreRequest {
    int round = 1;
    Challenge challenge;
    Rebuttal rebuttal;
    nlohmann::ordered_json challenger_excerpt;
    nlohmann::ordered_json defender_excerpt;
    AdjudicatorParams params;
};

struct ScoreResponse {
    ComponentScores scores;
    std::string reasoning;
};

/// Council member contract. Implementations throw BackendError (or ScenarioError) when
/// they cannot produce output; the pipeline then takes the stage's degraded path.
class CouncilBackend {
public:
    virtual ~CouncilBackend() = default;

    /// Candidate belief document; the pipeline validates it.
    virtual nlohmann::json generate_opening(const OpeningRequest& request) = 0;
    virtual std::vector<ChallengeDraft> generate_challenges(const ChallengeRequest& request) = 0;
    virtual std::vector<Rebuttal> generate_rebuttals(const RebuttalRequest& request) = 0;
    virtual std::vector<Patch> revise_phase1(const Phase1Request& request) = 0;
    virtual Phase2Response revise_phase2(const Phase2Request& request) = 0;
};

class AdjudicatorBackend {
public:
    virtual ~AdjudicatorBackend() = default;
    virtual ScoreResponse score_pair(const ScoreRequest& request) = 0;
};

/// Minimal patches meeting the obligations: a strength decrement (retraction at or below the
/// decrement) on the first weakenable disputed node, a partial counterposition, and an
/// uncertainty per unresolved challenge. With a report, only its unsatisfied parts are covered.
std::vector<Patch> synthesize_obligation_patches(const ObligationSet& obligations, const Belief& belief,
                                                 const ComplianceReport* report = nullptr,
                                                 double decrement = 0.05);

nlohmann::ordered_json to_json(const ChallengeDraft& draft);
ChallengeDraft challenge_draft_from_json(const nlohmann::json& value);
Phase2Response phase2_response_from_json(const nlohmann::json& value);
ScoreResponse score_response_from_json(const nlohmann::json& value);

} // namespace chal
