#pragma once

#include "chal/belief.hpp"
#include "chal/patch.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chal {

// Attack taxonomy

const std::vector<std::string_view>& taxonomy_strategies(AttackType type);
std::size_t taxonomy_size();
std::optional<AttackType> attack_type_of(std::string_view strategy);
bool strategy_matches(AttackType type, std::string_view strategy);

// Exchanges

enum class RebuttalAction { Refute, Concede, Defer };
enum class VerdictKind { CritiqueValid, RebuttalValid, Unresolved };

std::string_view to_string(RebuttalAction action) noexcept;
std::string_view to_string(VerdictKind kind) noexcept;
std::optional<RebuttalAction> rebuttal_action_from_string(std::string_view text) noexcept;
std::optional<VerdictKind> verdict_kind_from_string(std::string_view text) noexcept;

struct Challenge {
    std::string id;  // "r{round}.{challenger}.{defender}.{index}"
    int round = 1;
    std::string challenger;
    std::string defender;
    int index = 1;
    std::string text;
    std::vector<NodeId> targets;
    AttackType attack_type = AttackType::Undermining;
    std::string attack_strategy;

    bool operator==(const Challenge&) const = default;
};

std::string challenge_id(int round, std::string_view challenger, std::string_view defender, int index);

/// Problems with a challenge against the defender's current belief; empty when valid.
std::vector<std::string> validate_challenge(const Challenge& challenge, const Belief& defender_belief);

struct Rebuttal {
    std::string challenge_id;
    RebuttalAction action = RebuttalAction::Refute;
    std::string text;
    std::vector<Patch> tentative_patches;

    bool operator==(const Rebuttal&) const = default;
};

/// A concession must carry at least one weakening tentative patch.
std::vector<std::string> validate_rebuttal(const Rebuttal& rebuttal, const Belief& defender_belief);

struct ComponentScores {
    double challenger_logic = 0.0;
    double challenger_ethics = 0.0;
    double defender_logic = 0.0;
    double defender_ethics = 0.0;

    bool operator==(const ComponentScores&) const = default;
};

struct AdjudicatorParams {
    std::string logic_system = "classical_informal_bayesian";
    std::string ethics_system = "none_pure_logic";
    double w_logic = 1.0;
    double w_ethics = 0.0;
    double tau = 0.15;

    /// Throws std::invalid_argument on out-of-range weights or threshold.
    void validate() const;

    bool operator==(const AdjudicatorParams&) const = default;
};

struct Judgement {
    VerdictKind kind = VerdictKind::Unresolved;
    ComponentScores effective;  // after pure-mode zeroing
    double sigma_c = 0.0;
    double sigma_d = 0.0;
};

/// Weighted combination and threshold rule. Throws std::invalid_argument on bad input.
Judgement combine_and_judge(const ComponentScores& scores, const AdjudicatorParams& params);

struct Verdict {
    VerdictKind kind = VerdictKind::Unresolved;
    ComponentScores scores;
    double sigma_c = 0.0;
    double sigma_d = 0.0;
    std::string reasoning;
    bool concession_forced = false;

    bool operator==(const Verdict&) const = default;
};

/// combine_and_judge plus the optional rule that an explicit concession is a valid critique.
Verdict adjudicate(const ComponentScores& scores, std::string reasoning,
                   const AdjudicatorParams& params, RebuttalAction action,
                   bool concession_forces_critique);

struct Exchange {
    int round = 1;
    Challenge challenge;
    Rebuttal rebuttal;
    Verdict verdict;

    bool operator==(const Exchange&) const = default;
};

// Obligations

struct WeakenObligation {
    std::string challenge_id;
    std::vector<NodeId> targets;  // disputed nodes (X/U targets expanded)
    AttackType attack_type = AttackType::Undermining;
    std::string attack_strategy;
    std::string challenge_text;
    std::string rebuttal_text;
};

struct UncertaintyObligation {
    std::string challenge_id;
    std::vector<NodeId> targets;
    std::string question;
};

struct BoostObligation {
    std::string challenge_id;
    std::vector<NodeId> targets;  // the challenge targets as issued
};

struct ObligationSet {
    std::string defender;
    std::vector<WeakenObligation> weaken;
    std::vector<UncertaintyObligation> uncertainty;
    std::vector<BoostObligation> boost;

    bool empty() const noexcept { return weaken.empty() && uncertainty.empty() && boost.empty(); }
};

/// Challenge targets with counterposition/uncertainty targets replaced by what they target.
std::vector<NodeId> disputed_nodes(const Belief& belief, std::span<const NodeId> targets);

/// Targets plus their transitive dependencies (declared, active or not).
std::vector<NodeId> support_closure(const Belief& belief, std::span<const NodeId> targets);

ObligationSet enforcement_obligations(std::span<const Exchange> exchanges, std::string_view defender,
                                      const Belief& defender_belief);

enum class ObligationKind { Weaken, Uncertainty };

struct ObligationStatus {
    ObligationKind kind = ObligationKind::Weaken;
    std::string challenge_id;
    bool weakening_met = false;
    bool counterposition_met = false;
    bool uncertainty_met = false;
    std::vector<std::size_t> satisfying_patches;
    std::string detail;

    bool satisfied() const noexcept {
        return kind == ObligationKind::Weaken ? (weakening_met && counterposition_met)
                                              : uncertainty_met;
    }

    bool operator==(const ObligationStatus&) const = default;
};

struct ComplianceReport {
    std::vector<ObligationStatus> items;
    bool all_satisfied() const noexcept;
    std::string to_text() const;

    bool operator==(const ComplianceReport&) const = default;
};

/// Matches submitted patches to obligations; each patch satisfies at most one requirement.
ComplianceReport check_obligations(const ObligationSet& obligations, std::span<const Patch> submitted,
                                   const Belief& before);

/// R * S * N * (N - 1). Throws std::invalid_argument for N < 2, S < 1 or R < 1.
long long exchange_schedule(int agents, int challenges_per_pair, int rounds);

// Serialization

nlohmann::ordered_json to_json(const Challenge& challenge);
nlohmann::ordered_json to_json(const Rebuttal& rebuttal);
nlohmann::ordered_json to_json(const Verdict& verdict);
nlohmann::ordered_json to_json(const Exchange& exchange);
nlohmann::ordered_json to_json(const ComponentScores& scores);
nlohmann::ordered_json to_json(const AdjudicatorParams& params);
nlohmann::ordered_json to_json(const ObligationSet& obligations);
nlohmann::ordered_json to_json(const ComplianceReport& report);

Challenge challenge_from_json(const nlohmann::json& value);
Rebuttal rebuttal_from_json(const nlohmann::json& value);
Verdict verdict_from_json(const nlohmann::json& value);
Exchange exchange_from_json(const nlohmann::json& value);
ComponentScores scores_from_json(const nlohmann::json& value);
AdjudicatorParams adjudicator_params_from_json(const nlohmann::json& value);
ComplianceReport compliance_report_from_json(const nlohmann::json& value);

} // namespace chal
