#pragma once

#include "chal/node_id.hpp"

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace chal {

enum class NodeStatus { Active, Revised, Retracted };
enum class UncertaintyStatus { Active, Resolved };
enum class AssumptionType { Foundational, Empirical, Methodological, Scoping };
enum class EvidenceType { Empirical, Conceptual, ExpertConsensus };
enum class StepRole { Premise, Inference, Conclusion };
enum class InferenceType { Deductive, Inductive, Abductive };
enum class AttackType { Undermining, Rebutting, Undercutting };
enum class Sufficiency { Sufficient, Partial, Unaddressed, Moot };
enum class Importance { High, Medium, Low };

// String tables for every enum that appears on disk.
template <class E>
struct EnumNames;

#define CHAL_ENUM_NAMES(E, N, ...)                                                    \
    template <>                                                                        \
    struct EnumNames<E> {                                                              \
        static constexpr std::array<std::pair<E, std::string_view>, N> values{        \
            {__VA_ARGS__}};                                                            \
    };

CHAL_ENUM_NAMES(NodeStatus, 3, {NodeStatus::Active, "active"}, {NodeStatus::Revised, "revised"},
                {NodeStatus::Retracted, "retracted"})
CHAL_ENUM_NAMES(UncertaintyStatus, 2, {UncertaintyStatus::Active, "active"},
                {UncertaintyStatus::Resolved, "resolved"})
CHAL_ENUM_NAMES(AssumptionType, 4, {AssumptionType::Foundational, "foundational"},
                {AssumptionType::Empirical, "empirical"},
                {AssumptionType::Methodological, "methodological"},
                {AssumptionType::Scoping, "scoping"})
CHAL_ENUM_NAMES(EvidenceType, 3, {EvidenceType::Empirical, "empirical"},
                {EvidenceType::Conceptual, "conceptual"},
                {EvidenceType::ExpertConsensus, "expert_consensus"})
CHAL_ENUM_NAMES(StepRole, 3, {StepRole::Premise, "premise"}, {StepRole::Inference, "inference"},
                {StepRole::Conclusion, "conclusion"})
CHAL_ENUM_NAMES(InferenceType, 3, {InferenceType::Deductive, "deductive"},
                {InferenceType::Inductive, "inductive"}, {InferenceType::Abductive, "abductive"})
CHAL_ENUM_NAMES(AttackType, 3, {AttackType::Undermining, "undermining"},
                {AttackType::Rebutting, "rebutting"}, {AttackType::Undercutting, "undercutting"})
CHAL_ENUM_NAMES(Sufficiency, 4, {Sufficiency::Sufficient, "sufficient"},
                {Sufficiency::Partial, "partial"}, {Sufficiency::Unaddressed, "unaddressed"},
                {Sufficiency::Moot, "moot"})
CHAL_ENUM_NAMES(Importance, 3, {Importance::High, "high"}, {Importance::Medium, "medium"},
                {Importance::Low, "low"})

#undef CHAL_ENUM_NAMES

template <class E>
constexpr std::string_view to_string(E value) noexcept {
    for (const auto& [v, name] : EnumNames<E>::values)
        if (v == value) return name;
    return "?";
}

template <class E>
constexpr std::optional<E> enum_from_string(std::string_view text) noexcept {
    for (const auto& [v, name] : EnumNames<E>::values)
        if (name == text) return v;
    return std::nullopt;
}

/// Fields shared by D, A, E and C nodes.
struct StrengthFields {
    double strength = 0.0;
    std::string strength_justification;
    NodeStatus status = NodeStatus::Active;
    double original_strength = 0.0;
    int consecutive_defenses = 0;

    /// "revised" counts as active everywhere.
    bool retracted() const noexcept { return status == NodeStatus::Retracted; }

    bool operator==(const StrengthFields&) const = default;
};

struct DefinitionNode : StrengthFields {
    NodeId id{NodeKind::Definition, 1};
    std::string term;
    std::string definition;
    std::vector<NodeId> used_by;  // derived from A/E supported_by_definitions

    bool operator==(const DefinitionNode&) const = default;
};

struct AssumptionNode : StrengthFields {
    NodeId id{NodeKind::Assumption, 1};
    AssumptionType type = AssumptionType::Foundational;
    std::string statement;
    std::vector<NodeId> supports_claims;
    std::vector<NodeId> supported_by_definitions;

    bool operator==(const AssumptionNode&) const = default;
};

struct EvidenceNode : StrengthFields {
    NodeId id{NodeKind::Evidence, 1};
    EvidenceType type = EvidenceType::Empirical;
    std::string summary;
    std::string source;
    std::vector<NodeId> supports_claims;
    std::vector<NodeId> supported_by_definitions;

    bool operator==(const EvidenceNode&) const = default;
};

struct InferenceStep {
    StepRole role = StepRole::Premise;
    std::string text;
    std::optional<NodeId> reference;            // premise only
    std::optional<InferenceType> inference_type;  // inference only

    bool operator==(const InferenceStep&) const = default;
};

struct Prediction {
    std::string statement;
    std::string test;
    std::string decision_criterion;
    std::optional<std::vector<std::string>> potential_falsifiers;

    bool operator==(const Prediction&) const = default;
};

struct ClaimNode : StrengthFields {
    NodeId id{NodeKind::Claim, 1};
    std::string type;  // free-form label
    std::string statement;
    std::vector<NodeId> depends_on;
    std::vector<InferenceStep> inference_chain;
    std::vector<Prediction> predictions;

    bool operator==(const ClaimNode&) const = default;
};

struct CounterpositionNode {
    NodeId id{NodeKind::Counterposition, 1};
    std::vector<NodeId> targets;
    AttackType attack_type = AttackType::Undermining;
    std::string attack_strategy;
    std::string statement;
    std::string my_response;
    Sufficiency response_sufficiency = Sufficiency::Unaddressed;

    bool operator==(const CounterpositionNode&) const = default;
};

struct UncertaintyNode {
    NodeId id{NodeKind::Uncertainty, 1};
    std::vector<NodeId> targets;
    std::string question;
    Importance importance = Importance::Medium;
    UncertaintyStatus status = UncertaintyStatus::Active;
    std::string resolution_note;

    bool operator==(const UncertaintyNode&) const = default;
};

struct Thesis {
    std::string stance;
    std::vector<std::string> summary_bullets;
    double strength = 0.0;
    std::string strength_reasoning;

    bool operator==(const Thesis&) const = default;
};

/// A complete belief document. Collections are keyed and iterated in identifier order.
struct Belief {
    double breadth_exponent = 1.0;
    Thesis thesis;
    std::map<NodeId, DefinitionNode> definitions;
    std::map<NodeId, AssumptionNode> assumptions;
    std::map<NodeId, EvidenceNode> evidence;
    std::map<NodeId, ClaimNode> claims;
    std::map<NodeId, CounterpositionNode> counterpositions;
    std::map<NodeId, UncertaintyNode> uncertainties;

    bool operator==(const Belief&) const = default;

    bool contains(NodeId id) const;
    std::size_t count(NodeKind kind) const;
    std::vector<NodeId> ids(NodeKind kind) const;

    /// Next unused index for the kind (one past the largest index present).
    int next_index(NodeKind kind) const;

    /// Strength-bearing view of a D/A/E/C node; nullptr for X/U or missing ids.
    const StrengthFields* strength_node(NodeId id) const;
    StrengthFields* strength_node(NodeId id);

    /// True only for existing D/A/E/C nodes with status retracted.
    bool is_retracted(NodeId id) const;

    /// Declared strength dependencies: definitions for A/E, depends_on for C, nothing otherwise.
    std::vector<NodeId> dependencies(NodeId id) const;

    /// Declared dependencies that exist and are not retracted.
    std::vector<NodeId> active_dependencies(NodeId id) const;

    /// Strengths of non-retracted claims in identifier order.
    std::vector<double> active_claim_strengths() const;

    /// Targets of an X or U node; empty for other kinds.
    std::vector<NodeId> targets_of(NodeId id) const;
};

/// Recomputes every definition's used_by list from the A/E nodes that cite it.
void repair_used_by(Belief& belief);

} // namespace chal
