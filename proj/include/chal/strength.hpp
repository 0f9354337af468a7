#pragma once

#include "chal/belief.hpp"
#include "chal/graph.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace chal {

struct StrengthParams {
    double p = 1.0;            // breadth sensitivity exponent
    double s_orph = 0.5;       // orphan cap
    double boost_b = 0.02;     // per-defense increment
    double boost_cmax = 0.15;  // cumulative boost cap above original strength

    /// Throws std::invalid_argument when a value is out of range.
    void validate() const;

    bool operator==(const StrengthParams&) const = default;
};

enum class ChangeCause {
    Patch,
    Retraction,
    DependencyCap,
    OrphanCap,
    DefenseBoost,
    BoostCascade,
    ThesisRecompute,
};

std::string_view to_string(ChangeCause cause) noexcept;
std::optional<ChangeCause> change_cause_from_string(std::string_view text) noexcept;

struct ChangeEntry {
    Vertex node;
    double old_strength = 0.0;
    double new_strength = 0.0;
    ChangeCause cause = ChangeCause::Patch;

    bool operator==(const ChangeEntry&) const = default;
};

using ChangeLog = std::vector<ChangeEntry>;

struct EngineResult {
    Belief belief;
    ChangeLog changelog;
};

/// Breadth multiplier n^p / (n^p + 1), defined for real n >= 0.
double breadth_multiplier(double n, double p);

/// Mean of the strengths times the breadth multiplier; 0 for an empty list.
/// Throws std::invalid_argument for strengths outside [0,1] or p <= 0.
double thesis_strength(std::span<const double> active_claim_strengths, double p);

struct GradientReport {
    double avg_strength = 0.0;
    double active_count = 0.0;
    double d_savg = 0.0;  // d s_theta / d avg
    double d_n = 0.0;     // d s_theta / d n, n treated as continuous
};

/// Closed-form partial derivatives of the thesis strength. Throws for n <= 0.
GradientReport thesis_gradient(double avg_strength, double n, double p);

/// Sets the thesis strength from the active claims when it differs from the stored value
/// by more than 1e-12, and rewrites the reasoning trace. Logs the change when it happens.
void recompute_thesis(Belief& belief, ChangeLog* log);

/// Human-readable trace of the thesis computation.
std::string thesis_reasoning(const std::vector<double>& strengths, double p);

/// Lowers every node to its dependency ceiling (or the orphan cap), tier by tier, then
/// recomputes the thesis. Never raises a strength.
EngineResult enforce_constraints(const Belief& belief, const StrengthParams& params);

/// Ancestors of the targets through active dependencies, excluding the targets themselves.
std::vector<NodeId> boost_cascade_set(const Belief& belief, std::span<const NodeId> targets);

/// Defense boost with cascade. Throws std::invalid_argument for missing, retracted or X/U targets.
EngineResult apply_defense_boosts(const Belief& belief, std::span<const NodeId> targets,
                                  const StrengthParams& params);

enum class Scenario { RaiseAvg, AddAbove, AddAvg, RetractWeakest };

std::string_view to_string(Scenario scenario) noexcept;

struct WeakestDependency {
    NodeId claim;
    NodeId dependency;
    double claim_strength = 0.0;
    double dependency_strength = 0.0;
};

struct PositionAnalysis {
    double current_strength = 0.0;
    std::size_t active_claims = 0;
    std::optional<GradientReport> gradient;  // absent with no active claims
    std::optional<double> scenario_raise_avg;
    double scenario_add_avg = 0.0;
    double scenario_add_above = 0.0;
    std::optional<double> scenario_retract_weakest;
    std::optional<NodeId> weakest_claim;
    std::vector<WeakestDependency> weakest_dependencies;
    std::vector<NodeId> orphans;
    Scenario recommendation = Scenario::AddAbove;
    double raise_increment = 0.05;
    double add_above_delta = 0.10;
};

PositionAnalysis position_analysis(const Belief& belief, const StrengthParams& params,
                                   double raise_increment = 0.05, double add_above_delta = 0.10);

/// Plain-text block injected into revision prompts.
std::string render_position_analysis(const PositionAnalysis& analysis);
nlohmann::ordered_json to_json(const PositionAnalysis& analysis);

nlohmann::ordered_json to_json(const ChangeEntry& entry);

} // namespace chal
