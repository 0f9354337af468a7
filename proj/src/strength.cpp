#include "chal/strength.hpp"

#include "chal/belief_io.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>

namespace chal {

namespace {

constexpr double kThesisEpsilon = 1e-12;

constexpr std::array<std::pair<ChangeCause, std::string_view>, 7> kCauseNames{{
    {ChangeCause::Patch, "patch"},
    {ChangeCause::Retraction, "retraction"},
    {ChangeCause::DependencyCap, "dependency_cap"},
    {ChangeCause::OrphanCap, "orphan_cap"},
    {ChangeCause::DefenseBoost, "defense_boost"},
    {ChangeCause::BoostCascade, "boost_cascade"},
    {ChangeCause::ThesisRecompute, "thesis_recompute"},
}};

double mean(std::span<const double> v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Shortest rendering with at least two decimals: 0.5 -> "0.50", 0.4712 -> "0.4712".
std::string short_strength(double v) {
    std::string s = fmt::format("{:.4f}", v);
    while (s.size() > 4 && s.back() == '0' && s[s.size() - 3] != '.') s.pop_back();
    return s;
}

void set_strength(Belief& b, NodeId id, double value, ChangeCause cause, ChangeLog& log) {
    auto* n = b.strength_node(id);
    if (n->strength == value) return;
    log.push_back({Vertex::node(id), n->strength, value, cause});
    n->strength = value;
}

// Claim order such that every claim follows its claim dependencies; ties by id.
std::vector<NodeId> claim_levels(const Belief& b) {
    std::map<NodeId, int> level;
    std::set<NodeId> visiting;
    std::function<int(NodeId)> depth = [&](NodeId id) -> int {
        if (auto it = level.find(id); it != level.end()) return it->second;
        if (!visiting.insert(id).second) return 0;  // cycle guard for invalid input
        int d = 0;
        for (NodeId dep : b.dependencies(id))
            if (dep.kind == NodeKind::Claim && b.claims.count(dep)) d = std::max(d, depth(dep) + 1);
        visiting.erase(id);
        level[id] = d;
        return d;
    };
    std::vector<std::pair<int, NodeId>> order;
    for (const auto& [id, _] : b.claims) order.emplace_back(depth(id), id);
    std::sort(order.begin(), order.end());
    std::vector<NodeId> out;
    for (const auto& [_, id] : order) out.push_back(id);
    return out;
}

void cap_node(Belief& b, NodeId id, const StrengthParams& params, ChangeLog& log) {
    auto* n = b.strength_node(id);
    if (n->retracted()) return;
    auto declared = b.dependencies(id);
    if (declared.empty()) return;
    auto active = b.active_dependencies(id);
    if (active.empty()) {
        if (n->strength > params.s_orph) set_strength(b, id, params.s_orph, ChangeCause::OrphanCap, log);
        return;
    }
    double ceiling = 1.0;
    for (NodeId dep : active) ceiling = std::min(ceiling, b.strength_node(dep)->strength);
    if (n->strength > ceiling) set_strength(b, id, ceiling, ChangeCause::DependencyCap, log);
}

} // namespace

void StrengthParams::validate() const {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("breadth exponent p must be positive");
    if (!(s_orph >= 0.0 && s_orph <= 1.0)) throw std::invalid_argument("s_orph must lie in [0,1]");
    if (!(boost_b >= 0.0 && boost_b <= 1.0)) throw std::invalid_argument("boost_b must lie in [0,1]");
    if (!(boost_cmax >= 0.0 && boost_cmax <= 1.0)) throw std::invalid_argument("boost_cmax must lie in [0,1]");
}

std::string_view to_string(ChangeCause cause) noexcept {
    for (const auto& [c, name] : kCauseNames)
        if (c == cause) return name;
    return "?";
}

std::optional<ChangeCause> change_cause_from_string(std::string_view text) noexcept {
    for (const auto& [c, name] : kCauseNames)
        if (name == text) return c;
    return std::nullopt;
}

double breadth_multiplier(double n, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("breadth exponent p must be positive");
    if (n < 0.0) throw std::invalid_argument("claim count must be nonnegative");
    double np = std::pow(n, p);
    return np / (np + 1.0);
}

double thesis_strength(std::span<const double> strengths, double p) {
    if (!(p > 0.0) || !std::isfinite(p)) throw std::invalid_argument("breadth exponent p must be positive");
    for (double s : strengths)
        if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument(fmt::format("claim strength {} outside [0,1]", s));
    if (strengths.empty()) return 0.0;
    return mean(strengths) * breadth_multiplier(static_cast<double>(strengths.size()), p);
}

GradientReport thesis_gradient(double avg_strength, double n, double p) {
    if (!(n > 0.0)) throw std::invalid_argument("gradient is undefined for an empty claim set");
    if (!(p > 0.0)) throw std::invalid_argument("breadth exponent p must be positive");
    if (!(avg_strength >= 0.0 && avg_strength <= 1.0)) throw std::invalid_argument("average strength outside [0,1]");
    double np = std::pow(n, p);
    GradientReport g;
    g.avg_strength = avg_strength;
    g.active_count = n;
    g.d_savg = np / (np + 1.0);
    g.d_n = avg_strength * p * std::pow(n, p - 1.0) / ((np + 1.0) * (np + 1.0));
    return g;
}

std::string thesis_reasoning(const std::vector<double>& strengths, double p) {
    if (strengths.empty()) return "no active claims; thesis strength is 0";
    std::vector<std::string> parts;
    for (double s : strengths) parts.push_back(short_strength(s));
    double avg = mean(strengths);
    double n = static_cast<double>(strengths.size());
    double mult = breadth_multiplier(n, p);
    return fmt::format("avg({}) x ({}^{} / ({}^{} + 1)) = {:.4f} x {:.4f} = {:.4f}", fmt::join(parts, ", "),
                       strengths.size(), p, strengths.size(), p, avg, mult, avg * mult);
}

void recompute_thesis(Belief& belief, ChangeLog* log) {
    auto strengths = belief.active_claim_strengths();
    double s = thesis_strength(strengths, belief.breadth_exponent);
    if (std::abs(s - belief.thesis.strength) <= kThesisEpsilon) return;
    if (log) log->push_back({Vertex::thesis(), belief.thesis.strength, s, ChangeCause::ThesisRecompute});
    belief.thesis.strength = s;
    belief.thesis.strength_reasoning = thesis_reasoning(strengths, belief.breadth_exponent);
}

EngineResult enforce_constraints(const Belief& belief, const StrengthParams& params) {
    EngineResult r{belief, {}};
    Belief& b = r.belief;

    for (NodeKind kind : {NodeKind::Definition, NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim})
        for (NodeId id : b.ids(kind))
            if (b.is_retracted(id)) set_strength(b, id, 0.0, ChangeCause::Retraction, r.changelog);

    for (NodeKind kind : {NodeKind::Assumption, NodeKind::Evidence})
        for (NodeId id : b.ids(kind)) cap_node(b, id, params, r.changelog);

    for (NodeId id : claim_levels(b)) cap_node(b, id, params, r.changelog);

    recompute_thesis(b, &r.changelog);
    return r;
}

std::vector<NodeId> boost_cascade_set(const Belief& belief, std::span<const NodeId> targets) {
    std::set<NodeId> target_set(targets.begin(), targets.end());
    std::set<NodeId> seen;
    std::deque<NodeId> queue(targets.begin(), targets.end());
    while (!queue.empty()) {
        NodeId id = queue.front();
        queue.pop_front();
        for (NodeId dep : belief.active_dependencies(id))
            if (seen.insert(dep).second) queue.push_back(dep);
    }
    std::vector<NodeId> out;
    for (NodeId id : seen)
        if (!target_set.count(id)) out.push_back(id);
    return out;
}

EngineResult apply_defense_boosts(const Belief& belief, std::span<const NodeId> targets,
                                  const StrengthParams& params) {
    for (NodeId id : targets) {
        if (!is_strength_bearing(id.kind))
            throw std::invalid_argument("defense boost target " + id.str() + " carries no strength");
        const auto* n = belief.strength_node(id);
        if (n == nullptr) throw std::invalid_argument("defense boost target " + id.str() + " does not exist");
        if (n->retracted()) throw std::invalid_argument("defense boost target " + id.str() + " is retracted");
    }

    Belief b = belief;
    ChangeLog log;
    auto bump = [&](NodeId id, ChangeCause cause) {
        auto* n = b.strength_node(id);
        double ceiling = std::min(n->original_strength + params.boost_cmax, 1.0);
        double next = std::max(n->strength, std::min(n->strength + params.boost_b, ceiling));
        set_strength(b, id, next, cause, log);
    };
    for (NodeId id : targets) {
        bump(id, ChangeCause::DefenseBoost);
        b.strength_node(id)->consecutive_defenses += 1;
    }
    for (NodeId id : boost_cascade_set(belief, targets)) bump(id, ChangeCause::BoostCascade);

    EngineResult r = enforce_constraints(b, params);
    log.insert(log.end(), r.changelog.begin(), r.changelog.end());
    r.changelog = std::move(log);
    return r;
}

std::string_view to_string(Scenario scenario) noexcept {
    switch (scenario) {
    case Scenario::RaiseAvg: return "raise_avg";
    case Scenario::AddAbove: return "add_above";
    case Scenario::AddAvg: return "add_avg";
    case Scenario::RetractWeakest: return "retract_weakest";
    }
    return "?";
}

PositionAnalysis position_analysis(const Belief& belief, const StrengthParams& params, double raise_increment,
                                   double add_above_delta) {
    (void)params;
    const double p = belief.breadth_exponent;
    PositionAnalysis a;
    a.raise_increment = raise_increment;
    a.add_above_delta = add_above_delta;

    std::vector<std::pair<NodeId, double>> active;
    for (const auto& [id, c] : belief.claims)
        if (!c.retracted()) active.emplace_back(id, c.strength);
    std::vector<double> s;
    for (const auto& [_, v] : active) s.push_back(v);

    a.active_claims = s.size();
    a.current_strength = thesis_strength(s, p);
    double avg = mean(s);

    auto with = [&](double extra) {
        auto t = s;
        t.push_back(extra);
        return thesis_strength(t, p);
    };
    a.scenario_add_avg = with(avg);
    a.scenario_add_above = with(std::min(avg + add_above_delta, 1.0));

    if (!s.empty()) {
        a.gradient = thesis_gradient(avg, static_cast<double>(s.size()), p);
        std::vector<double> raised;
        for (double v : s) raised.push_back(std::min(v + raise_increment, 1.0));
        a.scenario_raise_avg = thesis_strength(raised, p);

        auto weakest = std::min_element(active.begin(), active.end(),
                                        [](const auto& x, const auto& y) { return x.second < y.second; });
        a.weakest_claim = weakest->first;
        std::vector<double> rest;
        for (const auto& [id, v] : active)
            if (id != weakest->first) rest.push_back(v);
        a.scenario_retract_weakest = thesis_strength(rest, p);
    }

    for (const auto& [id, strength] : active) {
        auto deps = belief.active_dependencies(id);
        if (deps.empty()) continue;
        NodeId best = deps.front();
        for (NodeId d : deps)
            if (belief.strength_node(d)->strength < belief.strength_node(best)->strength) best = d;
        a.weakest_dependencies.push_back({id, best, strength, belief.strength_node(best)->strength});
    }
    a.orphans = find_orphans(belief);

    // Fixed tie order: raise_avg, add_above, add_avg, retract_weakest.
    std::vector<std::pair<Scenario, std::optional<double>>> candidates{
        {Scenario::RaiseAvg, a.scenario_raise_avg},
        {Scenario::AddAbove, a.scenario_add_above},
        {Scenario::AddAvg, a.scenario_add_avg},
        {Scenario::RetractWeakest, a.scenario_retract_weakest},
    };
    std::optional<double> best;
    for (const auto& [scenario, value] : candidates) {
        if (!value) continue;
        if (!best || *value > *best) {
            best = value;
            a.recommendation = scenario;
        }
    }
    return a;
}

std::string render_position_analysis(const PositionAnalysis& a) {
    std::string out = "POSITION ANALYSIS\n";
    out += fmt::format("Current thesis strength: {:.4f} ({} active claims)\n", a.current_strength, a.active_claims);
    if (a.gradient) {
        out += fmt::format("Gradient: d/d(avg) = {:.4f}, d/dn = {:.6f} (avg {:.4f})\n", a.gradient->d_savg,
                           a.gradient->d_n, a.gradient->avg_strength);
    } else {
        out += "Gradient: undefined with no active claims\n";
    }
    out += "Scenarios:\n";
    if (a.scenario_raise_avg)
        out += fmt::format("  raise_avg (+{:.2f} on every claim): {:.4f}\n", a.raise_increment, *a.scenario_raise_avg);
    else
        out += "  raise_avg: not applicable\n";
    out += fmt::format("  add_above (one claim at avg+{:.2f}): {:.4f}\n", a.add_above_delta, a.scenario_add_above);
    out += fmt::format("  add_avg (one claim at avg): {:.4f}\n", a.scenario_add_avg);
    if (a.scenario_retract_weakest)
        out += fmt::format("  retract_weakest ({}): {:.4f}\n", a.weakest_claim->str(), *a.scenario_retract_weakest);
    else
        out += "  retract_weakest: not applicable\n";
    out += fmt::format("Recommendation: {}\n", to_string(a.recommendation));
    if (!a.weakest_dependencies.empty()) {
        out += "Limiting dependencies:\n";
        for (const auto& w : a.weakest_dependencies)
            out += fmt::format("  {} ({:.2f}) limited by {} ({:.2f})\n", w.claim.str(), w.claim_strength,
                               w.dependency.str(), w.dependency_strength);
    }
    if (!a.orphans.empty()) {
        std::vector<std::string> ids;
        for (NodeId id : a.orphans) ids.push_back(id.str());
        out += fmt::format("Orphaned nodes: {}\n", fmt::join(ids, ", "));
    }
    return out;
}

nlohmann::ordered_json to_json(const PositionAnalysis& a) {
    nlohmann::ordered_json o;
    o["current_strength"] = a.current_strength;
    o["active_claims"] = a.active_claims;
    if (a.gradient) {
        o["gradient"] = {{"avg_strength", a.gradient->avg_strength},
                         {"active_count", a.gradient->active_count},
                         {"d_savg", a.gradient->d_savg},
                         {"d_n", a.gradient->d_n}};
    } else {
        o["gradient"] = nullptr;
    }
    o["scenario_raise_avg"] = a.scenario_raise_avg ? nlohmann::ordered_json(*a.scenario_raise_avg) : nullptr;
    o["scenario_add_avg"] = a.scenario_add_avg;
    o["scenario_add_above"] = a.scenario_add_above;
    o["scenario_retract_weakest"] =
        a.scenario_retract_weakest ? nlohmann::ordered_json(*a.scenario_retract_weakest) : nullptr;
    o["weakest_claim"] = a.weakest_claim ? nlohmann::ordered_json(a.weakest_claim->str()) : nullptr;
    auto deps = nlohmann::ordered_json::array();
    for (const auto& w : a.weakest_dependencies)
        deps.push_back({{"claim", w.claim.str()},
                        {"dependency", w.dependency.str()},
                        {"claim_strength", w.claim_strength},
                        {"dependency_strength", w.dependency_strength}});
    o["weakest_dependencies"] = std::move(deps);
    o["orphans"] = encode_ids(a.orphans);
    o["recommendation"] = to_string(a.recommendation);
    return o;
}

nlohmann::ordered_json to_json(const ChangeEntry& e) {
    nlohmann::ordered_json o;
    o["node"] = e.node.str();
    o["old_strength"] = round4(e.old_strength);
    o["new_strength"] = round4(e.new_strength);
    o["cause"] = to_string(e.cause);
    return o;
}

} // namespace chal
