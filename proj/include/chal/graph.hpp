#pragma once

#include "chal/belief.hpp"

#include <json.hpp>

#include <compare>
#include <set>
#include <string>
#include <vector>

namespace chal {

/// A graph vertex: either a node or the thesis.
struct Vertex {
    bool is_thesis = false;
    NodeId id{};

    static Vertex thesis() { return Vertex{true, NodeId{}}; }
    static Vertex node(NodeId id) { return Vertex{false, id}; }

    std::string str() const { return is_thesis ? std::string("thesis") : id.str(); }

    auto operator<=>(const Vertex&) const = default;
};

struct Edge {
    Vertex from;
    Vertex to;

    auto operator<=>(const Edge&) const = default;
};

/// Dependency graph derived from a belief. Strength edges point from a dependency to
/// its dependent (D->A, A->C, active C->thesis); challenge edges point from X/U to targets.
struct BeliefGraph {
    std::set<NodeId> nodes;
    std::set<Edge> strength_edges;
    std::set<Edge> challenge_edges;

    bool operator==(const BeliefGraph&) const = default;

    std::vector<NodeId> dependencies_of(NodeId id) const;
    std::vector<Vertex> dependents_of(NodeId id) const;
};

/// Throws InvalidBeliefError when the belief does not validate.
BeliefGraph build_graph(const Belief& belief);

/// Non-retracted A/E/C nodes all of whose declared dependencies are retracted.
std::vector<NodeId> find_orphans(const BeliefGraph& graph, const Belief& belief);
std::vector<NodeId> find_orphans(const Belief& belief);

struct WeakNode {
    NodeId id;
    double strength = 0.0;
    bool operator==(const WeakNode&) const = default;
};

struct VulnerabilityReport {
    std::vector<WeakNode> weak_nodes;             // strength below the threshold
    std::vector<NodeId> open_counterpositions;    // partial or unaddressed
    std::vector<NodeId> open_uncertainties;       // active with high/medium importance
    std::vector<NodeId> orphans;

    bool operator==(const VulnerabilityReport&) const = default;
};

VulnerabilityReport vulnerability_report(const Belief& belief, double low_threshold);

nlohmann::ordered_json to_json(const VulnerabilityReport& report);
nlohmann::ordered_json to_json(const BeliefGraph& graph);

} // namespace chal
