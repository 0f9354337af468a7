#include "chal/graph.hpp"

#include "chal/belief_io.hpp"

#include <algorithm>

namespace chal {

std::vector<NodeId> BeliefGraph::dependencies_of(NodeId id) const {
    std::vector<NodeId> out;
    for (const auto& e : strength_edges)
        if (!e.to.is_thesis && e.to.id == id && !e.from.is_thesis) out.push_back(e.from.id);
    return out;
}

std::vector<Vertex> BeliefGraph::dependents_of(NodeId id) const {
    std::vector<Vertex> out;
    for (const auto& e : strength_edges)
        if (!e.from.is_thesis && e.from.id == id) out.push_back(e.to);
    return out;
}

BeliefGraph build_graph(const Belief& belief) {
    auto report = validate_belief(belief);
    if (!report.ok())
        throw InvalidBeliefError("cannot build a graph from an invalid belief:\n" + report.to_text(), report);

    BeliefGraph g;
    for (NodeKind kind : kAllKinds)
        for (NodeId id : belief.ids(kind)) g.nodes.insert(id);

    for (NodeKind kind : {NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim})
        for (NodeId id : belief.ids(kind))
            for (NodeId dep : belief.dependencies(id))
                g.strength_edges.insert({Vertex::node(dep), Vertex::node(id)});

    for (const auto& [id, claim] : belief.claims)
        if (!claim.retracted()) g.strength_edges.insert({Vertex::node(id), Vertex::thesis()});

    for (NodeKind kind : {NodeKind::Counterposition, NodeKind::Uncertainty})
        for (NodeId id : belief.ids(kind))
            for (NodeId target : belief.targets_of(id))
                g.challenge_edges.insert({Vertex::node(id), Vertex::node(target)});
    return g;
}

std::vector<NodeId> find_orphans(const BeliefGraph& graph, const Belief& belief) {
    std::vector<NodeId> out;
    for (NodeId id : graph.nodes) {
        if (id.kind != NodeKind::Assumption && id.kind != NodeKind::Evidence && id.kind != NodeKind::Claim)
            continue;
        if (belief.is_retracted(id)) continue;
        auto deps = graph.dependencies_of(id);
        if (deps.empty()) continue;
        if (std::all_of(deps.begin(), deps.end(), [&](NodeId d) { return belief.is_retracted(d); }))
            out.push_back(id);
    }
    return out;
}

std::vector<NodeId> find_orphans(const Belief& belief) {
    std::vector<NodeId> out;
    for (NodeKind kind : {NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim})
        for (NodeId id : belief.ids(kind)) {
            if (belief.is_retracted(id)) continue;
            auto deps = belief.dependencies(id);
            if (!deps.empty() && belief.active_dependencies(id).empty()) out.push_back(id);
        }
    return out;
}

VulnerabilityReport vulnerability_report(const Belief& belief, double low_threshold) {
    VulnerabilityReport r;
    for (NodeKind kind : {NodeKind::Definition, NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim})
        for (NodeId id : belief.ids(kind)) {
            const auto* n = belief.strength_node(id);
            if (!n->retracted() && n->strength < low_threshold) r.weak_nodes.push_back({id, n->strength});
        }
    for (const auto& [id, x] : belief.counterpositions)
        if (x.response_sufficiency == Sufficiency::Partial || x.response_sufficiency == Sufficiency::Unaddressed)
            r.open_counterpositions.push_back(id);
    for (const auto& [id, u] : belief.uncertainties)
        if (u.status == UncertaintyStatus::Active && (u.importance == Importance::High || u.importance == Importance::Medium))
            r.open_uncertainties.push_back(id);
    r.orphans = find_orphans(belief);
    return r;
}

nlohmann::ordered_json to_json(const VulnerabilityReport& report) {
    nlohmann::ordered_json weak = nlohmann::ordered_json::array();
    for (const auto& w : report.weak_nodes) weak.push_back({{"id", w.id.str()}, {"strength", round4(w.strength)}});
    nlohmann::ordered_json o;
    o["weak_nodes"] = std::move(weak);
    o["open_counterpositions"] = encode_ids(report.open_counterpositions);
    o["open_uncertainties"] = encode_ids(report.open_uncertainties);
    o["orphans"] = encode_ids(report.orphans);
    return o;
}

nlohmann::ordered_json to_json(const BeliefGraph& graph) {
    auto edges = [](const std::set<Edge>& set) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& e : set) arr.push_back({e.from.str(), e.to.str()});
        return arr;
    };
    nlohmann::ordered_json o;
    o["nodes"] = encode_ids({graph.nodes.begin(), graph.nodes.end()});
    o["strength_edges"] = edges(graph.strength_edges);
    o["challenge_edges"] = edges(graph.challenge_edges);
    return o;
}

} // namespace chal
