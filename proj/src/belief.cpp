#include "chal/belief.hpp"

#include <algorithm>

namespace chal {

namespace {

template <class Map>
std::vector<NodeId> keys(const Map& map) {
    std::vector<NodeId> out;
    out.reserve(map.size());
    for (const auto& [id, _] : map) out.push_back(id);
    return out;
}

template <class Map>
int next_of(const Map& map) {
    return map.empty() ? 1 : map.rbegin()->first.index + 1;
}

} // namespace

bool Belief::contains(NodeId id) const {
    switch (id.kind) {
    case NodeKind::Definition: return definitions.count(id) != 0;
    case NodeKind::Assumption: return assumptions.count(id) != 0;
    case NodeKind::Evidence: return evidence.count(id) != 0;
    case NodeKind::Claim: return claims.count(id) != 0;
    case NodeKind::Counterposition: return counterpositions.count(id) != 0;
    case NodeKind::Uncertainty: return uncertainties.count(id) != 0;
    }
    return false;
}

std::size_t Belief::count(NodeKind kind) const {
    switch (kind) {
    case NodeKind::Definition: return definitions.size();
    case NodeKind::Assumption: return assumptions.size();
    case NodeKind::Evidence: return evidence.size();
    case NodeKind::Claim: return claims.size();
    case NodeKind::Counterposition: return counterpositions.size();
    case NodeKind::Uncertainty: return uncertainties.size();
    }
    return 0;
}

std::vector<NodeId> Belief::ids(NodeKind kind) const {
    switch (kind) {
    case NodeKind::Definition: return keys(definitions);
    case NodeKind::Assumption: return keys(assumptions);
    case NodeKind::Evidence: return keys(evidence);
    case NodeKind::Claim: return keys(claims);
    case NodeKind::Counterposition: return keys(counterpositions);
    case NodeKind::Uncertainty: return keys(uncertainties);
    }
    return {};
}

int Belief::next_index(NodeKind kind) const {
    switch (kind) {
    case NodeKind::Definition: return next_of(definitions);
    case NodeKind::Assumption: return next_of(assumptions);
    case NodeKind::Evidence: return next_of(evidence);
    case NodeKind::Claim: return next_of(claims);
    case NodeKind::Counterposition: return next_of(counterpositions);
    case NodeKind::Uncertainty: return next_of(uncertainties);
    }
    return 1;
}

const StrengthFields* Belief::strength_node(NodeId id) const {
    return const_cast<Belief*>(this)->strength_node(id);
}

StrengthFields* Belief::strength_node(NodeId id) {
    switch (id.kind) {
    case NodeKind::Definition: {
        auto it = definitions.find(id);
        return it == definitions.end() ? nullptr : &it->second;
    }
    case NodeKind::Assumption: {
        auto it = assumptions.find(id);
        return it == assumptions.end() ? nullptr : &it->second;
    }
    case NodeKind::Evidence: {
        auto it = evidence.find(id);
        return it == evidence.end() ? nullptr : &it->second;
    }
    case NodeKind::Claim: {
        auto it = claims.find(id);
        return it == claims.end() ? nullptr : &it->second;
    }
    default: return nullptr;
    }
}

bool Belief::is_retracted(NodeId id) const {
    const auto* node = strength_node(id);
    return node != nullptr && node->retracted();
}

std::vector<NodeId> Belief::dependencies(NodeId id) const {
    switch (id.kind) {
    case NodeKind::Assumption: {
        auto it = assumptions.find(id);
        return it == assumptions.end() ? std::vector<NodeId>{} : it->second.supported_by_definitions;
    }
    case NodeKind::Evidence: {
        auto it = evidence.find(id);
        return it == evidence.end() ? std::vector<NodeId>{} : it->second.supported_by_definitions;
    }
    case NodeKind::Claim: {
        auto it = claims.find(id);
        return it == claims.end() ? std::vector<NodeId>{} : it->second.depends_on;
    }
    default: return {};
    }
}

std::vector<NodeId> Belief::active_dependencies(NodeId id) const {
    std::vector<NodeId> out;
    for (NodeId dep : dependencies(id)) {
        const auto* node = strength_node(dep);
        if (node != nullptr && !node->retracted()) out.push_back(dep);
    }
    return out;
}

std::vector<double> Belief::active_claim_strengths() const {
    std::vector<double> out;
    for (const auto& [id, claim] : claims)
        if (!claim.retracted()) out.push_back(claim.strength);
    return out;
}

std::vector<NodeId> Belief::targets_of(NodeId id) const {
    if (id.kind == NodeKind::Counterposition) {
        auto it = counterpositions.find(id);
        if (it != counterpositions.end()) return it->second.targets;
    } else if (id.kind == NodeKind::Uncertainty) {
        auto it = uncertainties.find(id);
        if (it != uncertainties.end()) return it->second.targets;
    }
    return {};
}

void repair_used_by(Belief& belief) {
    for (auto& [id, def] : belief.definitions) def.used_by.clear();
    auto cite = [&](NodeId user, const std::vector<NodeId>& defs) {
        for (NodeId d : defs) {
            auto it = belief.definitions.find(d);
            if (it == belief.definitions.end()) continue;
            auto& list = it->second.used_by;
            if (std::find(list.begin(), list.end(), user) == list.end()) list.push_back(user);
        }
    };
    for (const auto& [id, a] : belief.assumptions) cite(id, a.supported_by_definitions);
    for (const auto& [id, e] : belief.evidence) cite(id, e.supported_by_definitions);
    for (auto& [id, def] : belief.definitions) std::sort(def.used_by.begin(), def.used_by.end());
}

} // namespace chal
