#pragma once

// Random valid beliefs and brute-force oracles for the strength engine property tests.

#include "chal/belief.hpp"
#include "chal/belief_io.hpp"
#include "chal/protocol.hpp"
#include "chal/strength.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace chal::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// Strengths on the two-decimal grid, as agents write them.
inline double grid_strength(Rng& rng, double lo = 0.05, double hi = 1.0) {
    int a = static_cast<int>(lo * 100.0 + 0.5);
    int b = static_cast<int>(hi * 100.0 + 0.5);
    return uniform_int(rng, a, b) / 100.0;
}

template <class T>
std::vector<T> pick_subset(Rng& rng, const std::vector<T>& pool, int max_size) {
    std::vector<T> copy = pool;
    std::shuffle(copy.begin(), copy.end(), rng);
    int k = uniform_int(rng, 1, std::min<int>(max_size, static_cast<int>(copy.size())));
    copy.resize(static_cast<std::size_t>(k));
    std::sort(copy.begin(), copy.end());
    return copy;
}

struct RandomBeliefSpec {
    int max_nodes = 200;
    double retract_probability = 0.1;
    bool fresh = false;  // every node at its original strength, nothing retracted
};

inline void fill_strength(StrengthFields& f, double s, bool retracted) {
    f.status = retracted ? NodeStatus::Retracted : NodeStatus::Active;
    f.strength = retracted ? 0.0 : s;
    f.original_strength = f.strength;
    f.strength_justification = "generated";
}

/// A valid belief whose claim dependencies form a random DAG. Claim indices are shuffled
/// relative to the topological order, so dependencies point both up and down the id range.
inline Belief random_belief(Rng& rng, const RandomBeliefSpec& spec = {}) {
    int total = uniform_int(rng, 4, spec.max_nodes - 4);
    int nd = std::max(1, total / 6 + uniform_int(rng, -2, 2));
    int na = std::max(1, total / 5 + uniform_int(rng, -2, 2));
    int ne = std::max(1, total / 5 + uniform_int(rng, -2, 2));
    int nc = std::max(1, total - nd - na - ne);
    int used = nd + na + ne + nc;
    if (used > spec.max_nodes) nc = std::max(1, nc - (used - spec.max_nodes));
    const double retract = spec.fresh ? 0.0 : spec.retract_probability;

    Belief b;
    b.breadth_exponent = 1.0;
    b.thesis.stance = "Generated stance.";
    b.thesis.summary_bullets = {"Generated bullet."};

    std::vector<NodeId> defs;
    for (int i = 1; i <= nd; ++i) {
        DefinitionNode d;
        d.id = {NodeKind::Definition, i};
        d.term = "term" + std::to_string(i);
        d.definition = "definition text " + std::to_string(i);
        fill_strength(d, grid_strength(rng, 0.3), coin(rng, retract));
        defs.push_back(d.id);
        b.definitions[d.id] = d;
    }
    std::vector<NodeId> supports;
    for (int i = 1; i <= na; ++i) {
        AssumptionNode a;
        a.id = {NodeKind::Assumption, i};
        a.type = static_cast<AssumptionType>(uniform_int(rng, 0, 3));
        a.statement = "assumption " + std::to_string(i);
        a.supported_by_definitions = pick_subset(rng, defs, 3);
        fill_strength(a, grid_strength(rng), coin(rng, retract));
        supports.push_back(a.id);
        b.assumptions[a.id] = a;
    }
    for (int i = 1; i <= ne; ++i) {
        EvidenceNode e;
        e.id = {NodeKind::Evidence, i};
        e.type = static_cast<EvidenceType>(uniform_int(rng, 0, 2));
        e.summary = "evidence " + std::to_string(i);
        e.source = "source " + std::to_string(i);
        e.supported_by_definitions = pick_subset(rng, defs, 3);
        fill_strength(e, grid_strength(rng), coin(rng, retract));
        supports.push_back(e.id);
        b.evidence[e.id] = e;
    }

    // Topological position t gets claim index perm[t].
    std::vector<int> perm(static_cast<std::size_t>(nc));
    std::iota(perm.begin(), perm.end(), 1);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<NodeId> earlier;
    for (int t = 0; t < nc; ++t) {
        ClaimNode c;
        c.id = {NodeKind::Claim, perm[static_cast<std::size_t>(t)]};
        c.type = "descriptive";
        c.statement = "claim " + std::to_string(c.id.index);
        std::vector<NodeId> pool = supports;
        pool.insert(pool.end(), earlier.begin(), earlier.end());
        c.depends_on = pick_subset(rng, pool, 4);
        for (NodeId dep : c.depends_on)
            c.inference_chain.push_back({StepRole::Premise, "premise " + dep.str(), dep, std::nullopt});
        c.inference_chain.push_back({StepRole::Inference, "so", std::nullopt, InferenceType::Deductive});
        c.inference_chain.push_back({StepRole::Conclusion, c.statement, std::nullopt, std::nullopt});
        c.predictions.push_back({"prediction", "test", "criterion", std::nullopt});
        fill_strength(c, grid_strength(rng), coin(rng, retract));
        earlier.push_back(c.id);
        b.claims[c.id] = c;
    }
    for (auto& [cid, c] : b.claims)
        for (NodeId dep : c.depends_on) {
            if (dep.kind == NodeKind::Assumption) b.assumptions[dep].supports_claims.push_back(cid);
            if (dep.kind == NodeKind::Evidence) b.evidence[dep].supports_claims.push_back(cid);
        }
    repair_used_by(b);

    // Challenge nodes never carry strength; they must not influence propagation.
    std::vector<NodeId> live;
    for (NodeKind k : {NodeKind::Definition, NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim})
        for (NodeId id : b.ids(k))
            if (!b.is_retracted(id)) live.push_back(id);
    int nx = live.empty() ? 0 : uniform_int(rng, 0, 3);
    for (int i = 1; i <= nx; ++i) {
        CounterpositionNode x;
        x.id = {NodeKind::Counterposition, i};
        x.targets = {live[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(live.size()) - 1))]};
        x.attack_type = AttackType::Rebutting;
        x.attack_strategy = "present_counter_example";
        x.statement = "objection";
        x.my_response = "response";
        x.response_sufficiency = Sufficiency::Partial;
        b.counterpositions[x.id] = x;
    }
    recompute_thesis(b, nullptr);
    return b;
}

/// Every strength-bearing id in the belief.
inline std::vector<NodeId> strength_ids(const Belief& b) {
    std::vector<NodeId> out;
    for (NodeKind k : {NodeKind::Definition, NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim})
        for (NodeId id : b.ids(k)) out.push_back(id);
    return out;
}

/// Declared dependencies read straight from the node fields.
inline std::vector<NodeId> declared_deps(const Belief& b, NodeId id) {
    switch (id.kind) {
    case NodeKind::Assumption: return b.assumptions.at(id).supported_by_definitions;
    case NodeKind::Evidence: return b.evidence.at(id).supported_by_definitions;
    case NodeKind::Claim: return b.claims.at(id).depends_on;
    default: return {};
    }
}

/// Brute-force constraint oracle: sweep every node, applying the retraction, orphan and
/// dependency-ceiling rules, until a full sweep changes nothing. Thesis from the closed form.
inline Belief fixpoint_oracle(Belief b, const StrengthParams& params, Rng* shuffle = nullptr) {
    auto ids = strength_ids(b);
    if (shuffle) std::shuffle(ids.begin(), ids.end(), *shuffle);
    bool changed = true;
    while (changed) {
        changed = false;
        for (NodeId id : ids) {
            auto* n = b.strength_node(id);
            double target = n->strength;
            if (n->status == NodeStatus::Retracted) {
                target = 0.0;
            } else {
                auto deps = declared_deps(b, id);
                if (!deps.empty()) {
                    double ceiling = 2.0;
                    bool any_live = false;
                    for (NodeId d : deps) {
                        const auto* dn = b.strength_node(d);
                        if (dn->status == NodeStatus::Retracted) continue;
                        any_live = true;
                        ceiling = std::min(ceiling, dn->strength);
                    }
                    target = std::min(n->strength, any_live ? ceiling : params.s_orph);
                }
            }
            if (target != n->strength) {
                n->strength = target;
                changed = true;
            }
        }
    }
    std::vector<double> live;
    for (const auto& [_, c] : b.claims)
        if (c.status != NodeStatus::Retracted) live.push_back(c.strength);
    double s = 0.0;
    if (!live.empty()) {
        double n = static_cast<double>(live.size());
        double np = std::pow(n, b.breadth_exponent);
        s = (std::accumulate(live.begin(), live.end(), 0.0) / n) * (np / (np + 1.0));
    }
    // The stored thesis is kept when it already agrees to 1e-12.
    if (std::abs(s - b.thesis.strength) > 1e-12) b.thesis.strength = s;
    return b;
}

/// Ancestor closure by repeated expansion over the whole node set, excluding the seeds.
inline std::set<NodeId> ancestor_oracle(const Belief& b, const std::vector<NodeId>& seeds) {
    std::set<NodeId> reached(seeds.begin(), seeds.end());
    bool grew = true;
    while (grew) {
        grew = false;
        for (NodeId id : strength_ids(b)) {
            if (!reached.count(id)) continue;
            for (NodeId d : declared_deps(b, id))
                if (b.strength_node(d)->status != NodeStatus::Retracted && reached.insert(d).second) grew = true;
        }
    }
    for (NodeId s : seeds) reached.erase(s);
    return reached;
}

/// Map of every strength-bearing node to its strength, for whole-belief comparisons.
inline std::map<NodeId, double> strength_map(const Belief& b) {
    std::map<NodeId, double> out;
    for (NodeId id : strength_ids(b)) out[id] = b.strength_node(id)->strength;
    return out;
}

/// Synthetic exchange with the given verdict; only the fields APS reads are meaningful.
inline Exchange synthetic_exchange(int round, const std::string& challenger, const std::string& defender,
                                   VerdictKind kind, int index = 1) {
    Exchange e;
    e.round = round;
    e.challenge.id = challenge_id(round, challenger, defender, index);
    e.challenge.round = round;
    e.challenge.challenger = challenger;
    e.challenge.defender = defender;
    e.challenge.index = index;
    e.challenge.text = "challenge";
    e.challenge.targets = {node_id("C1")};
    e.challenge.attack_type = AttackType::Undermining;
    e.challenge.attack_strategy = "challenge_evidence";
    e.rebuttal.challenge_id = e.challenge.id;
    e.rebuttal.text = "rebuttal";
    e.verdict.kind = kind;
    return e;
}

} // namespace chal::testing
