// Acceptance run: one timed check per criterion, one PASS/FAIL line each.
// Exit status is nonzero when any criterion fails or exceeds its time limit.

#include "belief_generators.hpp"
#include "scenario_factory.hpp"

#include "chal/analytics.hpp"
#include "chal/belief_io.hpp"
#include "chal/pipeline.hpp"
#include "chal/protocol.hpp"
#include "chal/strength.hpp"
#include "chal/validation.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>

using namespace chal;
using chal::testing::fixture;
using chal::testing::Rng;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

/// Collects failures; the first few are kept for the report line.
class Check {
public:
    void expect(bool condition, const std::string& what) {
        if (condition) return;
        ++failures_;
        if (notes_.size() < 3) notes_.push_back(what);
    }
    bool ok() const { return failures_ == 0; }
    std::string summary() const {
        std::string out = fmt::format("{} failed check(s)", failures_);
        for (const auto& n : notes_) out += "; " + n;
        return out;
    }

private:
    int failures_ = 0;
    std::vector<std::string> notes_;
};

struct Criterion {
    int number;
    std::string name;
    double limit_seconds;
    std::function<void(Check&)> body;
};

double objective(double avg, double n, double p) { return avg * std::pow(n, p) / (std::pow(n, p) + 1.0); }

// Per-exchange APS scores written out by hand.
double hand_score(bool challenger, VerdictKind k) {
    if (challenger) return k == VerdictKind::CritiqueValid ? 1.0 : k == VerdictKind::RebuttalValid ? -0.5 : 0.0;
    return k == VerdictKind::CritiqueValid ? -1.0 : k == VerdictKind::RebuttalValid ? 1.0 : 0.25;
}

chal::testing::ScenarioSpec scenario(int agents, int challenges, int rounds) {
    chal::testing::ScenarioSpec sp;
    sp.agents = agents;
    sp.challenges_per_pair = challenges;
    sp.rounds = rounds;
    return sp;
}

std::string node_list(const std::vector<NodeId>& ids) {
    std::string out;
    for (NodeId id : ids) out += (out.empty() ? "" : ",") + id.str();
    return out;
}

// 1
void thesis_goldens(Check& c) {
    std::vector<double> initial{0.70, 0.70, 0.60};
    std::vector<double> final_claims{0.47, 0.50, 0.50};
    double a = thesis_strength(initial, 1.0);
    double b = thesis_strength(final_claims, 1.0);
    c.expect(std::abs(a - 0.50) <= 1e-9, fmt::format("initial {:.12f}", a));
    c.expect(std::abs(b - 0.3675) <= 1e-9, fmt::format("final {:.12f}", b));
}

// 2
void gradient_check(Check& c) {
    Rng rng(1002);
    const double h = 1e-5;
    const double p_values[] = {0.5, 1.0, 2.0};
    for (int i = 0; i < 1200; ++i) {
        double avg = chal::testing::uniform(rng, 0.05, 0.95);
        double n = chal::testing::uniform_int(rng, 1, 50);
        double p = p_values[i % 3];
        auto g = thesis_gradient(avg, n, p);
        double fd_avg = (objective(avg + h, n, p) - objective(avg - h, n, p)) / (2 * h);
        double fd_n = (objective(avg, n + h, p) - objective(avg, n - h, p)) / (2 * h);
        double e_avg = std::abs(fd_avg - g.d_savg) / std::abs(fd_avg);
        double e_n = std::abs(fd_n - g.d_n) / std::abs(fd_n);
        c.expect(e_avg <= 1e-6, fmt::format("d/dsavg rel err {:.2e} at ({}, {}, {})", e_avg, avg, n, p));
        c.expect(e_n <= 1e-6, fmt::format("d/dn rel err {:.2e} at ({}, {}, {})", e_n, avg, n, p));
    }
}

// 3
void constraint_oracle(Check& c) {
    Rng rng(1003);
    Rng order(1004);
    for (int i = 0; i < 520; ++i) {
        auto b = chal::testing::random_belief(rng, {.max_nodes = 200});
        StrengthParams params;
        params.s_orph = chal::testing::grid_strength(rng, 0.1, 0.9);
        auto once = enforce_constraints(b, params);
        auto oracle = chal::testing::fixpoint_oracle(b, params, &order);
        c.expect(chal::testing::strength_map(once.belief) == chal::testing::strength_map(oracle),
                 fmt::format("case {} differs from the fixpoint oracle", i));
        c.expect(once.belief.thesis.strength == oracle.thesis.strength, fmt::format("case {} thesis", i));
        auto twice = enforce_constraints(once.belief, params);
        c.expect(twice.belief == once.belief && twice.changelog.empty(), fmt::format("case {} not idempotent", i));
        auto before = chal::testing::strength_map(b);
        for (const auto& [id, s] : chal::testing::strength_map(once.belief))
            c.expect(s <= before[id], fmt::format("case {} raised {}", i, id.str()));
    }
}

// 4
void boost_properties(Check& c) {
    StrengthParams params;  // b = 0.02, c_max = 0.15
    Rng rng(1005);
    for (int i = 0; i < 80; ++i) {
        auto b = enforce_constraints(chal::testing::random_belief(rng, {.max_nodes = 80}), params).belief;
        std::map<NodeId, double> original;
        for (NodeId id : chal::testing::strength_ids(b)) original[id] = b.strength_node(id)->original_strength;
        int steps = chal::testing::uniform_int(rng, 1, 15);
        for (int k = 0; k < steps; ++k) {
            std::vector<NodeId> live;
            for (NodeId id : chal::testing::strength_ids(b))
                if (!b.is_retracted(id)) live.push_back(id);
            if (live.empty()) break;
            auto targets = chal::testing::pick_subset(rng, live, 3);
            auto cascade = boost_cascade_set(b, targets);
            c.expect(std::set<NodeId>(cascade.begin(), cascade.end()) == chal::testing::ancestor_oracle(b, targets),
                     "cascade differs from ancestor closure for " + node_list(targets));
            b = apply_defense_boosts(b, targets, params).belief;
            for (const auto& [id, s] : chal::testing::strength_map(b))
                c.expect(s <= std::min(original[id] + 0.15, 1.0) + 1e-12, fmt::format("{} above its ceiling", id.str()));
        }
    }

    int checked = 0;
    for (int i = 0; i < 300 && checked < 100; ++i) {
        auto b = enforce_constraints(chal::testing::random_belief(rng, {.max_nodes = 60, .fresh = true}), params).belief;
        for (NodeId id : chal::testing::strength_ids(b)) b.strength_node(id)->original_strength = b.strength_node(id)->strength;
        auto ids = chal::testing::strength_ids(b);
        NodeId t = ids[static_cast<std::size_t>(chal::testing::uniform_int(rng, 0, static_cast<int>(ids.size()) - 1))];
        if (b.is_retracted(t)) continue;
        std::vector<NodeId> targets{t};
        auto closure = chal::testing::ancestor_oracle(b, targets);
        closure.insert(t);
        bool room = true;
        for (NodeId id : closure) room = room && b.strength_node(id)->strength + 0.02 <= 1.0;
        if (!room) continue;
        double before = b.strength_node(t)->strength;
        double after = apply_defense_boosts(b, targets, params).belief.strength_node(t)->strength;
        c.expect(after == before + 0.02, fmt::format("{}: {} -> {}", t.str(), before, after));
        ++checked;
    }
    c.expect(checked >= 50, fmt::format("only {} uncapped boosts sampled", checked));
}

// 5
void adjudication_goldens(Check& c) {
    auto judge = [](double cl, double ce, double dl, double de, double w_logic) {
        ComponentScores s{cl, ce, dl, de};
        AdjudicatorParams p;
        p.w_logic = w_logic;
        p.w_ethics = 1.0 - w_logic;
        p.ethics_system = w_logic == 1.0 ? "none_pure_logic" : "utilitarian";
        p.tau = 0.15;
        return combine_and_judge(s, p);
    };
    c.expect(judge(0.8, 0.0, 0.3, 0.0, 1.0).kind == VerdictKind::CritiqueValid, "0.8 vs 0.3");
    auto mixed = judge(0.9, 0.5, 0.3, 0.8, 0.5);
    c.expect(std::abs(mixed.sigma_c - 0.70) < 1e-12 && std::abs(mixed.sigma_d - 0.55) < 1e-12, "0.70 vs 0.55 combination");
    c.expect(mixed.kind == VerdictKind::CritiqueValid, "0.70 vs 0.55");
    c.expect(judge(0.55, 0.55, 0.55, 0.55, 0.5).kind == VerdictKind::Unresolved, "0.55 vs 0.55");
}

// 6
void aps_conformance(Check& c) {
    ApsTable t;
    for (auto k : {VerdictKind::CritiqueValid, VerdictKind::RebuttalValid, VerdictKind::Unresolved}) {
        c.expect(t.score(ExchangeRole::Challenger, k) == hand_score(true, k), "challenger constant");
        c.expect(t.score(ExchangeRole::Target, k) == hand_score(false, k), "target constant");
    }
    Rng rng(1006);
    const std::vector<std::string> agents{"A", "B", "C", "D"};
    for (int trial = 0; trial < 2000; ++trial) {
        std::vector<Exchange> ex;
        int n = chal::testing::uniform_int(rng, 1, 60);
        for (int i = 0; i < n; ++i) {
            int a = chal::testing::uniform_int(rng, 0, 3);
            int d = (a + chal::testing::uniform_int(rng, 1, 3)) % 4;
            auto kind = static_cast<VerdictKind>(chal::testing::uniform_int(rng, 0, 2));
            ex.push_back(chal::testing::synthetic_exchange(1, agents[a], agents[d], kind, i + 1));
        }
        for (const auto& agent : agents) {
            double sum = 0.0;
            int k = 0;
            for (const auto& e : ex) {
                if (e.challenge.challenger == agent) sum += hand_score(true, e.verdict.kind), ++k;
                if (e.challenge.defender == agent) sum += hand_score(false, e.verdict.kind), ++k;
            }
            auto got = aps(ex, agent);
            c.expect(got.has_value() == (k > 0), "presence for " + agent);
            if (!got || k == 0) continue;
            c.expect(std::abs(*got - sum / k) <= 1e-12, fmt::format("trial {} {}: {} vs {}", trial, agent, *got, sum / k));
            c.expect(*got >= -1.0 && *got <= 1.0, "out of range");
        }
    }
}

// 7
void exchange_counts(Check& c) {
    auto root = chal::testing::temp_dir("accept_counts");
    for (auto [agents, expected] : {std::pair{2, 50}, std::pair{3, 150}}) {
        auto cfg = chal::testing::prepare_run(scenario(agents, 5, 5), root / std::to_string(agents));
        auto a = run_debate(cfg);
        c.expect(static_cast<int>(a.transcript.size()) == expected,
                 fmt::format("N={}: {} exchanges", agents, a.transcript.size()));
        c.expect(exchange_schedule(agents, 5, 5) == expected, "schedule formula");
    }
    fs::remove_all(root);
}

// 8
void determinism_and_replay(Check& c) {
    auto root = chal::testing::temp_dir("accept_determinism");
    auto sp = scenario(2, 3, 3);
    auto scenario_file = root / "scenario.json";
    chal::testing::write_file(scenario_file,
                              chal::testing::make_scenario(sp, chal::testing::read_json_file(fixture("empiricist_initial.json"))).dump(2));
    auto run_into = [&](const std::string& name, int parallelism) {
        auto cfg = chal::testing::make_config(sp, scenario_file, root / name, parallelism);
        run_debate(cfg);
        auto files = chal::testing::run_files(cfg.output_dir);
        files.erase("config.snapshot");  // records the parallelism setting itself
        return files;
    };
    auto first = run_into("p1a", 1);
    c.expect(first.size() > 10, "too few artifacts");
    c.expect(run_into("p1b", 1) == first, "repeat run differs");
    c.expect(run_into("p4", 4) == first, "parallelism 4 differs");
    c.expect(chal::testing::read_file(root / "p1a" / "config.snapshot") == chal::testing::read_file(root / "p1b" / "config.snapshot"),
             "config snapshot differs across repeats");

    auto a = load_artifacts(root / "p1a");
    c.expect(a.revisions.size() == 6u, fmt::format("{} revision records", a.revisions.size()));
    for (const auto& rec : a.revisions) {
        const auto& previous = a.snapshots.at(rec.agent)[static_cast<std::size_t>(rec.round - 1)];
        auto outcome = replay_revision(previous, rec, a.config.strength);
        auto on_disk = chal::testing::read_file(root / "p1a" / "beliefs" / rec.agent / fmt::format("round_{}.json", rec.round));
        c.expect(serialize_belief(outcome.belief) == on_disk, fmt::format("replay of {} round {}", rec.agent, rec.round));
    }
    fs::remove_all(root);
}

// 9
bool weakens(const ChangeLog& log, const std::set<NodeId>& nodes) {
    for (const auto& e : log)
        if (!e.node.is_thesis && nodes.count(e.node.id) && e.new_strength < e.old_strength &&
            (e.cause == ChangeCause::Patch || e.cause == ChangeCause::Retraction))
            return true;
    return false;
}

void obligation_enforcement(Check& c) {
    auto root = chal::testing::temp_dir("accept_obligations");
    int critiques = 0, unresolved = 0, rebuttals = 0;
    for (const char* policy : {"comply", "noncomply", "partial"}) {
        auto sp = scenario(3, 2, 3);
        sp.phase1_policy = policy;
        auto cfg = chal::testing::prepare_run(sp, root / policy);
        auto a = run_debate(cfg);
        for (const auto& rec : a.revisions) {
            const Belief& prev = a.snapshots.at(rec.agent)[static_cast<std::size_t>(rec.round - 1)];
            std::string where = fmt::format("{} {} r{}", policy, rec.agent, rec.round);

            // Phase 1 alone, then Phase 1 plus boosts; each replayed from the previous snapshot.
            RevisionRecord p1 = rec;
            p1.boosts.clear();
            p1.phase2.clear();
            p1.stance.reset();
            p1.summary_bullets.reset();
            auto after_p1 = replay_revision(prev, p1, a.config.strength);
            RevisionRecord with_boosts = p1;
            with_boosts.boosts = rec.boosts;
            auto after_boosts = replay_revision(prev, with_boosts, a.config.strength);

            int need_x = 0, need_u = 0;
            for (const auto& e : a.transcript) {
                if (e.round != rec.round || e.challenge.defender != rec.agent) continue;
                std::set<NodeId> disputed;
                for (NodeId t : e.challenge.targets) {
                    disputed.insert(t);
                    if (auto it = prev.counterpositions.find(t); it != prev.counterpositions.end())
                        disputed.insert(it->second.targets.begin(), it->second.targets.end());
                    if (auto it = prev.uncertainties.find(t); it != prev.uncertainties.end())
                        disputed.insert(it->second.targets.begin(), it->second.targets.end());
                }
                switch (e.verdict.kind) {
                case VerdictKind::CritiqueValid:
                    ++critiques, ++need_x;
                    c.expect(weakens(after_p1.changelog, disputed), where + " no weakening for " + e.challenge.id);
                    break;
                case VerdictKind::Unresolved:
                    ++unresolved, ++need_u;
                    break;
                case VerdictKind::RebuttalValid:
                    ++rebuttals;
                    for (NodeId t : e.challenge.targets) {
                        const auto* node = after_p1.belief.strength_node(t);
                        if (node == nullptr || node->retracted()) continue;
                        bool logged = false;
                        for (const auto& ch : after_boosts.changelog)
                            logged = logged || (!ch.node.is_thesis && ch.node.id == t && ch.cause == ChangeCause::DefenseBoost);
                        bool at_ceiling = node->strength >= std::min(node->original_strength + 0.15, 1.0);
                        int defenses = after_boosts.belief.strength_node(t)->consecutive_defenses;
                        c.expect(logged || at_ceiling, where + " no boost on " + t.str());
                        c.expect(defenses > node->consecutive_defenses, where + " defense not counted on " + t.str());
                    }
                    break;
                }
            }
            int new_x = 0, new_u = 0;
            for (const auto& [id, x] : after_p1.belief.counterpositions)
                if (!prev.counterpositions.count(id) &&
                    (x.response_sufficiency == Sufficiency::Partial || x.response_sufficiency == Sufficiency::Unaddressed))
                    ++new_x;
            for (const auto& [id, u] : after_p1.belief.uncertainties)
                if (!prev.uncertainties.count(id)) ++new_u;
            c.expect(new_x >= need_x, fmt::format("{}: {} new counterpositions for {} critiques", where, new_x, need_x));
            c.expect(new_u >= need_u, fmt::format("{}: {} new uncertainties for {} unresolved", where, new_u, need_u));
        }
    }
    c.expect(critiques > 0 && unresolved > 0 && rebuttals > 0,
             fmt::format("verdict mix not covered ({}, {}, {})", critiques, unresolved, rebuttals));
    fs::remove_all(root);
}

// 10
std::vector<double> slice(const std::vector<double>& z, std::size_t d, std::size_t k) {
    return {z.begin() + static_cast<long>(k * d), z.begin() + static_cast<long>((k + 1) * d)};
}

void embedding_shape(Check& c) {
    HashingEncoder small(8);
    Rng rng(1010);
    c.expect(belief_embedding(load_belief(fixture("empiricist_initial.json")), small).size() == 91u, "fixture length");
    for (int i = 0; i < 60; ++i) {
        auto b = chal::testing::random_belief(rng, {.max_nodes = 60});
        auto z = belief_embedding(b, small);
        c.expect(z.size() == 91u, fmt::format("length {}", z.size()));

        // Retracting a live claim changes the claim block and claim scalars only.
        std::vector<NodeId> live;
        for (const auto& [id, n] : b.claims)
            if (!n.retracted()) live.push_back(id);
        if (live.size() < 2) continue;
        NodeId victim = live[static_cast<std::size_t>(chal::testing::uniform_int(rng, 0, static_cast<int>(live.size()) - 1))];
        auto r = b;
        r.claims.at(victim).status = NodeStatus::Retracted;
        r.claims.at(victim).strength = 0.0;
        auto zr = belief_embedding(r, small);
        std::vector<EmbeddingItem> kept;
        for (const auto& [id, n] : b.claims)
            if (!n.retracted() && id != victim) kept.push_back({id.str(), n.statement, n.strength});
        c.expect(slice(zr, 8, 3) == component_embedding(kept, small), "claim block after retraction");
        for (std::size_t k : {0u, 1u, 2u, 4u, 5u, 6u, 7u, 8u, 9u})
            c.expect(slice(zr, 8, k) == slice(z, 8, k), fmt::format("block {} moved", k));
        c.expect(zr[80 + 3] == static_cast<double>(kept.size()) / 50.0, "claim count scalar");
    }

    DebateConfig cfg;
    cfg.embedding.dimension = 768;
    auto large = make_encoder(cfg.embedding.encoder, static_cast<std::size_t>(cfg.embedding.dimension));
    c.expect(embedding_dimension(large->dimension()) == 7691u, "declared length for 768");
    c.expect(belief_embedding(load_belief(fixture("empiricist_final.json")), *large).size() == 7691u, "length for 768");

    auto a = small.encode("first text");
    auto b = small.encode("second text");
    auto zero = component_embedding({{"D1", "first text", 0.0}, {"D2", "second text", 0.0}}, small);
    for (std::size_t i = 0; i < 8; ++i) c.expect(std::abs(zero[i] - (a[i] + b[i]) / 2.0) <= 1e-12, "zero-weight fallback");
    c.expect(component_embedding({}, small) == std::vector<double>(8, 0.0), "empty list");
}

// 11
json& node_in(json& doc, const char* collection, const std::string& id) {
    for (auto& n : doc[collection])
        if (n["id"] == id) return n;
    throw std::runtime_error("fixture lacks " + id);
}

void fixture_validation(Check& c) {
    for (const char* name : {"empiricist_initial.json", "empiricist_final.json"}) {
        auto r = parse_belief(chal::testing::read_file(fixture(name)));
        c.expect(r.ok() && r.report.violations.empty(), std::string(name) + ": " + r.report.to_text());
    }
    auto base = chal::testing::read_json_file(fixture("empiricist_initial.json"));
    auto mutated = [&](const std::function<void(json&)>& edit, const char* node, const char* rule) {
        json doc = base;
        edit(doc);
        auto r = parse_belief(doc);
        c.expect(r.report.has(node, rule), fmt::format("{} on {} not reported: {}", rule, node, r.report.to_text()));
    };
    mutated([](json& d) { node_in(d, "claims", "C2")["predictions"] = json::array(); }, "C2", "missing_prediction");
    mutated([](json& d) {
        auto& chain = node_in(d, "claims", "C1")["inference_chain"];
        std::swap(chain[0], chain[3]);
    }, "C1", "chain_ordering");
    mutated([](json& d) { node_in(d, "claims", "C3")["depends_on"].push_back("E99"); }, "C3", "unresolved_reference");
    mutated([](json& d) { node_in(d, "claims", "C3")["depends_on"].push_back("D1"); }, "C3", "claim_depends_on_definition");
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {1, "thesis strength goldens", 1.0, thesis_goldens},
        {2, "gradient matches finite differences", 5.0, gradient_check},
        {3, "constraint propagation equals fixpoint oracle", 30.0, constraint_oracle},
        {4, "defense boost properties", 10.0, boost_properties},
        {5, "adjudication goldens", 1.0, adjudication_goldens},
        {6, "APS conformance", 5.0, aps_conformance},
        {7, "exchange counts 50 and 150", 120.0, exchange_counts},
        {8, "determinism and replay", 60.0, determinism_and_replay},
        {9, "obligation enforcement from changelogs", 30.0, obligation_enforcement},
        {10, "embedding shape", 10.0, embedding_shape},
        {11, "fixture validation and mutations", 5.0, fixture_validation},
    };
    int failed = 0;
    for (const auto& cr : criteria) {
        Check check;
        auto start = std::chrono::steady_clock::now();
        try {
            cr.body(check);
        } catch (const std::exception& e) {
            check.expect(false, std::string("exception: ") + e.what());
        }
        double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        bool in_time = seconds < cr.limit_seconds;
        bool pass = check.ok() && in_time;
        failed += pass ? 0 : 1;
        std::string detail = check.ok() ? "" : " " + check.summary();
        if (!in_time) detail += fmt::format(" over the {:.0f} s limit", cr.limit_seconds);
        std::cout << fmt::format("{} [{:2}] {} ({:.3f} s){}\n", pass ? "PASS" : "FAIL", cr.number, cr.name, seconds, detail);
    }
    std::cout << fmt::format("{} of {} criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
