#include "belief_generators.hpp"
#include "scenario_factory.hpp"

#include "chal/belief_io.hpp"
#include "chal/patch.hpp"
#include "chal/validation.hpp"

#include <gtest/gtest.h>

using namespace chal;
using chal::testing::fixture;

namespace {

Belief initial() { return load_belief(fixture("empiricist_initial.json")); }
Belief final_belief() { return load_belief(fixture("empiricist_final.json")); }

PatchBatchResult apply(const Belief& b, std::vector<Patch> patches, bool filter = false) {
    return apply_patches(b, patches, filter, {});
}

json claim_payload(const std::vector<std::string>& deps, double strength = 0.6) {
    json chain = json::array();
    for (const auto& d : deps) chain.push_back({{"role", "premise"}, {"text", "From " + d + "."}, {"reference", d}});
    chain.push_back({{"role", "inference"}, {"text", "Therefore."}, {"inference_type", "deductive"}});
    chain.push_back({{"role", "conclusion"}, {"text", "A new claim."}});
    return {{"type", "descriptive"},
            {"statement", "A new claim."},
            {"depends_on", deps},
            {"inference_chain", chain},
            {"strength", strength},
            {"strength_justification", "new"},
            {"status", "active"},
            {"predictions", {{{"statement", "s"}, {"test", "t"}, {"decision_criterion", "d"}}}}};
}

} // namespace

TEST(Patch, EmptyBatchIsIdentity) {
    auto b = initial();
    auto r = apply(b, {});
    EXPECT_EQ(r.belief_out, b);
    EXPECT_TRUE(r.applied.empty());
    EXPECT_FALSE(r.rolled_back);
}

TEST(Patch, RetractionOnFinalFixture) {
    auto b = final_belief();
    auto c2 = node_id("C2");
    // The final fixture already has C1 retracted; retract C2 and watch its objections go moot.
    auto r = apply(b, {Patch::update(c2, {{"status", "retracted"}})});
    ASSERT_FALSE(r.rolled_back) << r.final_report.to_text();
    EXPECT_EQ(r.belief_out.claims.at(c2).strength, 0.0);
    for (const char* x : {"X2", "X7", "X10", "X17", "X18"}) {
        EXPECT_EQ(r.belief_out.counterpositions.at(node_id(x)).response_sufficiency, Sufficiency::Moot) << x;
        EXPECT_NE(std::find(r.mooted.begin(), r.mooted.end(), node_id(x)), r.mooted.end());
    }
    std::vector<double> rest{0.5, 0.5};
    EXPECT_NEAR(r.belief_out.thesis.strength, thesis_strength(rest, 1.0), 1e-12);
    EXPECT_TRUE(validate_belief(r.belief_out).ok());
}

TEST(Patch, RetractionOnInitialFixtureExcludesClaim) {
    auto r = apply(initial(), {Patch::update(node_id("C1"), {{"status", "retracted"}})});
    ASSERT_FALSE(r.rolled_back);
    EXPECT_EQ(r.belief_out.claims.at(node_id("C1")).strength, 0.0);
    std::vector<double> rest{0.7, 0.6};
    EXPECT_NEAR(r.belief_out.thesis.strength, thesis_strength(rest, 1.0), 1e-12);
    EXPECT_EQ(r.belief_out.counterpositions.at(node_id("X1")).response_sufficiency, Sufficiency::Moot);
}

TEST(Patch, StrengthFilterStripsIncreasesOnly) {
    auto b = initial();
    auto a3 = node_id("A3");
    auto r = apply(b, {Patch::update(a3, {{"strength", 0.90}, {"strength_justification", "Re-examined."}})}, true);
    ASSERT_EQ(r.applied.size(), 1u);
    EXPECT_EQ(r.belief_out.assumptions.at(a3).strength, 0.8);
    EXPECT_EQ(r.belief_out.assumptions.at(a3).strength_justification, "Re-examined.");
    EXPECT_FALSE(r.dispositions[0].notes.empty());

    auto lowered = apply(b, {Patch::update(a3, {{"strength", 0.5}})}, true);
    EXPECT_EQ(lowered.belief_out.assumptions.at(a3).strength, 0.5);
    // Without the filter an increase stands, subject to the dependency ceiling (D4 and D5 at 0.8).
    auto unfiltered = apply(b, {Patch::update(a3, {{"strength", 0.9}})}, false);
    EXPECT_EQ(unfiltered.belief_out.assumptions.at(a3).strength, 0.8);
    auto d2 = node_id("D2");
    EXPECT_EQ(apply(b, {Patch::update(d2, {{"strength", 0.95}})}, false).belief_out.definitions.at(d2).strength, 0.95);
    EXPECT_EQ(apply(b, {Patch::update(d2, {{"strength", 0.95}})}, true).belief_out.definitions.at(d2).strength, 0.85);
}

TEST(Patch, FilterNeverRaisesExistingNodes) {
    chal::testing::Rng rng(31);
    for (int i = 0; i < 60; ++i) {
        auto b = enforce_constraints(chal::testing::random_belief(rng, {.max_nodes = 60}), {}).belief;
        std::vector<Patch> batch;
        auto ids = chal::testing::strength_ids(b);
        for (int k = 0; k < 5; ++k) {
            NodeId id = ids[static_cast<std::size_t>(chal::testing::uniform_int(rng, 0, static_cast<int>(ids.size()) - 1))];
            batch.push_back(Patch::update(id, {{"strength", chal::testing::grid_strength(rng)}}));
        }
        auto r = apply_patches(b, batch, true, {});
        ASSERT_FALSE(r.rolled_back);
        auto before = chal::testing::strength_map(b);
        for (const auto& [id, s] : chal::testing::strength_map(r.belief_out)) EXPECT_LE(s, before[id]);
    }
}

TEST(Patch, NewNodesMayCarryAnyStrengthUnderFilter) {
    auto r = apply(initial(), {Patch::add(NodeKind::Evidence, {{"type", "empirical"},
                                                               {"summary", "New study."},
                                                               {"source", "Journal"},
                                                               {"supported_by_definitions", {"D1"}},
                                                               {"strength", 0.85},
                                                               {"strength_justification", "strong"},
                                                               {"status", "active"}})},
                   true);
    ASSERT_EQ(r.applied.size(), 1u) << r.dispositions[0].reason;
    EXPECT_EQ(r.dispositions[0].assigned_id, node_id("E5"));
    EXPECT_EQ(r.belief_out.evidence.at(node_id("E5")).strength, 0.85);
    EXPECT_EQ(r.belief_out.evidence.at(node_id("E5")).original_strength, 0.85);
}

TEST(Patch, UnresolvedReferenceSkipsOnlyThatPatch) {
    auto b = initial();
    auto r = apply(b, {Patch::add(NodeKind::Claim, claim_payload({"E99"})),
                       Patch::update(node_id("C3"), {{"strength_justification", "Rechecked."}})});
    ASSERT_EQ(r.skipped.size(), 1u);
    EXPECT_EQ(r.skipped[0].first, 0u);
    EXPECT_NE(r.skipped[0].second.find("unresolved_reference"), std::string::npos) << r.skipped[0].second;
    EXPECT_EQ(r.applied, std::vector<std::size_t>{1});
    EXPECT_EQ(r.belief_out.claims.count(node_id("C4")), 0u);
    EXPECT_EQ(r.belief_out.claims.at(node_id("C3")).strength_justification, "Rechecked.");
}

TEST(Patch, AddedClaimCappedAndLinked) {
    auto r = apply(initial(), {Patch::add(NodeKind::Claim, claim_payload({"A4", "E1"}, 0.9))});
    ASSERT_EQ(r.applied.size(), 1u) << r.dispositions[0].reason;
    const auto& c4 = r.belief_out.claims.at(node_id("C4"));
    EXPECT_DOUBLE_EQ(c4.strength, 0.6);
    EXPECT_TRUE(validate_belief(r.belief_out).ok());
    auto& supports = r.belief_out.assumptions.at(node_id("A4")).supports_claims;
    EXPECT_NE(std::find(supports.begin(), supports.end(), node_id("C4")), supports.end());
}

TEST(Patch, RetractionIsIrreversible) {
    auto c1 = node_id("C1");
    auto r = apply(initial(), {Patch::update(c1, {{"status", "retracted"}}), Patch::update(c1, {{"status", "active"}}),
                               Patch::update(c1, {{"strength", 0.5}})});
    EXPECT_EQ(r.applied, std::vector<std::size_t>{0});
    EXPECT_EQ(r.skipped.size(), 2u);
    EXPECT_NE(r.skipped[0].second.find("retraction_irreversible"), std::string::npos);
    EXPECT_EQ(r.belief_out.claims.at(c1).status, NodeStatus::Retracted);
}

TEST(Patch, SkipReasons) {
    auto b = initial();
    auto r = apply(b, {Patch::update(node_id("C9"), {{"strength", 0.1}}),
                       Patch::update(node_id("C1"), {{"id", "C7"}}),
                       Patch::update(node_id("C1"), {{"no_such_field", 1}}),
                       Patch::update(node_id("A1"), {{"strength", 3.0}})});
    ASSERT_EQ(r.skipped.size(), 4u);
    EXPECT_NE(r.skipped[0].second.find("unknown_node"), std::string::npos);
    EXPECT_EQ(r.belief_out, b);
}

TEST(Patch, MootIsTerminal) {
    auto b = apply(initial(), {Patch::update(node_id("C1"), {{"status", "retracted"}})}).belief_out;
    auto r = apply(b, {Patch::update(node_id("X1"), {{"response_sufficiency", "partial"}})});
    ASSERT_EQ(r.skipped.size(), 1u);
    EXPECT_NE(r.skipped[0].second.find("moot_terminal"), std::string::npos);
}

TEST(Patch, MootMarking) {
    auto b = initial();
    EXPECT_TRUE(mark_moot_counterpositions(b).second.empty());
    b.claims.at(node_id("C1")).status = NodeStatus::Retracted;
    b.claims.at(node_id("C1")).strength = 0.0;
    auto [marked, ids] = mark_moot_counterpositions(b);
    EXPECT_EQ(ids, std::vector<NodeId>{node_id("X1")});

    auto shared = initial();
    shared.counterpositions.at(node_id("X1")).targets = {node_id("C1"), node_id("C2")};
    shared.claims.at(node_id("C1")).status = NodeStatus::Retracted;
    shared.claims.at(node_id("C1")).strength = 0.0;
    EXPECT_TRUE(mark_moot_counterpositions(shared).second.empty());
}

TEST(Patch, InvalidEndStateRollsBackBitIdentical) {
    auto b = initial();
    b.claims.at(node_id("C2")).predictions.clear();  // already invalid on entry
    auto r = apply(b, {Patch::update(node_id("C3"), {{"strength_justification", "x"}})});
    EXPECT_TRUE(r.rolled_back);
    EXPECT_EQ(r.belief_out, b);
    EXPECT_TRUE(r.applied.empty());
    EXPECT_TRUE(r.final_report.has("C2", "missing_prediction"));
    EXPECT_FALSE(r.dispositions[0].applied);
    EXPECT_EQ(r.dispositions[0].reason.rfind("invalid: ", 0), 0u) << r.dispositions[0].reason;
}

TEST(Patch, ValidityPreservedOnRandomBatches) {
    chal::testing::Rng rng(33);
    for (int i = 0; i < 40; ++i) {
        auto b = enforce_constraints(chal::testing::random_belief(rng, {.max_nodes = 60}), {}).belief;
        std::vector<Patch> batch;
        auto ids = chal::testing::strength_ids(b);
        for (int k = 0; k < 6; ++k) {
            NodeId id = ids[static_cast<std::size_t>(chal::testing::uniform_int(rng, 0, static_cast<int>(ids.size()) - 1))];
            if (chal::testing::coin(rng, 0.3)) batch.push_back(Patch::update(id, {{"status", "retracted"}}));
            else batch.push_back(Patch::update(id, {{"strength", chal::testing::grid_strength(rng)}}));
        }
        auto r = apply_patches(b, batch, false, {});
        auto again = apply_patches(b, batch, false, {});
        EXPECT_EQ(r.belief_out, again.belief_out);
        if (!r.rolled_back) {
            EXPECT_TRUE(validate_belief(r.belief_out).ok());
            for (const auto& [_, x] : r.belief_out.counterpositions)
                if (x.response_sufficiency == Sufficiency::Moot)
                    for (NodeId t : x.targets) EXPECT_TRUE(r.belief_out.is_retracted(t));
        } else {
            EXPECT_EQ(r.belief_out, b);
        }
    }
}

TEST(Patch, WeakeningDetection) {
    auto b = initial();
    EXPECT_TRUE(is_weakening(Patch::update(node_id("A3"), {{"strength", 0.7}}), b));
    EXPECT_TRUE(is_weakening(Patch::update(node_id("A3"), {{"status", "retracted"}}), b));
    EXPECT_FALSE(is_weakening(Patch::update(node_id("A3"), {{"strength", 0.9}}), b));
    EXPECT_FALSE(is_weakening(Patch::update(node_id("X1"), {{"statement", "s"}}), b));
    EXPECT_EQ(weakened_node(Patch::update(node_id("A3"), {{"strength", 0.7}}), b), node_id("A3"));
}

TEST(Patch, JsonRoundTrip) {
    auto p = Patch::update(node_id("C2"), {{"strength", 0.4}});
    auto back = patch_from_json(json::parse(to_json(p).dump()));
    ASSERT_TRUE(back);
    EXPECT_EQ(*back, p);
    std::string error;
    EXPECT_FALSE(patch_from_json(json{{"op", "delete"}}, &error));
    EXPECT_FALSE(error.empty());
}
