#include "belief_generators.hpp"
#include "scenario_factory.hpp"

#include "chal/belief_io.hpp"
#include "chal/graph.hpp"
#include "chal/validation.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace chal;
using chal::testing::fixture;
using chal::testing::read_file;
using chal::testing::read_json_file;

namespace {

json initial_doc() { return read_json_file(fixture("empiricist_initial.json")); }

json& node_in(json& doc, const char* collection, const std::string& id) {
    for (auto& n : doc[collection])
        if (n["id"] == id) return n;
    throw std::runtime_error("fixture lacks " + id);
}

Belief initial() { return load_belief(fixture("empiricist_initial.json")); }

} // namespace

TEST(NodeId, RendersWithoutPadding) {
    EXPECT_EQ(NodeId({NodeKind::Definition, 1}).str(), "D1");
    EXPECT_EQ(NodeId({NodeKind::Evidence, 12}).str(), "E12");
    EXPECT_EQ(NodeId({NodeKind::Counterposition, 7}).str(), "X7");
    EXPECT_EQ(NodeId({NodeKind::Uncertainty, 4}).str(), "U4");
}

TEST(NodeId, ParsesOnlyCanonicalForms) {
    EXPECT_EQ(NodeId::parse("C12"), (NodeId{NodeKind::Claim, 12}));
    EXPECT_EQ(NodeId::parse("A3"), (NodeId{NodeKind::Assumption, 3}));
    for (const char* bad : {"C012", "c12", "C0", "C", "Q1", "C-1", "C1 ", "", "12"})
        EXPECT_FALSE(NodeId::parse(bad).has_value()) << bad;
    EXPECT_THROW(node_id("Z9"), std::invalid_argument);
}

TEST(NodeId, OrderIsKindThenIndex) {
    EXPECT_LT(node_id("D9"), node_id("A1"));
    EXPECT_LT(node_id("C2"), node_id("C10"));
}

TEST(BeliefIo, GoldenFixturesParseCleanly) {
    for (const char* name : {"empiricist_initial.json", "empiricist_final.json"}) {
        auto r = parse_belief(read_file(fixture(name)));
        EXPECT_TRUE(r.ok()) << name << "\n" << r.report.to_text();
    }
}

TEST(BeliefIo, RoundTripIsByteStable) {
    for (const char* name : {"empiricist_initial.json", "empiricist_final.json"}) {
        auto b = load_belief(fixture(name));
        auto once = serialize_belief(b);
        auto again = serialize_belief(parse_belief(once).belief);
        EXPECT_EQ(once, again) << name;
        EXPECT_EQ(parse_belief(once).belief, b) << name;
    }
}

TEST(BeliefIo, RandomBeliefsRoundTrip) {
    chal::testing::Rng rng(11);
    for (int i = 0; i < 50; ++i) {
        auto b = canonicalize(chal::testing::random_belief(rng, {.max_nodes = 60}));
        auto r = parse_belief(serialize_belief(b));
        ASSERT_TRUE(r.ok()) << r.report.to_text();
        EXPECT_EQ(r.belief, b);
    }
}

TEST(BeliefIo, MissingVersionIsReported) {
    auto doc = initial_doc();
    doc.erase("cbs_version");
    auto r = parse_belief(doc);
    EXPECT_TRUE(r.report.has("document", "cbs_version")) << r.report.to_text();
}

TEST(BeliefIo, WrongTypesAndEnumsAreReported) {
    auto doc = initial_doc();
    node_in(doc, "assumptions", "A1")["type"] = "heroic";
    node_in(doc, "claims", "C1")["strength"] = "high";
    node_in(doc, "evidence", "E1")["strength"] = 1.5;
    auto r = parse_belief(doc);
    EXPECT_TRUE(r.report.has("A1", "enum_value")) << r.report.to_text();
    EXPECT_TRUE(r.report.has("C1", "field_type")) << r.report.to_text();
    EXPECT_TRUE(r.report.has("E1", "strength_range")) << r.report.to_text();
}

TEST(BeliefIo, UsedByIsDerivedWithAWarning) {
    auto doc = initial_doc();
    node_in(doc, "definitions", "D1")["used_by"] = json::array({"E4"});
    auto r = parse_belief(doc);
    ASSERT_TRUE(r.ok()) << r.report.to_text();
    EXPECT_TRUE(std::any_of(r.report.warnings.begin(), r.report.warnings.end(),
                            [](const Violation& v) { return v.rule == "used_by_mismatch"; }));
    EXPECT_EQ(r.belief.definitions.at(node_id("D1")).used_by, std::vector<NodeId>{node_id("A1")});
}

TEST(Validation, FixtureIsClean) {
    auto report = validate_belief(initial());
    EXPECT_TRUE(report.ok()) << report.to_text();
}

TEST(Validation, RemovedPredictionIsNamed) {
    auto doc = initial_doc();
    node_in(doc, "claims", "C2")["predictions"] = json::array();
    auto r = parse_belief(doc);
    EXPECT_TRUE(r.report.has("C2", "missing_prediction")) << r.report.to_text();
}

TEST(Validation, ReorderedChainIsNamed) {
    auto doc = initial_doc();
    auto& chain = node_in(doc, "claims", "C1")["inference_chain"];
    std::swap(chain[0], chain[3]);  // inference step before a premise
    auto r = parse_belief(doc);
    EXPECT_TRUE(r.report.has("C1", "chain_ordering")) << r.report.to_text();
}

TEST(Validation, DanglingReferenceIsNamed) {
    auto doc = initial_doc();
    node_in(doc, "claims", "C3")["depends_on"].push_back("E99");
    auto r = parse_belief(doc);
    EXPECT_TRUE(r.report.has("C3", "unresolved_reference")) << r.report.to_text();
}

TEST(Validation, ClaimOnDefinitionIsNamed) {
    auto doc = initial_doc();
    node_in(doc, "claims", "C3")["depends_on"].push_back("D1");
    auto r = parse_belief(doc);
    EXPECT_TRUE(r.report.has("C3", "claim_depends_on_definition")) << r.report.to_text();
}

TEST(Validation, ClaimCycleIsNamed) {
    auto b = initial();
    auto& c1 = b.claims.at(node_id("C1"));
    auto& c2 = b.claims.at(node_id("C2"));
    c1.depends_on.push_back(node_id("C2"));
    c2.depends_on.push_back(node_id("C1"));
    auto report = validate_belief(b);
    EXPECT_TRUE(report.has_rule("dependency_cycle")) << report.to_text();
}

TEST(Validation, PremiseOutsideDependsOn) {
    auto b = initial();
    b.claims.at(node_id("C3")).inference_chain.front().reference = node_id("A1");
    EXPECT_TRUE(validate_belief(b).has("C3", "premise_not_in_depends_on"));
}

TEST(Validation, ConclusionMustRestateClaim) {
    auto b = initial();
    b.claims.at(node_id("C3")).inference_chain.back().text = "Something else.";
    EXPECT_TRUE(validate_belief(b).has("C3", "conclusion_mismatch"));
}

TEST(Validation, ResolvedUncertaintyNeedsNote) {
    auto b = initial();
    auto& u = b.uncertainties.at(node_id("U1"));
    u.status = UncertaintyStatus::Resolved;
    u.resolution_note.clear();
    EXPECT_TRUE(validate_belief(b).has("U1", "resolution_note_required"));
}

TEST(Validation, StrategyMustMatchType) {
    auto b = initial();
    auto& x = b.counterpositions.at(node_id("X1"));
    x.attack_type = AttackType::Rebutting;
    x.attack_strategy = "challenge_evidence";
    EXPECT_TRUE(validate_belief(b).has("X1", "strategy_type_mismatch"));
}

TEST(Validation, MootNeedsRetractedTarget) {
    auto b = initial();
    b.counterpositions.at(node_id("X1")).response_sufficiency = Sufficiency::Moot;
    EXPECT_TRUE(validate_belief(b).has("X1", "moot_target_active"));
}

TEST(Validation, ReportIsCompleteAndOrderInsensitive) {
    auto doc = initial_doc();
    node_in(doc, "claims", "C2")["predictions"] = json::array();
    node_in(doc, "claims", "C3")["depends_on"].push_back("E99");
    auto forward = parse_belief(doc).report;
    std::reverse(doc["claims"].begin(), doc["claims"].end());
    std::reverse(doc["evidence"].begin(), doc["evidence"].end());
    auto reversed = parse_belief(doc).report;
    EXPECT_GE(forward.violations.size(), 2u);
    EXPECT_EQ(forward.violations, reversed.violations);
}

TEST(Graph, FixtureEdges) {
    auto g = build_graph(initial());
    int d = 0, a = 0, e = 0, c = 0;
    for (NodeId id : g.nodes) {
        d += id.kind == NodeKind::Definition;
        a += id.kind == NodeKind::Assumption;
        e += id.kind == NodeKind::Evidence;
        c += id.kind == NodeKind::Claim;
    }
    EXPECT_EQ(d, 5);
    EXPECT_EQ(a, 4);
    EXPECT_EQ(e, 4);
    EXPECT_EQ(c, 3);
    auto has = [&](const char* from, const char* to) {
        return g.strength_edges.count({Vertex::node(node_id(from)), Vertex::node(node_id(to))}) == 1;
    };
    EXPECT_TRUE(has("D2", "A2"));
    EXPECT_TRUE(has("A2", "C1"));
    EXPECT_TRUE(has("E1", "C1"));
    EXPECT_TRUE(g.strength_edges.count({Vertex::node(node_id("C1")), Vertex::thesis()}));
    EXPECT_EQ(build_graph(initial()), g);
}

TEST(Graph, NoChallengeNodesMeansNoChallengeEdges) {
    auto b = initial();
    b.counterpositions.clear();
    b.uncertainties.clear();
    EXPECT_TRUE(build_graph(b).challenge_edges.empty());
}

TEST(Graph, RetractedClaimLosesThesisEdge) {
    auto b = initial();
    auto& c1 = b.claims.at(node_id("C1"));
    c1.status = NodeStatus::Retracted;
    c1.strength = 0.0;
    auto g = build_graph(b);
    EXPECT_FALSE(g.strength_edges.count({Vertex::node(node_id("C1")), Vertex::thesis()}));
    EXPECT_TRUE(g.strength_edges.count({Vertex::node(node_id("C2")), Vertex::thesis()}));
}

TEST(Graph, InvalidBeliefIsRejectedWithReport) {
    auto b = initial();
    b.claims.at(node_id("C1")).predictions.clear();
    try {
        build_graph(b);
        FAIL() << "expected InvalidBeliefError";
    } catch (const InvalidBeliefError& e) {
        EXPECT_TRUE(e.report().has_rule("missing_prediction"));
    }
}

TEST(Graph, OrphansMatchBruteForceScan) {
    EXPECT_TRUE(find_orphans(initial()).empty());
    chal::testing::Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        auto b = chal::testing::random_belief(rng, {.max_nodes = 50, .retract_probability = 0.3});
        std::vector<NodeId> expected;
        for (NodeId id : chal::testing::strength_ids(b)) {
            if (b.is_retracted(id)) continue;
            auto deps = chal::testing::declared_deps(b, id);
            if (deps.empty()) continue;
            if (std::all_of(deps.begin(), deps.end(), [&](NodeId d) { return b.is_retracted(d); }))
                expected.push_back(id);
        }
        EXPECT_EQ(find_orphans(b), expected);
    }
}

TEST(Graph, AssumptionOnRetractedDefinitionIsOrphan) {
    auto b = initial();
    auto& d1 = b.definitions.at(node_id("D1"));
    d1.status = NodeStatus::Retracted;
    d1.strength = 0.0;
    EXPECT_EQ(find_orphans(b), std::vector<NodeId>{node_id("A1")});
}

TEST(Graph, VulnerabilityReportOnFixture) {
    auto r = vulnerability_report(initial(), 0.65);
    std::vector<NodeId> weak;
    for (const auto& w : r.weak_nodes) weak.push_back(w.id);
    EXPECT_NE(std::find(weak.begin(), weak.end(), node_id("A4")), weak.end());
    EXPECT_NE(std::find(weak.begin(), weak.end(), node_id("C3")), weak.end());
    EXPECT_EQ(r.open_counterpositions, (std::vector<NodeId>{node_id("X1"), node_id("X2")}));
    auto& u = r.open_uncertainties;
    EXPECT_NE(std::find(u.begin(), u.end(), node_id("U1")), u.end());
    EXPECT_NE(std::find(u.begin(), u.end(), node_id("U3")), u.end());
    EXPECT_TRUE(r.orphans.empty());
}

TEST(Graph, VulnerabilityReportEdgeCases) {
    auto b = initial();
    EXPECT_TRUE(vulnerability_report(b, 0.0).weak_nodes.empty());
    for (auto& [_, x] : b.counterpositions) x.response_sufficiency = Sufficiency::Sufficient;
    for (auto& [_, u] : b.uncertainties) {
        u.status = UncertaintyStatus::Resolved;
        u.resolution_note = "settled";
    }
    auto r = vulnerability_report(b, 0.5);
    EXPECT_TRUE(r.open_counterpositions.empty());
    EXPECT_TRUE(r.open_uncertainties.empty());
}
