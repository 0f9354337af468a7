#include "belief_generators.hpp"
#include "scenario_factory.hpp"

#include "chal/belief_io.hpp"
#include "chal/protocol.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace chal;
using chal::testing::fixture;

namespace {

Belief initial() { return load_belief(fixture("empiricist_initial.json")); }

AdjudicatorParams params(double w_logic, double tau = 0.15) {
    AdjudicatorParams p;
    p.w_logic = w_logic;
    p.w_ethics = 1.0 - w_logic;
    p.tau = tau;
    return p;
}

ComponentScores scores(double cl, double ce, double dl, double de) { return {cl, ce, dl, de}; }

Exchange exchange_on(const char* target, VerdictKind kind, int index) {
    auto e = chal::testing::synthetic_exchange(1, "A", "B", kind, index);
    e.challenge.targets = {node_id(target)};
    e.challenge.text = std::string("Challenge on ") + target;
    e.rebuttal.text = "Rebuttal";
    return e;
}

} // namespace

TEST(Taxonomy, HasTwentySevenStrategiesInDisjointGroups) {
    EXPECT_EQ(taxonomy_size(), 27u);
    EXPECT_EQ(taxonomy_strategies(AttackType::Undermining).size(), 10u);
    EXPECT_EQ(taxonomy_strategies(AttackType::Rebutting).size(), 6u);
    EXPECT_EQ(taxonomy_strategies(AttackType::Undercutting).size(), 11u);
    std::set<std::string_view> all;
    for (AttackType t : {AttackType::Undermining, AttackType::Rebutting, AttackType::Undercutting})
        for (auto s : taxonomy_strategies(t)) {
            EXPECT_TRUE(all.insert(s).second) << s;
            EXPECT_EQ(attack_type_of(s), t);
        }
    EXPECT_EQ(attack_type_of("challenge_evidence"), AttackType::Undermining);
    EXPECT_EQ(attack_type_of("present_counter_example"), AttackType::Rebutting);
    EXPECT_EQ(attack_type_of("identify_circularity"), AttackType::Undercutting);
    EXPECT_FALSE(attack_type_of("ad_hominem"));
}

TEST(Verdict, ExcerptGoldens) {
    EXPECT_EQ(combine_and_judge(scores(0.8, 0.0, 0.3, 0.0), params(1.0)).kind, VerdictKind::CritiqueValid);
    auto mixed = combine_and_judge(scores(0.9, 0.5, 0.3, 0.8), params(0.5));
    EXPECT_NEAR(mixed.sigma_c, 0.70, 1e-12);
    EXPECT_NEAR(mixed.sigma_d, 0.55, 1e-12);
    EXPECT_EQ(mixed.kind, VerdictKind::CritiqueValid);
    EXPECT_EQ(combine_and_judge(scores(0.55, 0.55, 0.55, 0.55), params(0.5)).kind, VerdictKind::Unresolved);
    EXPECT_EQ(combine_and_judge(scores(0.4, 0.0, 0.4, 0.0), params(1.0, 0.0)).kind, VerdictKind::Unresolved);
    EXPECT_EQ(combine_and_judge(scores(0.3, 0.0, 0.8, 0.0), params(1.0)).kind, VerdictKind::RebuttalValid);
}

TEST(Verdict, RejectsBadInput) {
    EXPECT_THROW(combine_and_judge(scores(1.2, 0, 0, 0), params(1.0)), std::invalid_argument);
    AdjudicatorParams bad;
    bad.w_logic = 0.7;
    bad.w_ethics = 0.2;
    EXPECT_THROW(combine_and_judge(scores(0.5, 0, 0.5, 0), bad), std::invalid_argument);
}

TEST(Verdict, ShiftInvarianceAndPureModes) {
    chal::testing::Rng rng(41);
    for (int i = 0; i < 2000; ++i) {
        double tau = chal::testing::grid_strength(rng, 0.0, 0.5);
        double c = chal::testing::grid_strength(rng, 0.0, 0.5);
        double d = chal::testing::grid_strength(rng, 0.0, 0.5);
        double shift = chal::testing::grid_strength(rng, 0.0, 0.5);
        auto base = combine_and_judge(scores(c, 0, d, 0), params(1.0, tau)).kind;
        auto moved = combine_and_judge(scores(c + shift, 0, d + shift, 0), params(1.0, tau)).kind;
        EXPECT_EQ(base, moved) << c << " " << d << " " << shift << " " << tau;
        double e1 = chal::testing::grid_strength(rng, 0.0, 1.0);
        double e2 = chal::testing::grid_strength(rng, 0.0, 1.0);
        EXPECT_EQ(combine_and_judge(scores(c, e1, d, e2), params(1.0, tau)).kind, base);
        EXPECT_EQ(combine_and_judge(scores(e1, c, e2, d), params(0.0, tau)).kind, base);
    }
}

TEST(Verdict, ConcessionRule) {
    auto v = adjudicate(scores(0.3, 0, 0.8, 0), "r", params(1.0), RebuttalAction::Concede, true);
    EXPECT_EQ(v.kind, VerdictKind::CritiqueValid);
    EXPECT_TRUE(v.concession_forced);
    auto off = adjudicate(scores(0.3, 0, 0.8, 0), "r", params(1.0), RebuttalAction::Concede, false);
    EXPECT_EQ(off.kind, VerdictKind::RebuttalValid);
}

TEST(Schedule, Counts) {
    EXPECT_EQ(exchange_schedule(2, 5, 5), 50);
    EXPECT_EQ(exchange_schedule(3, 5, 5), 150);
    EXPECT_EQ(exchange_schedule(2, 1, 1), 2);
    EXPECT_THROW(exchange_schedule(1, 5, 5), std::invalid_argument);
}

TEST(Challenge, Validation) {
    auto b = initial();
    Challenge c;
    c.round = 1;
    c.challenger = "A";
    c.defender = "B";
    c.index = 1;
    c.id = challenge_id(1, "A", "B", 1);
    c.text = "Objection.";
    c.targets = {node_id("C2")};
    c.attack_type = AttackType::Undermining;
    c.attack_strategy = "challenge_evidence";
    EXPECT_EQ(c.id, "r1.A.B.1");
    EXPECT_TRUE(validate_challenge(c, b).empty());
    auto wrong = c;
    wrong.attack_strategy = "present_counter_example";
    EXPECT_FALSE(validate_challenge(wrong, b).empty());
    auto missing = c;
    missing.targets = {node_id("C9")};
    EXPECT_FALSE(validate_challenge(missing, b).empty());
    auto many = c;
    many.targets = {node_id("C1"), node_id("C2"), node_id("C3")};
    EXPECT_FALSE(validate_challenge(many, b).empty());
}

TEST(Rebuttal, ConcessionNeedsWeakeningPatch) {
    auto b = initial();
    Rebuttal r{"r1.A.B.1", RebuttalAction::Concede, "Fair point.", {}};
    EXPECT_FALSE(validate_rebuttal(r, b).empty());
    r.tentative_patches.push_back(Patch::update(node_id("C2"), {{"strength", 0.6}}));
    EXPECT_TRUE(validate_rebuttal(r, b).empty());
}

TEST(Obligations, OneOfEachVerdict) {
    auto b = initial();
    std::vector<Exchange> ex{exchange_on("C2", VerdictKind::CritiqueValid, 1),
                             exchange_on("E2", VerdictKind::RebuttalValid, 2),
                             exchange_on("C1", VerdictKind::Unresolved, 3),
                             exchange_on("C3", VerdictKind::Unresolved, 4),
                             exchange_on("A1", VerdictKind::Unresolved, 5)};
    auto set = enforcement_obligations(ex, "B", b);
    ASSERT_EQ(set.weaken.size(), 1u);
    EXPECT_EQ(set.weaken[0].targets, std::vector<NodeId>{node_id("C2")});
    ASSERT_EQ(set.boost.size(), 1u);
    EXPECT_EQ(set.boost[0].targets, std::vector<NodeId>{node_id("E2")});
    EXPECT_EQ(set.uncertainty.size(), 3u);
    EXPECT_TRUE(enforcement_obligations(ex, "A", b).empty());
}

TEST(Obligations, CounterpositionTargetsExpandToDisputedNodes) {
    auto b = initial();
    std::vector<Exchange> ex{exchange_on("X2", VerdictKind::CritiqueValid, 1)};
    auto set = enforcement_obligations(ex, "B", b);
    EXPECT_EQ(set.weaken[0].targets, std::vector<NodeId>{node_id("C2")});
}

TEST(Obligations, CountsMatchVerdictsOnRandomMixes) {
    chal::testing::Rng rng(42);
    auto b = initial();
    for (int i = 0; i < 100; ++i) {
        std::vector<Exchange> ex;
        int counts[3] = {0, 0, 0};
        int n = chal::testing::uniform_int(rng, 0, 12);
        for (int k = 1; k <= n; ++k) {
            auto kind = static_cast<VerdictKind>(chal::testing::uniform_int(rng, 0, 2));
            ++counts[static_cast<int>(kind)];
            ex.push_back(exchange_on("C1", kind, k));
        }
        auto set = enforcement_obligations(ex, "B", b);
        EXPECT_EQ(static_cast<int>(set.weaken.size()), counts[0]);
        EXPECT_EQ(static_cast<int>(set.boost.size()), counts[1]);
        EXPECT_EQ(static_cast<int>(set.uncertainty.size()), counts[2]);
    }
}

TEST(Compliance, WeakeningAcceptsSupportClosure) {
    auto b = initial();
    std::vector<Exchange> ex{exchange_on("C2", VerdictKind::CritiqueValid, 1)};
    auto set = enforcement_obligations(ex, "B", b);
    json x = {{"targets", {"C2"}},
              {"attack_type", "undermining"},
              {"attack_strategy", "challenge_evidence"},
              {"statement", "s"},
              {"my_response", "r"},
              {"response_sufficiency", "partial"}};
    std::vector<Patch> ok{Patch::update(node_id("A3"), {{"strength", 0.75}}), Patch::add(NodeKind::Counterposition, x)};
    auto report = check_obligations(set, ok, b);
    ASSERT_EQ(report.items.size(), 1u);
    EXPECT_TRUE(report.all_satisfied()) << report.to_text();
    EXPECT_EQ(report.items[0].satisfying_patches, (std::vector<std::size_t>{0, 1}));

    // The support closure of C2 is computed independently here.
    auto closure = chal::testing::ancestor_oracle(b, {node_id("C2")});
    closure.insert(node_id("C2"));
    for (NodeId id : chal::testing::strength_ids(b)) {
        std::vector<Patch> one{Patch::update(id, {{"strength", 0.01}}), Patch::add(NodeKind::Counterposition, x)};
        EXPECT_EQ(check_obligations(set, one, b).all_satisfied(), closure.count(id) == 1) << id.str();
    }
}

TEST(Compliance, SufficientCounterpositionViolatesCap) {
    auto b = initial();
    std::vector<Exchange> ex{exchange_on("C2", VerdictKind::CritiqueValid, 1)};
    auto set = enforcement_obligations(ex, "B", b);
    json x = {{"targets", {"C2"}},
              {"attack_type", "undermining"},
              {"attack_strategy", "challenge_evidence"},
              {"statement", "s"},
              {"my_response", "r"},
              {"response_sufficiency", "sufficient"}};
    std::vector<Patch> patches{Patch::update(node_id("C2"), {{"strength", 0.6}}), Patch::add(NodeKind::Counterposition, x)};
    auto report = check_obligations(set, patches, b);
    EXPECT_TRUE(report.items[0].weakening_met);
    EXPECT_FALSE(report.items[0].counterposition_met);
    EXPECT_FALSE(report.all_satisfied());
}

TEST(Compliance, MissingUncertainty) {
    auto b = initial();
    std::vector<Exchange> ex{exchange_on("C1", VerdictKind::Unresolved, 1)};
    auto set = enforcement_obligations(ex, "B", b);
    EXPECT_FALSE(check_obligations(set, {}, b).all_satisfied());
    std::vector<Patch> u{Patch::add(NodeKind::Uncertainty, {{"targets", {"C1"}},
                                                             {"question", "q"},
                                                             {"importance", "medium"},
                                                             {"status", "active"}})};
    EXPECT_TRUE(check_obligations(set, u, b).all_satisfied());
}

TEST(Compliance, EachPatchSatisfiesOneRequirement) {
    auto b = initial();
    std::vector<Exchange> ex{exchange_on("C2", VerdictKind::CritiqueValid, 1), exchange_on("C2", VerdictKind::CritiqueValid, 2)};
    auto set = enforcement_obligations(ex, "B", b);
    json x = {{"targets", {"C2"}},
              {"attack_type", "undermining"},
              {"attack_strategy", "challenge_evidence"},
              {"statement", "s"},
              {"my_response", "r"},
              {"response_sufficiency", "partial"}};
    std::vector<Patch> one_pair{Patch::update(node_id("C2"), {{"strength", 0.6}}), Patch::add(NodeKind::Counterposition, x)};
    auto report = check_obligations(set, one_pair, b);
    EXPECT_TRUE(report.items[0].satisfied());
    EXPECT_FALSE(report.items[1].satisfied());
}

TEST(Serialization, ExchangeAndComplianceRoundTrip) {
    auto e = exchange_on("C2", VerdictKind::RebuttalValid, 1);
    e.verdict.scores = scores(0.3, 0, 0.8, 0);
    e.verdict.sigma_c = 0.3;
    e.verdict.sigma_d = 0.8;
    e.verdict.reasoning = "RESTATEMENT: x.";
    EXPECT_EQ(exchange_from_json(json::parse(to_json(e).dump())), e);

    auto b = initial();
    std::vector<Exchange> ex{exchange_on("C2", VerdictKind::CritiqueValid, 1), exchange_on("C1", VerdictKind::Unresolved, 2)};
    auto report = check_obligations(enforcement_obligations(ex, "B", b), {}, b);
    auto back = compliance_report_from_json(json::parse(to_json(report).dump()));
    ASSERT_EQ(back.items.size(), report.items.size());
    for (std::size_t i = 0; i < back.items.size(); ++i) {
        EXPECT_EQ(back.items[i].challenge_id, report.items[i].challenge_id);
        EXPECT_EQ(back.items[i].satisfied(), report.items[i].satisfied());
        EXPECT_EQ(back.items[i].detail, report.items[i].detail);
    }
}
