#include "chal/protocol.hpp"

#include "chal/belief_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <set>
#include <sstream>
#include <stdexcept>

namespace chal {

namespace {

constexpr double kVerdictEpsilon = 1e-9;
constexpr double kPureModeCutoff = 0.01;

const std::vector<std::string_view> kUndermining{
    "challenge_evidence",      "challenge_assumption",        "expose_weak_foundation",
    "demand_falsifiability",   "challenge_strength_calibration", "press_uncertainty",
    "over_extension",          "under_extension",             "challenge_moral_implications",
    "expose_stakeholder_harm",
};
const std::vector<std::string_view> kRebutting{
    "present_counter_evidence",      "present_counter_example", "exploit_counterposition",
    "offer_alternative_explanation", "present_ethical_counter", "invoke_competing_obligation",
};
const std::vector<std::string_view> kUndercutting{
    "challenge_inference_step",  "identify_circularity",         "expose_inconsistency",
    "identify_equivocation",     "challenge_scope",              "circularity",
    "stipulative_bias",          "conceptual_conflation",        "challenge_normative_inference",
    "expose_value_conflict",     "challenge_moral_relevance",
};

bool in_unit(double v) { return v >= 0.0 && v <= 1.0; }

std::vector<NodeId> unique_in_order(const std::vector<NodeId>& ids) {
    std::vector<NodeId> out;
    for (NodeId id : ids)
        if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
    return out;
}

template <class T>
T required(const nlohmann::json& v, const char* key) {
    if (!v.is_object() || !v.contains(key)) throw std::invalid_argument(std::string("missing field \"") + key + "\"");
    try {
        return v.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument(std::string("field \"") + key + "\" has the wrong type");
    }
}

std::vector<NodeId> ids_from(const nlohmann::json& v, const char* key) {
    std::vector<NodeId> out;
    std::string error;
    if (!v.contains(key)) throw std::invalid_argument(std::string("missing field \"") + key + "\"");
    if (!decode_ids(v.at(key), out, error)) throw std::invalid_argument(std::string("field \"") + key + "\": " + error);
    return out;
}

std::optional<Sufficiency> payload_sufficiency(const nlohmann::json& payload) {
    if (!payload.contains("response_sufficiency") || !payload["response_sufficiency"].is_string()) return std::nullopt;
    return enum_from_string<Sufficiency>(payload["response_sufficiency"].get<std::string>());
}

bool payload_targets_any(const nlohmann::json& payload, const std::set<NodeId>& disputed) {
    if (!payload.contains("targets") || !payload["targets"].is_array()) return false;
    for (const auto& t : payload["targets"]) {
        if (!t.is_string()) continue;
        auto id = NodeId::parse(t.get<std::string>());
        if (id && disputed.count(*id)) return true;
    }
    return false;
}

std::string join_ids(const std::vector<NodeId>& ids) {
    std::string out;
    for (NodeId id : ids) {
        if (!out.empty()) out += ", ";
        out += id.str();
    }
    return out;
}

} // namespace

const std::vector<std::string_view>& taxonomy_strategies(AttackType type) {
    switch (type) {
    case AttackType::Undermining: return kUndermining;
    case AttackType::Rebutting: return kRebutting;
    case AttackType::Undercutting: return kUndercutting;
    }
    return kUndermining;
}

std::size_t taxonomy_size() { return kUndermining.size() + kRebutting.size() + kUndercutting.size(); }

std::optional<AttackType> attack_type_of(std::string_view strategy) {
    for (AttackType t : {AttackType::Undermining, AttackType::Rebutting, AttackType::Undercutting}) {
        const auto& group = taxonomy_strategies(t);
        if (std::find(group.begin(), group.end(), strategy) != group.end()) return t;
    }
    return std::nullopt;
}

bool strategy_matches(AttackType type, std::string_view strategy) { return attack_type_of(strategy) == type; }

std::string_view to_string(RebuttalAction action) noexcept {
    switch (action) {
    case RebuttalAction::Refute: return "refute";
    case RebuttalAction::Concede: return "concede";
    case RebuttalAction::Defer: return "defer";
    }
    return "?";
}

std::string_view to_string(VerdictKind kind) noexcept {
    switch (kind) {
    case VerdictKind::CritiqueValid: return "critique_valid";
    case VerdictKind::RebuttalValid: return "rebuttal_valid";
    case VerdictKind::Unresolved: return "unresolved";
    }
    return "?";
}

std::optional<RebuttalAction> rebuttal_action_from_string(std::string_view text) noexcept {
    for (auto a : {RebuttalAction::Refute, RebuttalAction::Concede, RebuttalAction::Defer})
        if (to_string(a) == text) return a;
    return std::nullopt;
}

std::optional<VerdictKind> verdict_kind_from_string(std::string_view text) noexcept {
    for (auto k : {VerdictKind::CritiqueValid, VerdictKind::RebuttalValid, VerdictKind::Unresolved})
        if (to_string(k) == text) return k;
    return std::nullopt;
}

std::string challenge_id(int round, std::string_view challenger, std::string_view defender, int index) {
    std::ostringstream os;
    os << 'r' << round << '.' << challenger << '.' << defender << '.' << index;
    return os.str();
}

std::vector<std::string> validate_challenge(const Challenge& c, const Belief& defender_belief) {
    std::vector<std::string> problems;
    if (c.challenger == c.defender) problems.push_back("challenger and defender are the same agent");
    if (c.id != challenge_id(c.round, c.challenger, c.defender, c.index))
        problems.push_back("challenge id \"" + c.id + "\" does not match its round, agents and index");
    if (c.text.empty()) problems.push_back("challenge text is empty");
    if (c.targets.empty() || c.targets.size() > 2) problems.push_back("a challenge targets one or two nodes");
    for (NodeId t : c.targets) {
        if (!defender_belief.contains(t)) problems.push_back("target " + t.str() + " does not exist in the defender's belief");
        else if (defender_belief.is_retracted(t)) problems.push_back("target " + t.str() + " is retracted");
    }
    auto group = attack_type_of(c.attack_strategy);
    if (!group) problems.push_back("attack_strategy \"" + c.attack_strategy + "\" is not in the taxonomy");
    else if (*group != c.attack_type)
        problems.push_back("attack_strategy \"" + c.attack_strategy + "\" belongs to " + std::string(to_string(*group)) +
                           ", not " + std::string(to_string(c.attack_type)));
    return problems;
}

std::vector<std::string> validate_rebuttal(const Rebuttal& r, const Belief& defender_belief) {
    std::vector<std::string> problems;
    if (r.challenge_id.empty()) problems.push_back("rebuttal does not name its challenge");
    if (r.text.empty()) problems.push_back("rebuttal text is empty");
    if (r.action == RebuttalAction::Concede &&
        std::none_of(r.tentative_patches.begin(), r.tentative_patches.end(),
                     [&](const Patch& p) { return is_weakening(p, defender_belief); }))
        problems.push_back("a concession must propose at least one weakening patch");
    return problems;
}

void AdjudicatorParams::validate() const {
    if (!in_unit(w_logic) || !in_unit(w_ethics)) throw std::invalid_argument("adjudicator weights must lie in [0,1]");
    if (std::abs(w_logic + w_ethics - 1.0) > 1e-9) throw std::invalid_argument("adjudicator weights must sum to 1");
    if (!in_unit(tau)) throw std::invalid_argument("decision threshold tau must lie in [0,1]");
}

Judgement combine_and_judge(const ComponentScores& s, const AdjudicatorParams& params) {
    params.validate();
    for (double v : {s.challenger_logic, s.challenger_ethics, s.defender_logic, s.defender_ethics})
        if (!in_unit(v)) throw std::invalid_argument("component scores must lie in [0,1]");
    Judgement j;
    j.effective = s;
    if (params.w_ethics < kPureModeCutoff) j.effective.challenger_ethics = j.effective.defender_ethics = 0.0;
    if (params.w_logic < kPureModeCutoff) j.effective.challenger_logic = j.effective.defender_logic = 0.0;
    j.sigma_c = params.w_logic * j.effective.challenger_logic + params.w_ethics * j.effective.challenger_ethics;
    j.sigma_d = params.w_logic * j.effective.defender_logic + params.w_ethics * j.effective.defender_ethics;
    double d = j.sigma_c - j.sigma_d;
    if (params.tau < kVerdictEpsilon && std::abs(d) < kVerdictEpsilon) j.kind = VerdictKind::Unresolved;
    else if (d >= params.tau - kVerdictEpsilon) j.kind = VerdictKind::CritiqueValid;
    else if (-d >= params.tau - kVerdictEpsilon) j.kind = VerdictKind::RebuttalValid;
    else j.kind = VerdictKind::Unresolved;
    return j;
}

Verdict adjudicate(const ComponentScores& scores, std::string reasoning, const AdjudicatorParams& params,
                   RebuttalAction action, bool concession_forces_critique) {
    auto j = combine_and_judge(scores, params);
    Verdict v;
    v.kind = j.kind;
    v.scores = scores;
    v.sigma_c = j.sigma_c;
    v.sigma_d = j.sigma_d;
    v.reasoning = std::move(reasoning);
    if (concession_forces_critique && action == RebuttalAction::Concede && v.kind != VerdictKind::CritiqueValid) {
        v.kind = VerdictKind::CritiqueValid;
        v.concession_forced = true;
    }
    return v;
}

std::vector<NodeId> disputed_nodes(const Belief& belief, std::span<const NodeId> targets) {
    std::vector<NodeId> out;
    for (NodeId t : targets) {
        if (t.kind == NodeKind::Counterposition || t.kind == NodeKind::Uncertainty) {
            for (NodeId inner : belief.targets_of(t)) out.push_back(inner);
        } else {
            out.push_back(t);
        }
    }
    return unique_in_order(out);
}

std::vector<NodeId> support_closure(const Belief& belief, std::span<const NodeId> targets) {
    std::set<NodeId> seen(targets.begin(), targets.end());
    std::deque<NodeId> queue(targets.begin(), targets.end());
    while (!queue.empty()) {
        NodeId id = queue.front();
        queue.pop_front();
        for (NodeId dep : belief.dependencies(id))
            if (seen.insert(dep).second) queue.push_back(dep);
    }
    return {seen.begin(), seen.end()};
}

ObligationSet enforcement_obligations(std::span<const Exchange> exchanges, std::string_view defender,
                                      const Belief& defender_belief) {
    ObligationSet set;
    set.defender = std::string(defender);
    for (const auto& ex : exchanges) {
        if (ex.challenge.defender != defender) continue;
        const auto& c = ex.challenge;
        switch (ex.verdict.kind) {
        case VerdictKind::CritiqueValid:
            set.weaken.push_back({c.id, disputed_nodes(defender_belief, c.targets), c.attack_type, c.attack_strategy,
                                  c.text, ex.rebuttal.text});
            break;
        case VerdictKind::Unresolved:
            set.uncertainty.push_back({c.id, disputed_nodes(defender_belief, c.targets), c.text});
            break;
        case VerdictKind::RebuttalValid: set.boost.push_back({c.id, c.targets}); break;
        }
    }
    return set;
}

bool ComplianceReport::all_satisfied() const noexcept {
    return std::all_of(items.begin(), items.end(), [](const ObligationStatus& s) { return s.satisfied(); });
}

std::string ComplianceReport::to_text() const {
    std::string out;
    for (const auto& s : items) {
        if (s.satisfied()) continue;
        out += s.challenge_id + ": " + s.detail + "\n";
    }
    return out.empty() ? "all obligations satisfied\n" : out;
}

ComplianceReport check_obligations(const ObligationSet& obligations, std::span<const Patch> submitted,
                                   const Belief& before) {
    ComplianceReport report;
    std::vector<bool> used(submitted.size(), false);

    auto claim = [&](auto&& pred) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < submitted.size(); ++i)
            if (!used[i] && pred(submitted[i])) {
                used[i] = true;
                return i;
            }
        return std::nullopt;
    };

    for (const auto& w : obligations.weaken) {
        ObligationStatus st;
        st.kind = ObligationKind::Weaken;
        st.challenge_id = w.challenge_id;
        auto closure = support_closure(before, w.targets);
        std::set<NodeId> support(closure.begin(), closure.end());
        std::set<NodeId> disputed(w.targets.begin(), w.targets.end());

        if (auto i = claim([&](const Patch& p) {
                auto node = weakened_node(p, before);
                return node && support.count(*node);
            })) {
            st.weakening_met = true;
            st.satisfying_patches.push_back(*i);
        }
        if (auto i = claim([&](const Patch& p) {
                if (p.op != PatchOp::Add || p.target_kind != NodeKind::Counterposition) return false;
                auto suff = payload_sufficiency(p.payload);
                return suff && (*suff == Sufficiency::Partial || *suff == Sufficiency::Unaddressed) &&
                       payload_targets_any(p.payload, disputed);
            })) {
            st.counterposition_met = true;
            st.satisfying_patches.push_back(*i);
        }
        std::vector<std::string> missing;
        if (!st.weakening_met)
            missing.push_back("lower the strength of (or retract) one of " + join_ids(w.targets) +
                              " or a node they depend on");
        if (!st.counterposition_met)
            missing.push_back("add a counterposition targeting " + join_ids(w.targets) +
                              " with response_sufficiency partial or unaddressed");
        for (const auto& m : missing) st.detail += (st.detail.empty() ? "" : "; ") + m;
        report.items.push_back(std::move(st));
    }

    for (const auto& u : obligations.uncertainty) {
        ObligationStatus st;
        st.kind = ObligationKind::Uncertainty;
        st.challenge_id = u.challenge_id;
        std::set<NodeId> disputed(u.targets.begin(), u.targets.end());
        if (auto i = claim([&](const Patch& p) {
                return p.op == PatchOp::Add && p.target_kind == NodeKind::Uncertainty &&
                       payload_targets_any(p.payload, disputed);
            })) {
            st.uncertainty_met = true;
            st.satisfying_patches.push_back(*i);
        } else {
            st.detail = "add an uncertainty targeting " + join_ids(u.targets);
        }
        report.items.push_back(std::move(st));
    }
    return report;
}

long long exchange_schedule(int agents, int challenges_per_pair, int rounds) {
    if (agents < 2) throw std::invalid_argument("a council needs at least two agents");
    if (challenges_per_pair < 1) throw std::invalid_argument("challenges per pair must be positive");
    if (rounds < 1) throw std::invalid_argument("rounds must be positive");
    return static_cast<long long>(rounds) * challenges_per_pair * agents * (agents - 1);
}

nlohmann::ordered_json to_json(const Challenge& c) {
    nlohmann::ordered_json o;
    o["id"] = c.id;
    o["round"] = c.round;
    o["challenger"] = c.challenger;
    o["defender"] = c.defender;
    o["index"] = c.index;
    o["text"] = c.text;
    o["targets"] = encode_ids(c.targets);
    o["attack_type"] = to_string(c.attack_type);
    o["attack_strategy"] = c.attack_strategy;
    return o;
}

nlohmann::ordered_json to_json(const Rebuttal& r) {
    nlohmann::ordered_json o;
    o["challenge_id"] = r.challenge_id;
    o["action"] = to_string(r.action);
    o["text"] = r.text;
    auto patches = nlohmann::ordered_json::array();
    for (const auto& p : r.tentative_patches) patches.push_back(to_json(p));
    o["tentative_patches"] = std::move(patches);
    return o;
}

nlohmann::ordered_json to_json(const ComponentScores& s) {
    nlohmann::ordered_json o;
    o["challenger_logic"] = s.challenger_logic;
    o["challenger_ethics"] = s.challenger_ethics;
    o["defender_logic"] = s.defender_logic;
    o["defender_ethics"] = s.defender_ethics;
    return o;
}

nlohmann::ordered_json to_json(const Verdict& v) {
    nlohmann::ordered_json o;
    o["kind"] = to_string(v.kind);
    o["scores"] = to_json(v.scores);
    o["sigma_c"] = v.sigma_c;
    o["sigma_d"] = v.sigma_d;
    o["reasoning"] = v.reasoning;
    o["concession_forced"] = v.concession_forced;
    return o;
}

nlohmann::ordered_json to_json(const Exchange& e) {
    nlohmann::ordered_json o;
    o["round"] = e.round;
    o["challenge"] = to_json(e.challenge);
    o["rebuttal"] = to_json(e.rebuttal);
    o["verdict"] = to_json(e.verdict);
    return o;
}

nlohmann::ordered_json to_json(const AdjudicatorParams& p) {
    nlohmann::ordered_json o;
    o["logic_system"] = p.logic_system;
    o["ethics_system"] = p.ethics_system;
    o["w_logic"] = p.w_logic;
    o["w_ethics"] = p.w_ethics;
    o["tau"] = p.tau;
    return o;
}

nlohmann::ordered_json to_json(const ObligationSet& s) {
    nlohmann::ordered_json o;
    o["defender"] = s.defender;
    auto weaken = nlohmann::ordered_json::array();
    for (const auto& w : s.weaken)
        weaken.push_back({{"challenge_id", w.challenge_id},
                          {"targets", encode_ids(w.targets)},
                          {"attack_type", to_string(w.attack_type)},
                          {"attack_strategy", w.attack_strategy}});
    auto unc = nlohmann::ordered_json::array();
    for (const auto& u : s.uncertainty)
        unc.push_back({{"challenge_id", u.challenge_id}, {"targets", encode_ids(u.targets)}, {"question", u.question}});
    auto boost = nlohmann::ordered_json::array();
    for (const auto& b : s.boost) boost.push_back({{"challenge_id", b.challenge_id}, {"targets", encode_ids(b.targets)}});
    o["weaken"] = std::move(weaken);
    o["uncertainty"] = std::move(unc);
    o["boost"] = std::move(boost);
    return o;
}

nlohmann::ordered_json to_json(const ComplianceReport& r) {
    auto items = nlohmann::ordered_json::array();
    for (const auto& s : r.items) {
        nlohmann::ordered_json o;
        o["kind"] = s.kind == ObligationKind::Weaken ? "weaken" : "uncertainty";
        o["challenge_id"] = s.challenge_id;
        o["satisfied"] = s.satisfied();
        if (s.kind == ObligationKind::Weaken) {
            o["weakening_met"] = s.weakening_met;
            o["counterposition_met"] = s.counterposition_met;
        }
        o["satisfying_patches"] = s.satisfying_patches;
        if (!s.detail.empty()) o["detail"] = s.detail;
        items.push_back(std::move(o));
    }
    return items;
}

ComplianceReport compliance_report_from_json(const nlohmann::json& v) {
    if (!v.is_array()) throw std::invalid_argument("compliance report must be a list");
    ComplianceReport r;
    for (const auto& o : v) {
        ObligationStatus s;
        const auto kind = required<std::string>(o, "kind");
        if (kind != "weaken" && kind != "uncertainty") throw std::invalid_argument("unknown obligation kind");
        s.kind = kind == "weaken" ? ObligationKind::Weaken : ObligationKind::Uncertainty;
        s.challenge_id = required<std::string>(o, "challenge_id");
        if (s.kind == ObligationKind::Weaken) {
            s.weakening_met = required<bool>(o, "weakening_met");
            s.counterposition_met = required<bool>(o, "counterposition_met");
        } else {
            s.uncertainty_met = required<bool>(o, "satisfied");
        }
        s.satisfying_patches = o.at("satisfying_patches").get<std::vector<std::size_t>>();
        if (o.contains("detail")) s.detail = required<std::string>(o, "detail");
        r.items.push_back(std::move(s));
    }
    return r;
}

Challenge challenge_from_json(const nlohmann::json& v) {
    Challenge c;
    c.round = required<int>(v, "round");
    c.challenger = required<std::string>(v, "challenger");
    c.defender = required<std::string>(v, "defender");
    c.index = required<int>(v, "index");
    c.id = v.contains("id") ? required<std::string>(v, "id") : challenge_id(c.round, c.challenger, c.defender, c.index);
    c.text = required<std::string>(v, "text");
    c.targets = ids_from(v, "targets");
    auto type = enum_from_string<AttackType>(required<std::string>(v, "attack_type"));
    if (!type) throw std::invalid_argument("unknown attack_type");
    c.attack_type = *type;
    c.attack_strategy = required<std::string>(v, "attack_strategy");
    return c;
}

Rebuttal rebuttal_from_json(const nlohmann::json& v) {
    Rebuttal r;
    r.challenge_id = required<std::string>(v, "challenge_id");
    auto action = rebuttal_action_from_string(required<std::string>(v, "action"));
    if (!action) throw std::invalid_argument("unknown rebuttal action");
    r.action = *action;
    r.text = required<std::string>(v, "text");
    if (v.contains("tentative_patches")) {
        if (!v["tentative_patches"].is_array()) throw std::invalid_argument("tentative_patches must be a list");
        for (const auto& pj : v["tentative_patches"]) {
            std::string error;
            auto p = patch_from_json(pj, &error);
            if (!p) throw std::invalid_argument("tentative patch: " + error);
            r.tentative_patches.push_back(std::move(*p));
        }
    }
    return r;
}

ComponentScores scores_from_json(const nlohmann::json& v) {
    ComponentScores s;
    s.challenger_logic = required<double>(v, "challenger_logic");
    s.challenger_ethics = required<double>(v, "challenger_ethics");
    s.defender_logic = required<double>(v, "defender_logic");
    s.defender_ethics = required<double>(v, "defender_ethics");
    return s;
}

Verdict verdict_from_json(const nlohmann::json& v) {
    Verdict out;
    auto kind = verdict_kind_from_string(required<std::string>(v, "kind"));
    if (!kind) throw std::invalid_argument("unknown verdict kind");
    out.kind = *kind;
    out.scores = scores_from_json(v.at("scores"));
    out.sigma_c = required<double>(v, "sigma_c");
    out.sigma_d = required<double>(v, "sigma_d");
    out.reasoning = v.value("reasoning", std::string());
    out.concession_forced = v.value("concession_forced", false);
    return out;
}

Exchange exchange_from_json(const nlohmann::json& v) {
    Exchange e;
    e.round = required<int>(v, "round");
    if (!v.contains("challenge") || !v.contains("rebuttal") || !v.contains("verdict"))
        throw std::invalid_argument("exchange requires challenge, rebuttal and verdict");
    e.challenge = challenge_from_json(v.at("challenge"));
    e.rebuttal = rebuttal_from_json(v.at("rebuttal"));
    e.verdict = verdict_from_json(v.at("verdict"));
    return e;
}

AdjudicatorParams adjudicator_params_from_json(const nlohmann::json& v) {
    AdjudicatorParams p;
    if (!v.is_object()) throw std::invalid_argument("adjudicator parameters must be an object");
    p.logic_system = v.value("logic_system", p.logic_system);
    p.ethics_system = v.value("ethics_system", p.ethics_system);
    p.w_logic = v.value("w_logic", p.w_logic);
    p.w_ethics = v.value("w_ethics", p.w_ethics);
    p.tau = v.value("tau", p.tau);
    p.validate();
    return p;
}

} // namespace chal
