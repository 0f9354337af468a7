#include "chal/validation.hpp"

#include "chal/protocol.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

namespace chal {

namespace {

const std::map<std::string_view, std::string_view>& rule_texts() {
    static const std::map<std::string_view, std::string_view> texts{
        {"attack_type", "attack_type must be undermining, rebutting or undercutting"},
        {"breadth_exponent", "breadth_exponent must be a positive real number"},
        {"cbs_version", "the document root requires \"cbs_version\": \"1\""},
        {"chain_conclusion_count", "exactly one conclusion step is required"},
        {"chain_inference_count", "exactly one inference step is required"},
        {"chain_length", "an inference chain has at least three steps"},
        {"chain_ordering",
         "all premise steps must appear first, then the inference step, then the conclusion last"},
        {"claim_depends_on_definition",
         "claims depend on assumptions, evidence or other claims, never directly on definitions"},
        {"conclusion_mismatch", "the conclusion step text must equal the claim statement"},
        {"defense_count", "consecutive_defenses must be a nonnegative integer"},
        {"dependency_cycle", "claim dependencies must form a directed acyclic graph"},
        {"duplicate_id", "identifiers are unique within a belief"},
        {"empty_depends_on", "a claim must depend on at least one node"},
        {"empty_summary_bullets", "the thesis needs at least one summary bullet"},
        {"empty_supported_by_definitions", "at least one supporting definition is required"},
        {"empty_targets", "at least one target is required"},
        {"enum_value", "field value is not one of the allowed values"},
        {"field_type", "field has the wrong type"},
        {"id_format", "identifiers are a kind prefix letter followed by an unpadded positive index"},
        {"inference_type_missing", "inference steps carry an inference_type"},
        {"missing_field", "required field is missing"},
        {"missing_prediction", "each claim requires at least one falsifiable prediction"},
        {"moot_target_active", "a moot counterposition requires all of its targets to be retracted"},
        {"not_an_object", "expected a JSON object"},
        {"prediction_incomplete", "predictions need a statement, a test and a decision criterion"},
        {"premise_not_in_depends_on", "every premise reference must appear in depends_on"},
        {"premise_reference", "premise steps carry exactly one A, E or C reference"},
        {"reference_kind", "reference points at a node of the wrong kind"},
        {"resolution_note_required", "a resolved uncertainty requires a resolution note"},
        {"retracted_strength", "retracted nodes have strength 0"},
        {"step_fields",
         "only premises carry a reference and only inference steps carry an inference_type"},
        {"strategy_type_mismatch", "attack_strategy must belong to the group of its attack_type"},
        {"strength_range", "strengths lie in [0, 1]"},
        {"unknown_strategy", "attack_strategy must be one of the taxonomy strategies"},
        {"unresolved_reference", "reference does not resolve to an existing node"},
        {"used_by_mismatch", "used_by is derived from supporting nodes and was repaired"},
        {"supports_claims_mismatch",
         "supports_claims lists a claim that does not depend on this node (or misses one that does)"},
        {"wrong_collection", "node identifier kind does not match its collection"},
    };
    return texts;
}

class Checker {
public:
    explicit Checker(const Belief& b) : b_(b) {}

    ValidationReport run() {
        check_thesis();
        for (const auto& [id, d] : b_.definitions) check_strength(id, d);
        for (const auto& [id, a] : b_.assumptions) {
            check_strength(id, a);
            check_grounded(id, a.supported_by_definitions);
            check_supports(id, a.supports_claims);
        }
        for (const auto& [id, e] : b_.evidence) {
            check_strength(id, e);
            check_grounded(id, e.supported_by_definitions);
            check_supports(id, e.supports_claims);
        }
        for (const auto& [id, c] : b_.claims) check_claim(id, c);
        check_cycles();
        for (const auto& [id, x] : b_.counterpositions) check_counterposition(id, x);
        for (const auto& [id, u] : b_.uncertainties) check_uncertainty(id, u);
        check_used_by();
        report_.normalize();
        return std::move(report_);
    }

private:
    void add(NodeId id, std::string_view rule, std::string message) { add(id.str(), rule, std::move(message)); }
    void add(std::string node, std::string_view rule, std::string message) {
        report_.violations.push_back({std::move(node), std::string(rule), std::move(message)});
    }
    void warn(std::string node, std::string_view rule, std::string message) {
        report_.warnings.push_back({std::move(node), std::string(rule), std::move(message)});
    }

    static std::string fmt(double v) {
        std::ostringstream os;
        os << v;
        return os.str();
    }

    void check_thesis() {
        if (!(b_.breadth_exponent > 0.0))
            add("document", "breadth_exponent", "breadth_exponent " + fmt(b_.breadth_exponent) + " is not positive");
        if (b_.thesis.summary_bullets.empty())
            add("thesis", "empty_summary_bullets", std::string(rule_text("empty_summary_bullets")));
        if (!(b_.thesis.strength >= 0.0 && b_.thesis.strength <= 1.0))
            add("thesis", "strength_range", "thesis strength " + fmt(b_.thesis.strength) + " outside [0, 1]");
    }

    void check_strength(NodeId id, const StrengthFields& s) {
        if (!(s.strength >= 0.0 && s.strength <= 1.0))
            add(id, "strength_range", "strength " + fmt(s.strength) + " outside [0, 1]");
        if (!(s.original_strength >= 0.0 && s.original_strength <= 1.0))
            add(id, "strength_range", "original_strength " + fmt(s.original_strength) + " outside [0, 1]");
        if (s.retracted() && s.strength != 0.0)
            add(id, "retracted_strength", "retracted node has strength " + fmt(s.strength) + "; retracted nodes have strength 0");
        if (s.consecutive_defenses < 0)
            add(id, "defense_count", "consecutive_defenses is negative");
    }

    // Reports a reference that is missing or of a kind outside `allowed`; returns true when it resolves.
    bool check_ref(NodeId owner, NodeId ref, std::initializer_list<NodeKind> allowed, std::string_view field) {
        if (std::find(allowed.begin(), allowed.end(), ref.kind) == allowed.end()) {
            add(owner, "reference_kind", std::string(field) + " entry " + ref.str() + " has the wrong kind");
            return false;
        }
        if (!b_.contains(ref)) {
            add(owner, "unresolved_reference", std::string(field) + " entry " + ref.str() + " does not exist");
            return false;
        }
        return true;
    }

    void check_grounded(NodeId id, const std::vector<NodeId>& defs) {
        if (defs.empty())
            add(id, "empty_supported_by_definitions", std::string(rule_text("empty_supported_by_definitions")));
        for (NodeId d : defs) check_ref(id, d, {NodeKind::Definition}, "supported_by_definitions");
    }

    void check_supports(NodeId id, const std::vector<NodeId>& claims) {
        for (NodeId c : claims) {
            if (!check_ref(id, c, {NodeKind::Claim}, "supports_claims")) continue;
            const auto& deps = b_.claims.at(c).depends_on;
            if (std::find(deps.begin(), deps.end(), id) == deps.end())
                warn(id.str(), "supports_claims_mismatch", "lists " + c.str() + " but " + c.str() + " does not depend on it");
        }
    }

    void check_claim(NodeId id, const ClaimNode& c) {
        check_strength(id, c);
        if (c.depends_on.empty()) add(id, "empty_depends_on", std::string(rule_text("empty_depends_on")));
        for (NodeId dep : c.depends_on) {
            if (dep.kind == NodeKind::Definition) {
                add(id, "claim_depends_on_definition",
                    "depends_on lists definition " + dep.str() + "; " + std::string(rule_text("claim_depends_on_definition")));
                continue;
            }
            if (check_ref(id, dep, {NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim}, "depends_on")) {
                if (dep.kind == NodeKind::Assumption || dep.kind == NodeKind::Evidence) {
                    const auto& sup = dep.kind == NodeKind::Assumption ? b_.assumptions.at(dep).supports_claims
                                                                       : b_.evidence.at(dep).supports_claims;
                    if (std::find(sup.begin(), sup.end(), id) == sup.end())
                        warn(dep.str(), "supports_claims_mismatch", id.str() + " depends on it but supports_claims omits " + id.str());
                }
            }
        }
        check_chain(id, c);
        if (c.predictions.empty()) add(id, "missing_prediction", "claim has no predictions; " + std::string(rule_text("missing_prediction")));
        for (std::size_t i = 0; i < c.predictions.size(); ++i) {
            const auto& p = c.predictions[i];
            if (p.statement.empty() || p.test.empty() || p.decision_criterion.empty())
                add(id, "prediction_incomplete", "prediction " + std::to_string(i + 1) + ": " + std::string(rule_text("prediction_incomplete")));
        }
    }

    void check_chain(NodeId id, const ClaimNode& c) {
        const auto& chain = c.inference_chain;
        if (chain.size() < 3)
            add(id, "chain_length", "inference chain has " + std::to_string(chain.size()) + " steps; " + std::string(rule_text("chain_length")));
        int inferences = 0, conclusions = 0;
        bool ordered = true;
        int phase = 0;  // 0 premises, 1 inference seen, 2 conclusion seen
        for (std::size_t i = 0; i < chain.size(); ++i) {
            const auto& s = chain[i];
            std::string where = "step " + std::to_string(i + 1);
            switch (s.role) {
            case StepRole::Premise:
                if (phase != 0) ordered = false;
                if (!s.reference) {
                    add(id, "premise_reference", where + ": premise has no reference");
                } else if (s.reference->kind != NodeKind::Assumption && s.reference->kind != NodeKind::Evidence &&
                           s.reference->kind != NodeKind::Claim) {
                    add(id, "premise_reference", where + ": premise references " + s.reference->str() + "; " + std::string(rule_text("premise_reference")));
                } else if (std::find(c.depends_on.begin(), c.depends_on.end(), *s.reference) == c.depends_on.end()) {
                    add(id, "premise_not_in_depends_on", where + ": premise reference " + s.reference->str() + " is not in depends_on");
                }
                if (s.inference_type) add(id, "step_fields", where + ": premise carries an inference_type");
                break;
            case StepRole::Inference:
                ++inferences;
                if (phase != 0) ordered = false;
                phase = std::max(phase, 1);
                if (!s.inference_type) add(id, "inference_type_missing", where + ": " + std::string(rule_text("inference_type_missing")));
                if (s.reference) add(id, "step_fields", where + ": inference step carries a reference");
                break;
            case StepRole::Conclusion:
                ++conclusions;
                if (phase == 2) ordered = false;
                phase = 2;
                if (i + 1 != chain.size()) ordered = false;
                if (s.reference || s.inference_type) add(id, "step_fields", where + ": conclusion carries a reference or inference_type");
                if (s.text != c.statement) add(id, "conclusion_mismatch", std::string(rule_text("conclusion_mismatch")));
                break;
            }
        }
        if (!chain.empty() && chain.front().role != StepRole::Premise) ordered = false;
        if (!ordered) add(id, "chain_ordering", std::string(rule_text("chain_ordering")));
        if (inferences != 1)
            add(id, "chain_inference_count", "found " + std::to_string(inferences) + " inference steps; " + std::string(rule_text("chain_inference_count")));
        if (conclusions != 1)
            add(id, "chain_conclusion_count", "found " + std::to_string(conclusions) + " conclusion steps; " + std::string(rule_text("chain_conclusion_count")));
    }

    // Tarjan's strongly connected components over claim-to-claim dependencies.
    void check_cycles() {
        std::map<NodeId, int> index, low;
        std::set<NodeId> on_stack;
        std::vector<NodeId> stack;
        int counter = 0;
        std::vector<std::vector<NodeId>> cycles;

        std::function<void(NodeId)> visit = [&](NodeId v) {
            index[v] = low[v] = counter++;
            stack.push_back(v);
            on_stack.insert(v);
            for (NodeId w : b_.claims.at(v).depends_on) {
                if (w.kind != NodeKind::Claim || !b_.claims.count(w)) continue;
                if (!index.count(w)) {
                    visit(w);
                    low[v] = std::min(low[v], low[w]);
                } else if (on_stack.count(w)) {
                    low[v] = std::min(low[v], index[w]);
                }
            }
            if (low[v] == index[v]) {
                std::vector<NodeId> comp;
                NodeId w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack.erase(w);
                    comp.push_back(w);
                } while (w != v);
                const auto& deps = b_.claims.at(v).depends_on;
                bool self = std::find(deps.begin(), deps.end(), v) != deps.end();
                if (comp.size() > 1 || self) {
                    std::sort(comp.begin(), comp.end());
                    cycles.push_back(comp);
                }
            }
        };
        for (const auto& [id, _] : b_.claims)
            if (!index.count(id)) visit(id);
        for (const auto& comp : cycles) {
            std::string names;
            for (NodeId n : comp) names += (names.empty() ? "" : ", ") + n.str();
            add(comp.front(), "dependency_cycle", "claims {" + names + "} form a dependency cycle");
        }
    }

    void check_targets(NodeId id, const std::vector<NodeId>& targets) {
        if (targets.empty()) add(id, "empty_targets", std::string(rule_text("empty_targets")));
        for (NodeId t : targets)
            check_ref(id, t, {NodeKind::Definition, NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim}, "targets");
    }

    void check_counterposition(NodeId id, const CounterpositionNode& x) {
        check_targets(id, x.targets);
        auto group = attack_type_of(x.attack_strategy);
        if (!group)
            add(id, "unknown_strategy", "attack_strategy \"" + x.attack_strategy + "\" is not in the taxonomy");
        else if (*group != x.attack_type)
            add(id, "strategy_type_mismatch", "attack_strategy \"" + x.attack_strategy + "\" belongs to " +
                                                  std::string(to_string(*group)) + ", not " + std::string(to_string(x.attack_type)));
        if (x.response_sufficiency == Sufficiency::Moot) {
            for (NodeId t : x.targets)
                if (b_.contains(t) && !b_.is_retracted(t))
                    add(id, "moot_target_active", "marked moot but target " + t.str() + " is not retracted");
        }
    }

    void check_uncertainty(NodeId id, const UncertaintyNode& u) {
        check_targets(id, u.targets);
        if (u.status == UncertaintyStatus::Resolved && u.resolution_note.empty())
            add(id, "resolution_note_required", std::string(rule_text("resolution_note_required")));
    }

    void check_used_by() {
        Belief derived = b_;
        repair_used_by(derived);
        for (const auto& [id, d] : b_.definitions) {
            auto sorted = d.used_by;
            std::sort(sorted.begin(), sorted.end());
            if (sorted != derived.definitions.at(id).used_by)
                warn(id.str(), "used_by_mismatch", std::string(rule_text("used_by_mismatch")));
        }
    }

    const Belief& b_;
    ValidationReport report_;
};

// Canonical ordering: node ids in identifier order, then named locations.
auto order_key(const Violation& v) {
    auto id = NodeId::parse(v.node);
    int group = id ? 1 : (v.node == "document" ? 0 : 2);
    NodeId nid = id.value_or(NodeId{});
    return std::make_tuple(group, nid, v.node, v.rule, v.message);
}

} // namespace

bool ValidationReport::has_rule(std::string_view rule) const {
    return std::any_of(violations.begin(), violations.end(), [&](const Violation& v) { return v.rule == rule; });
}

bool ValidationReport::has(std::string_view node, std::string_view rule) const {
    return std::any_of(violations.begin(), violations.end(),
                       [&](const Violation& v) { return v.node == node && v.rule == rule; });
}

std::vector<std::string> ValidationReport::rules() const {
    std::vector<std::string> out;
    for (const auto& v : violations)
        if (std::find(out.begin(), out.end(), v.rule) == out.end()) out.push_back(v.rule);
    return out;
}

void ValidationReport::normalize() {
    for (auto* list : {&violations, &warnings}) {
        std::sort(list->begin(), list->end(), [](const Violation& a, const Violation& b) { return order_key(a) < order_key(b); });
        list->erase(std::unique(list->begin(), list->end()), list->end());
    }
}

void ValidationReport::merge(const ValidationReport& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
    warnings.insert(warnings.end(), other.warnings.begin(), other.warnings.end());
    normalize();
}

std::string ValidationReport::to_text() const {
    std::string out;
    for (const auto& v : violations) out += v.node + ": " + v.rule + ": " + v.message + "\n";
    return out;
}

std::string_view rule_text(std::string_view rule) {
    const auto& texts = rule_texts();
    auto it = texts.find(rule);
    return it == texts.end() ? std::string_view("rule violated") : it->second;
}

ValidationReport validate_belief(const Belief& belief) { return Checker(belief).run(); }

} // namespace chal
