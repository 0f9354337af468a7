#include "chal/patch.hpp"

#include "chal/belief_io.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace chal {

namespace {

const std::set<std::string> kSystemFields{"original_strength", "consecutive_defenses", "used_by"};
const char* const kIdListFields[] = {"supports_claims", "supported_by_definitions", "depends_on", "targets", "used_by"};

json plain(const ordered_json& o) { return json::parse(o.dump()); }

std::string rewrite_id(const std::string& raw, const std::map<NodeId, NodeId>& remap) {
    auto id = NodeId::parse(raw);
    if (!id) return raw;
    auto it = remap.find(*id);
    return it == remap.end() ? raw : it->second.str();
}

// Rewrites references to ids proposed earlier in the batch to the ids the engine assigned.
void rewrite_refs(json& payload, const std::map<NodeId, NodeId>& remap) {
    if (remap.empty() || !payload.is_object()) return;
    for (const char* key : kIdListFields) {
        if (!payload.contains(key) || !payload[key].is_array()) continue;
        for (auto& v : payload[key])
            if (v.is_string()) v = rewrite_id(v.get<std::string>(), remap);
    }
    if (payload.contains("inference_chain") && payload["inference_chain"].is_array())
        for (auto& step : payload["inference_chain"])
            if (step.is_object() && step.contains("reference") && step["reference"].is_string())
                step["reference"] = rewrite_id(step["reference"].get<std::string>(), remap);
}

std::string describe(const ValidationReport& r) {
    std::string out;
    for (const auto& v : r.violations) {
        if (!out.empty()) out += "; ";
        out += v.node + ": " + v.rule + ": " + v.message;
    }
    return out;
}

std::optional<NodeStatus> status_in(const json& payload) {
    if (!payload.contains("status") || !payload["status"].is_string()) return std::nullopt;
    return enum_from_string<NodeStatus>(payload["status"].get<std::string>());
}

// Validation of an intermediate state. Moot marking is a consequence of retraction, so it is
// applied before checking; otherwise a retraction would be rejected for leaving its
// counterpositions non-moot.
ValidationReport check_candidate(Belief& candidate, std::vector<NodeId>& mooted) {
    repair_used_by(candidate);
    auto [marked, ids] = mark_moot_counterpositions(candidate);
    candidate = std::move(marked);
    mooted.insert(mooted.end(), ids.begin(), ids.end());
    return validate_belief(candidate);
}

// A new claim is listed in supports_claims of the assumptions and evidence it depends on.
void link_supports(Belief& b, NodeId claim) {
    auto link = [&](std::vector<NodeId>& list) {
        if (std::find(list.begin(), list.end(), claim) != list.end()) return;
        list.push_back(claim);
        std::sort(list.begin(), list.end());
    };
    for (NodeId dep : b.claims.at(claim).depends_on) {
        if (auto a = b.assumptions.find(dep); a != b.assumptions.end()) link(a->second.supports_claims);
        if (auto e = b.evidence.find(dep); e != b.evidence.end()) link(e->second.supports_claims);
    }
}

struct Step {
    std::optional<std::string> skip;
    std::optional<NodeId> assigned;
    std::vector<std::string> notes;
};

Step apply_add(Belief& state, const Patch& patch, json payload, std::map<NodeId, NodeId>& remap,
               ChangeLog& log, std::vector<NodeId>& mooted) {
    Step step;
    if (!payload.is_object()) {
        step.skip = "payload is not an object";
        return step;
    }
    NodeKind kind = patch.target_kind;
    NodeId assigned{kind, state.next_index(kind)};

    std::optional<NodeId> proposed;
    if (payload.contains("id") && payload["id"].is_string()) {
        proposed = NodeId::parse(payload["id"].get<std::string>());
        if (proposed && proposed->kind != kind) proposed.reset();
    }
    payload["id"] = assigned.str();

    if (is_strength_bearing(kind)) {
        if (status_in(payload) == NodeStatus::Retracted) {
            step.skip = "add_retracted: a node cannot be added in the retracted state";
            return step;
        }
        payload.erase("used_by");
        if (payload.contains("strength")) payload["original_strength"] = payload["strength"];
        payload["consecutive_defenses"] = 0;
    }

    ValidationReport decode_report;
    auto node = decode_node(kind, payload, decode_report);
    if (!node) {
        step.skip = "invalid node: " + describe(decode_report);
        return step;
    }
    Belief candidate = state;
    put_node(candidate, std::move(*node));
    if (kind == NodeKind::Claim) link_supports(candidate, assigned);
    std::vector<NodeId> moot_now;
    auto report = check_candidate(candidate, moot_now);
    if (!report.ok()) {
        step.skip = "invalid: " + describe(report);
        return step;
    }
    if (is_strength_bearing(kind)) log.push_back({Vertex::node(assigned), 0.0, candidate.strength_node(assigned)->strength, ChangeCause::Patch});
    state = std::move(candidate);
    mooted.insert(mooted.end(), moot_now.begin(), moot_now.end());
    if (proposed && !state.contains(*proposed) && *proposed != assigned) remap[*proposed] = assigned;
    if (proposed && *proposed != assigned) step.notes.push_back("id " + proposed->str() + " assigned as " + assigned.str());
    step.assigned = assigned;
    return step;
}

Step apply_update(Belief& state, const Belief& original, const Patch& patch, json payload, bool filter,
                  ChangeLog& log, std::vector<NodeId>& mooted) {
    Step step;
    if (!patch.node_id) {
        step.skip = "update without node_id";
        return step;
    }
    NodeId id = *patch.node_id;
    if (id.kind != patch.target_kind) {
        step.skip = "kind_mismatch: " + id.str() + " is not a " + std::string(kind_name(patch.target_kind));
        return step;
    }
    auto current = get_node(state, id);
    if (!current) {
        step.skip = "unknown_node: " + id.str() + " does not exist";
        return step;
    }
    if (!payload.is_object()) {
        step.skip = "payload is not an object";
        return step;
    }
    const auto& fields = node_fields(id.kind);
    for (const auto& [key, value] : payload.items()) {
        if (key == "id") {
            if (!value.is_string() || value.get<std::string>() != id.str()) {
                step.skip = "id_immutable: an update cannot change a node id";
                return step;
            }
            continue;
        }
        if (kSystemFields.count(key)) {
            step.skip = "system_field: \"" + key + "\" is managed by the engine";
            return step;
        }
        if (std::find(fields.begin(), fields.end(), key) == fields.end()) {
            step.skip = "unknown_field: \"" + key + "\" is not a field of " + std::string(kind_name(id.kind));
            return step;
        }
    }
    payload.erase("id");

    json merged = plain(encode_node(*current));
    const auto* sn = state.strength_node(id);

    if (sn) {
        auto next_status = status_in(payload);
        if (sn->retracted() && payload.contains("status") && next_status != NodeStatus::Retracted) {
            step.skip = "retraction_irreversible: " + id.str() + " is retracted";
            return step;
        }
        bool retracting = next_status == NodeStatus::Retracted || sn->retracted();
        if (sn->retracted() && payload.contains("strength") && payload["strength"].is_number() &&
            payload["strength"].get<double>() > 0.0) {
            step.skip = "retraction_irreversible: " + id.str() + " is retracted and keeps strength 0";
            return step;
        }
        if (filter && original.contains(id) && payload.contains("strength") && payload["strength"].is_number() &&
            payload["strength"].get<double>() > sn->strength) {
            step.notes.push_back("strength increase on " + id.str() + " stripped");
            payload.erase("strength");
        }
        if (retracting) payload["strength"] = 0.0;
    } else if (id.kind == NodeKind::Counterposition) {
        const auto& x = state.counterpositions.at(id);
        if (x.response_sufficiency == Sufficiency::Moot && payload.contains("response_sufficiency") &&
            payload["response_sufficiency"] != "moot") {
            step.skip = "moot_terminal: " + id.str() + " is moot";
            return step;
        }
    }

    for (const auto& [key, value] : payload.items()) merged[key] = value;

    ValidationReport decode_report;
    auto node = decode_node(id.kind, merged, decode_report);
    if (!node) {
        step.skip = "invalid node: " + describe(decode_report);
        return step;
    }
    Belief candidate = state;
    put_node(candidate, std::move(*node));
    std::vector<NodeId> moot_now;
    auto report = check_candidate(candidate, moot_now);
    if (!report.ok()) {
        step.skip = "invalid: " + describe(report);
        return step;
    }
    if (sn) {
        const auto* after = candidate.strength_node(id);
        if (after->strength != sn->strength) {
            ChangeCause cause = after->retracted() && !sn->retracted() ? ChangeCause::Retraction : ChangeCause::Patch;
            log.push_back({Vertex::node(id), sn->strength, after->strength, cause});
        }
    }
    state = std::move(candidate);
    mooted.insert(mooted.end(), moot_now.begin(), moot_now.end());
    return step;
}

} // namespace

Patch Patch::add(NodeKind kind, nlohmann::json payload) {
    Patch p;
    p.op = PatchOp::Add;
    p.target_kind = kind;
    p.payload = std::move(payload);
    return p;
}

Patch Patch::update(NodeId id, nlohmann::json payload) {
    Patch p;
    p.op = PatchOp::Update;
    p.target_kind = id.kind;
    p.node_id = id;
    p.payload = std::move(payload);
    return p;
}

nlohmann::ordered_json to_json(const Patch& patch) {
    nlohmann::ordered_json o;
    o["op"] = patch.op == PatchOp::Add ? "add" : "update";
    o["target_kind"] = kind_name(patch.target_kind);
    if (patch.node_id) o["node_id"] = patch.node_id->str();
    o["payload"] = nlohmann::ordered_json::parse(patch.payload.dump());
    return o;
}

std::optional<Patch> patch_from_json(const nlohmann::json& value, std::string* error) {
    auto fail = [&](std::string message) -> std::optional<Patch> {
        if (error) *error = std::move(message);
        return std::nullopt;
    };
    if (!value.is_object()) return fail("patch must be an object");
    if (!value.contains("op") || !value["op"].is_string()) return fail("patch requires \"op\"");
    Patch p;
    std::string op = value["op"].get<std::string>();
    if (op == "add") p.op = PatchOp::Add;
    else if (op == "update") p.op = PatchOp::Update;
    else return fail("unknown patch op \"" + op + "\"");

    if (value.contains("node_id") && !value["node_id"].is_null()) {
        if (!value["node_id"].is_string()) return fail("node_id must be a string");
        auto id = NodeId::parse(value["node_id"].get<std::string>());
        if (!id) return fail("node_id \"" + value["node_id"].get<std::string>() + "\" is not an id");
        p.node_id = *id;
    }
    if (value.contains("target_kind") && value["target_kind"].is_string()) {
        auto kind = kind_from_name(value["target_kind"].get<std::string>());
        if (!kind) return fail("unknown target_kind \"" + value["target_kind"].get<std::string>() + "\"");
        p.target_kind = *kind;
    } else if (p.node_id) {
        p.target_kind = p.node_id->kind;
    } else {
        return fail("patch requires \"target_kind\"");
    }
    if (p.op == PatchOp::Update && !p.node_id) return fail("update requires \"node_id\"");
    if (p.op == PatchOp::Add) p.node_id.reset();
    if (!value.contains("payload") || !value["payload"].is_object()) return fail("patch requires an object \"payload\"");
    p.payload = value["payload"];
    return p;
}

std::pair<Belief, std::vector<NodeId>> mark_moot_counterpositions(const Belief& belief) {
    Belief out = belief;
    std::vector<NodeId> changed;
    for (auto& [id, x] : out.counterpositions) {
        if (x.response_sufficiency == Sufficiency::Moot || x.targets.empty()) continue;
        bool all = std::all_of(x.targets.begin(), x.targets.end(), [&](NodeId t) { return out.is_retracted(t); });
        if (all) {
            x.response_sufficiency = Sufficiency::Moot;
            changed.push_back(id);
        }
    }
    return {std::move(out), std::move(changed)};
}

std::optional<NodeId> weakened_node(const Patch& patch, const Belief& before) {
    if (patch.op != PatchOp::Update || !patch.node_id || !patch.payload.is_object()) return std::nullopt;
    const auto* n = before.strength_node(*patch.node_id);
    if (n == nullptr || n->retracted()) return std::nullopt;
    const auto& pl = patch.payload;
    if (status_in(pl) == NodeStatus::Retracted) return patch.node_id;
    if (pl.contains("strength") && pl["strength"].is_number() && pl["strength"].get<double>() < n->strength)
        return patch.node_id;
    return std::nullopt;
}

bool is_weakening(const Patch& patch, const Belief& before) { return weakened_node(patch, before).has_value(); }

PatchBatchResult apply_patches(const Belief& belief, std::span<const Patch> patches, bool phase2_strength_filter,
                               const StrengthParams& params) {
    PatchBatchResult r;
    Belief state = belief;
    std::map<NodeId, NodeId> remap;
    ChangeLog log;
    std::vector<NodeId> mooted;

    for (std::size_t i = 0; i < patches.size(); ++i) {
        const Patch& patch = patches[i];
        json payload = patch.payload;
        rewrite_refs(payload, remap);
        Step step;
        if (patch.op == PatchOp::Add) {
            step = apply_add(state, patch, std::move(payload), remap, log, mooted);
        } else {
            Patch p = patch;
            if (p.node_id) {
                if (auto it = remap.find(*p.node_id); it != remap.end()) p.node_id = it->second;
            }
            step = apply_update(state, belief, p, std::move(payload), phase2_strength_filter, log, mooted);
        }
        PatchDisposition d;
        d.index = i;
        d.applied = !step.skip;
        d.assigned_id = step.assigned;
        d.notes = std::move(step.notes);
        if (step.skip) {
            d.reason = *step.skip;
            r.skipped.emplace_back(i, *step.skip);
        } else {
            r.applied.push_back(i);
        }
        r.dispositions.push_back(std::move(d));
    }

    auto enforced = enforce_constraints(state, params);
    log.insert(log.end(), enforced.changelog.begin(), enforced.changelog.end());
    auto [marked, late] = mark_moot_counterpositions(enforced.belief);
    mooted.insert(mooted.end(), late.begin(), late.end());
    repair_used_by(marked);

    auto report = validate_belief(marked);
    if (!report.ok()) {
        r.belief_out = belief;
        r.rolled_back = true;
        r.final_report = std::move(report);
        r.applied.clear();
        for (auto& d : r.dispositions) {
            if (d.applied) d.reason = "rolled_back";
            d.applied = false;
        }
        return r;
    }
    r.belief_out = std::move(marked);
    r.changelog = std::move(log);
    std::sort(mooted.begin(), mooted.end());
    mooted.erase(std::unique(mooted.begin(), mooted.end()), mooted.end());
    r.mooted = std::move(mooted);
    return r;
}

nlohmann::ordered_json to_json(const PatchDisposition& d) {
    nlohmann::ordered_json o;
    o["index"] = d.index;
    o["applied"] = d.applied;
    if (!d.reason.empty()) o["reason"] = d.reason;
    if (d.assigned_id) o["assigned_id"] = d.assigned_id->str();
    if (!d.notes.empty()) o["notes"] = d.notes;
    return o;
}

} // namespace chal
