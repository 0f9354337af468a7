#include "chal/agent.hpp"

#include "chal/belief_io.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace chal {

nlohmann::ordered_json to_json(const ChallengeDraft& d) {
    nlohmann::ordered_json o;
    o["text"] = d.text;
    o["targets"] = encode_ids(d.targets);
    o["attack_type"] = to_string(d.attack_type);
    o["attack_strategy"] = d.attack_strategy;
    return o;
}

ChallengeDraft challenge_draft_from_json(const nlohmann::json& v) {
    if (!v.is_object()) throw std::invalid_argument("challenge must be an object");
    ChallengeDraft d;
    if (!v.contains("text") || !v["text"].is_string()) throw std::invalid_argument("challenge requires string \"text\"");
    d.text = v["text"].get<std::string>();
    std::string error;
    if (!v.contains("targets") || !decode_ids(v["targets"], d.targets, error))
        throw std::invalid_argument("challenge \"targets\": " + (error.empty() ? std::string("missing") : error));
    if (!v.contains("attack_type") || !v["attack_type"].is_string()) throw std::invalid_argument("challenge requires \"attack_type\"");
    auto type = enum_from_string<AttackType>(v["attack_type"].get<std::string>());
    if (!type) throw std::invalid_argument("unknown attack_type \"" + v["attack_type"].get<std::string>() + "\"");
    d.attack_type = *type;
    if (!v.contains("attack_strategy") || !v["attack_strategy"].is_string())
        throw std::invalid_argument("challenge requires \"attack_strategy\"");
    d.attack_strategy = v["attack_strategy"].get<std::string>();
    return d;
}

Phase2Response phase2_response_from_json(const nlohmann::json& v) {
    if (!v.is_object()) throw std::invalid_argument("phase-2 response must be an object");
    Phase2Response r;
    if (v.contains("patches")) {
        if (!v["patches"].is_array()) throw std::invalid_argument("\"patches\" must be a list");
        for (const auto& pj : v["patches"]) {
            std::string error;
            auto p = patch_from_json(pj, &error);
            if (!p) throw std::invalid_argument("patch: " + error);
            r.patches.push_back(std::move(*p));
        }
    }
    if (v.contains("stance") && !v["stance"].is_null()) {
        if (!v["stance"].is_string()) throw std::invalid_argument("\"stance\" must be a string");
        r.stance = v["stance"].get<std::string>();
    }
    if (v.contains("summary_bullets") && !v["summary_bullets"].is_null()) {
        const auto& b = v["summary_bullets"];
        if (!b.is_array()) throw std::invalid_argument("\"summary_bullets\" must be a list of strings");
        std::vector<std::string> bullets;
        for (const auto& s : b) {
            if (!s.is_string()) throw std::invalid_argument("\"summary_bullets\" must be a list of strings");
            bullets.push_back(s.get<std::string>());
        }
        r.summary_bullets = std::move(bullets);
    }
    return r;
}

std::vector<Patch> synthesize_obligation_patches(const ObligationSet& obligations, const Belief& belief,
                                                 const ComplianceReport* report, double decrement) {
    auto status_of = [&](const std::string& challenge, ObligationKind kind) -> const ObligationStatus* {
        if (!report) return nullptr;
        for (const auto& item : report->items)
            if (item.challenge_id == challenge && item.kind == kind) return &item;
        return nullptr;
    };
    // Planned strengths so that two obligations on one node lower it twice.
    std::map<NodeId, double> planned;
    auto current = [&](NodeId id) {
        auto it = planned.find(id);
        return it != planned.end() ? it->second : belief.strength_node(id)->strength;
    };

    std::vector<Patch> out;
    for (const auto& w : obligations.weaken) {
        const ObligationStatus* st = status_of(w.challenge_id, ObligationKind::Weaken);
        if (!st || !st->weakening_met) {
            std::vector<NodeId> order;
            for (NodeId id : w.targets) order.push_back(id);
            for (NodeId id : support_closure(belief, w.targets)) order.push_back(id);
            for (NodeId id : order) {
                const StrengthFields* sn = belief.strength_node(id);
                if (!sn || sn->retracted() || current(id) <= 0.0) continue;
                double next = current(id) - decrement;
                nlohmann::json payload;
                if (next <= 1e-12) {
                    payload["status"] = "retracted";
                    next = 0.0;
                } else {
                    payload["strength"] = std::round(next * 1e4) / 1e4;
                    next = payload["strength"].get<double>();
                }
                payload["strength_justification"] = "Lowered after a successful critique (" + w.challenge_id + ").";
                planned[id] = next;
                out.push_back(Patch::update(id, std::move(payload)));
                break;
            }
        }
        if (!st || !st->counterposition_met) {
            nlohmann::json payload;
            payload["targets"] = encode_ids(w.targets);
            payload["attack_type"] = std::string(to_string(w.attack_type));
            payload["attack_strategy"] = w.attack_strategy;
            payload["statement"] = w.challenge_text;
            payload["my_response"] = w.rebuttal_text.empty() ? "No adequate response yet." : w.rebuttal_text;
            payload["response_sufficiency"] = "partial";
            out.push_back(Patch::add(NodeKind::Counterposition, std::move(payload)));
        }
    }
    for (const auto& u : obligations.uncertainty) {
        const ObligationStatus* st = status_of(u.challenge_id, ObligationKind::Uncertainty);
        if (st && st->uncertainty_met) continue;
        nlohmann::json payload;
        payload["targets"] = encode_ids(u.targets);
        payload["question"] = u.question;
        payload["importance"] = "medium";
        payload["status"] = "active";
        out.push_back(Patch::add(NodeKind::Uncertainty, std::move(payload)));
    }
    return out;
}

ScoreResponse score_response_from_json(const nlohmann::json& v) {
    ScoreResponse r;
    r.scores = scores_from_json(v);
    for (double s : {r.scores.challenger_logic, r.scores.challenger_ethics, r.scores.defender_logic,
                     r.scores.defender_ethics})
        if (!(s >= 0.0 && s <= 1.0)) throw std::invalid_argument("scores must lie in [0,1]");
    if (v.contains("reasoning")) {
        if (!v["reasoning"].is_string()) throw std::invalid_argument("\"reasoning\" must be a string");
        r.reasoning = v["reasoning"].get<std::string>();
    }
    return r;
}

} // namespace chal
