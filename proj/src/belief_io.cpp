#include "chal/belief_io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace chal {

double round4(double value) noexcept {
    if (!std::isfinite(value)) return value;
    double r = std::round(value * 10000.0) / 10000.0;
    return r == 0.0 ? 0.0 : r;  // normalize -0
}

namespace {

class Decoder {
public:
    Decoder(ValidationReport& report, std::string where) : r_(report), where_(std::move(where)) {}

    void fail(std::string_view rule, std::string message) {
        r_.violations.push_back({where_, std::string(rule), std::move(message)});
    }

    bool has(const json& o, const char* key) const { return o.contains(key) && !o.at(key).is_null(); }

    bool str(const json& o, const char* key, std::string& out, bool required) {
        if (!has(o, key)) {
            if (required) fail("missing_field", std::string("missing field \"") + key + "\"");
            return !required;
        }
        if (!o.at(key).is_string()) {
            fail("field_type", std::string("field \"") + key + "\" must be a string");
            return false;
        }
        out = o.at(key).get<std::string>();
        return true;
    }

    bool num(const json& o, const char* key, double& out, bool required) {
        if (!has(o, key)) {
            if (required) fail("missing_field", std::string("missing field \"") + key + "\"");
            return !required;
        }
        if (!o.at(key).is_number()) {
            fail("field_type", std::string("field \"") + key + "\" must be a number");
            return false;
        }
        out = o.at(key).get<double>();
        return true;
    }

    bool integer(const json& o, const char* key, int& out) {
        if (!has(o, key)) return true;
        const auto& v = o.at(key);
        if (!v.is_number_integer()) {
            fail("field_type", std::string("field \"") + key + "\" must be an integer");
            return false;
        }
        out = v.get<int>();
        return true;
    }

    template <class E>
    bool enumeration(const json& o, const char* key, E& out, bool required) {
        std::string text;
        if (!has(o, key)) {
            if (required) fail("missing_field", std::string("missing field \"") + key + "\"");
            return !required;
        }
        if (!str(o, key, text, true)) return false;
        auto v = enum_from_string<E>(text);
        if (!v) {
            fail("enum_value", std::string("field \"") + key + "\" has unknown value \"" + text + "\"");
            return false;
        }
        out = *v;
        return true;
    }

    bool ids(const json& o, const char* key, std::vector<NodeId>& out) {
        if (!has(o, key)) return true;
        std::string error;
        if (!decode_ids(o.at(key), out, error)) {
            fail(error.rfind("not an id", 0) == 0 ? "id_format" : "field_type", std::string("field \"") + key + "\": " + error);
            return false;
        }
        return true;
    }

    bool strings(const json& o, const char* key, std::vector<std::string>& out) {
        if (!has(o, key)) return true;
        const auto& v = o.at(key);
        if (!v.is_array()) {
            fail("field_type", std::string("field \"") + key + "\" must be a list of strings");
            return false;
        }
        out.clear();
        for (const auto& item : v) {
            if (!item.is_string()) {
                fail("field_type", std::string("field \"") + key + "\" must be a list of strings");
                return false;
            }
            out.push_back(item.get<std::string>());
        }
        return true;
    }

    bool strength(const json& o, StrengthFields& s) {
        bool ok = num(o, "strength", s.strength, true);
        ok &= str(o, "strength_justification", s.strength_justification, false);
        ok &= enumeration(o, "status", s.status, false);
        s.original_strength = s.strength;
        ok &= num(o, "original_strength", s.original_strength, false);
        ok &= integer(o, "consecutive_defenses", s.consecutive_defenses);
        return ok;
    }

private:
    ValidationReport& r_;
    std::string where_;
};

std::optional<AnyNode> decode_definition(Decoder& d, const json& o, NodeId id) {
    DefinitionNode n;
    n.id = id;
    bool ok = d.str(o, "term", n.term, true);
    ok &= d.str(o, "definition", n.definition, true);
    ok &= d.strength(o, n);
    ok &= d.ids(o, "used_by", n.used_by);
    if (!ok) return std::nullopt;
    return n;
}

std::optional<AnyNode> decode_assumption(Decoder& d, const json& o, NodeId id) {
    AssumptionNode n;
    n.id = id;
    bool ok = d.enumeration(o, "type", n.type, true);
    ok &= d.str(o, "statement", n.statement, true);
    ok &= d.ids(o, "supports_claims", n.supports_claims);
    ok &= d.ids(o, "supported_by_definitions", n.supported_by_definitions);
    ok &= d.strength(o, n);
    if (!ok) return std::nullopt;
    return n;
}

std::optional<AnyNode> decode_evidence(Decoder& d, const json& o, NodeId id) {
    EvidenceNode n;
    n.id = id;
    bool ok = d.enumeration(o, "type", n.type, true);
    ok &= d.str(o, "summary", n.summary, true);
    ok &= d.str(o, "source", n.source, false);
    ok &= d.ids(o, "supports_claims", n.supports_claims);
    ok &= d.ids(o, "supported_by_definitions", n.supported_by_definitions);
    ok &= d.strength(o, n);
    if (!ok) return std::nullopt;
    return n;
}

std::optional<AnyNode> decode_claim(Decoder& d, const json& o, NodeId id) {
    ClaimNode n;
    n.id = id;
    bool ok = d.str(o, "type", n.type, false);
    ok &= d.str(o, "statement", n.statement, true);
    ok &= d.ids(o, "depends_on", n.depends_on);
    ok &= d.strength(o, n);
    if (d.has(o, "inference_chain")) {
        const auto& chain = o.at("inference_chain");
        if (!chain.is_array()) {
            d.fail("field_type", "field \"inference_chain\" must be a list");
            ok = false;
        } else {
            for (const auto& step : chain) {
                if (!step.is_object()) {
                    d.fail("field_type", "inference_chain entries must be objects");
                    ok = false;
                    continue;
                }
                InferenceStep s;
                bool sok = d.enumeration(step, "role", s.role, true);
                sok &= d.str(step, "text", s.text, true);
                if (d.has(step, "reference")) {
                    std::string ref;
                    if (d.str(step, "reference", ref, true)) {
                        auto rid = NodeId::parse(ref);
                        if (!rid) {
                            d.fail("id_format", "inference_chain reference \"" + ref + "\" is not an id");
                            sok = false;
                        } else {
                            s.reference = *rid;
                        }
                    } else {
                        sok = false;
                    }
                }
                if (d.has(step, "inference_type")) {
                    InferenceType t{};
                    if (d.enumeration(step, "inference_type", t, true)) s.inference_type = t;
                    else sok = false;
                }
                ok &= sok;
                n.inference_chain.push_back(std::move(s));
            }
        }
    }
    if (d.has(o, "predictions")) {
        const auto& preds = o.at("predictions");
        if (!preds.is_array()) {
            d.fail("field_type", "field \"predictions\" must be a list");
            ok = false;
        } else {
            for (const auto& p : preds) {
                if (!p.is_object()) {
                    d.fail("field_type", "predictions entries must be objects");
                    ok = false;
                    continue;
                }
                Prediction pr;
                bool pok = d.str(p, "statement", pr.statement, false);
                pok &= d.str(p, "test", pr.test, false);
                pok &= d.str(p, "decision_criterion", pr.decision_criterion, false);
                if (d.has(p, "potential_falsifiers")) {
                    std::vector<std::string> f;
                    if (d.strings(p, "potential_falsifiers", f)) pr.potential_falsifiers = std::move(f);
                    else pok = false;
                }
                ok &= pok;
                n.predictions.push_back(std::move(pr));
            }
        }
    }
    if (!ok) return std::nullopt;
    return n;
}

std::optional<AnyNode> decode_counterposition(Decoder& d, const json& o, NodeId id) {
    CounterpositionNode n;
    n.id = id;
    bool ok = d.ids(o, "targets", n.targets);
    ok &= d.enumeration(o, "attack_type", n.attack_type, true);
    ok &= d.str(o, "attack_strategy", n.attack_strategy, true);
    ok &= d.str(o, "statement", n.statement, true);
    ok &= d.str(o, "my_response", n.my_response, false);
    ok &= d.enumeration(o, "response_sufficiency", n.response_sufficiency, true);
    if (!ok) return std::nullopt;
    return n;
}

std::optional<AnyNode> decode_uncertainty(Decoder& d, const json& o, NodeId id) {
    UncertaintyNode n;
    n.id = id;
    bool ok = d.ids(o, "targets", n.targets);
    ok &= d.str(o, "question", n.question, true);
    ok &= d.enumeration(o, "importance", n.importance, true);
    ok &= d.enumeration(o, "status", n.status, false);
    ok &= d.str(o, "resolution_note", n.resolution_note, false);
    if (!ok) return std::nullopt;
    return n;
}

std::optional<AnyNode> decode_with_id(NodeKind kind, Decoder& d, const json& o, NodeId id) {
    switch (kind) {
    case NodeKind::Definition: return decode_definition(d, o, id);
    case NodeKind::Assumption: return decode_assumption(d, o, id);
    case NodeKind::Evidence: return decode_evidence(d, o, id);
    case NodeKind::Claim: return decode_claim(d, o, id);
    case NodeKind::Counterposition: return decode_counterposition(d, o, id);
    case NodeKind::Uncertainty: return decode_uncertainty(d, o, id);
    }
    return std::nullopt;
}

void put_strength(ordered_json& o, const StrengthFields& s) {
    o["strength"] = round4(s.strength);
    o["strength_justification"] = s.strength_justification;
    o["status"] = to_string(s.status);
}

void put_defense(ordered_json& o, const StrengthFields& s) {
    o["original_strength"] = round4(s.original_strength);
    o["consecutive_defenses"] = s.consecutive_defenses;
}

ordered_json encode(const DefinitionNode& n) {
    ordered_json o;
    o["id"] = n.id.str();
    o["term"] = n.term;
    o["definition"] = n.definition;
    put_strength(o, n);
    o["used_by"] = encode_ids(n.used_by);
    put_defense(o, n);
    return o;
}

ordered_json encode(const AssumptionNode& n) {
    ordered_json o;
    o["id"] = n.id.str();
    o["type"] = to_string(n.type);
    o["statement"] = n.statement;
    o["supports_claims"] = encode_ids(n.supports_claims);
    o["supported_by_definitions"] = encode_ids(n.supported_by_definitions);
    put_strength(o, n);
    put_defense(o, n);
    return o;
}

ordered_json encode(const EvidenceNode& n) {
    ordered_json o;
    o["id"] = n.id.str();
    o["type"] = to_string(n.type);
    o["summary"] = n.summary;
    o["source"] = n.source;
    o["supports_claims"] = encode_ids(n.supports_claims);
    o["supported_by_definitions"] = encode_ids(n.supported_by_definitions);
    put_strength(o, n);
    put_defense(o, n);
    return o;
}

ordered_json encode(const ClaimNode& n) {
    ordered_json o;
    o["id"] = n.id.str();
    o["type"] = n.type;
    o["statement"] = n.statement;
    o["depends_on"] = encode_ids(n.depends_on);
    ordered_json chain = ordered_json::array();
    for (const auto& s : n.inference_chain) {
        ordered_json step;
        step["role"] = to_string(s.role);
        step["text"] = s.text;
        if (s.reference) step["reference"] = s.reference->str();
        if (s.inference_type) step["inference_type"] = to_string(*s.inference_type);
        chain.push_back(std::move(step));
    }
    o["inference_chain"] = std::move(chain);
    put_strength(o, n);
    ordered_json preds = ordered_json::array();
    for (const auto& p : n.predictions) {
        ordered_json pj;
        pj["statement"] = p.statement;
        pj["test"] = p.test;
        pj["decision_criterion"] = p.decision_criterion;
        if (p.potential_falsifiers) pj["potential_falsifiers"] = *p.potential_falsifiers;
        preds.push_back(std::move(pj));
    }
    o["predictions"] = std::move(preds);
    put_defense(o, n);
    return o;
}

ordered_json encode(const CounterpositionNode& n) {
    ordered_json o;
    o["id"] = n.id.str();
    o["targets"] = encode_ids(n.targets);
    o["attack_type"] = to_string(n.attack_type);
    o["attack_strategy"] = n.attack_strategy;
    o["statement"] = n.statement;
    o["my_response"] = n.my_response;
    o["response_sufficiency"] = to_string(n.response_sufficiency);
    return o;
}

ordered_json encode(const UncertaintyNode& n) {
    ordered_json o;
    o["id"] = n.id.str();
    o["targets"] = encode_ids(n.targets);
    o["question"] = n.question;
    o["importance"] = to_string(n.importance);
    o["status"] = to_string(n.status);
    if (!n.resolution_note.empty()) o["resolution_note"] = n.resolution_note;
    return o;
}

} // namespace

ordered_json encode_ids(const std::vector<NodeId>& ids) {
    ordered_json out = ordered_json::array();
    for (NodeId id : ids) out.push_back(id.str());
    return out;
}

bool decode_ids(const json& value, std::vector<NodeId>& out, std::string& error) {
    if (!value.is_array()) {
        error = "must be a list of ids";
        return false;
    }
    out.clear();
    for (const auto& item : value) {
        if (!item.is_string()) {
            error = "must be a list of ids";
            return false;
        }
        auto id = NodeId::parse(item.get<std::string>());
        if (!id) {
            error = "not an id: \"" + item.get<std::string>() + "\"";
            return false;
        }
        out.push_back(*id);
    }
    return true;
}

NodeId node_id_of(const AnyNode& node) {
    return std::visit([](const auto& n) { return n.id; }, node);
}

const std::vector<std::string>& node_fields(NodeKind kind) {
    static const std::vector<std::string> d{"id", "term", "definition", "strength", "strength_justification",
                                            "status", "used_by", "original_strength", "consecutive_defenses"};
    static const std::vector<std::string> a{"id", "type", "statement", "supports_claims", "supported_by_definitions",
                                            "strength", "strength_justification", "status", "original_strength",
                                            "consecutive_defenses"};
    static const std::vector<std::string> e{"id", "type", "summary", "source", "supports_claims",
                                            "supported_by_definitions", "strength", "strength_justification",
                                            "status", "original_strength", "consecutive_defenses"};
    static const std::vector<std::string> c{"id", "type", "statement", "depends_on", "inference_chain", "strength",
                                            "strength_justification", "status", "predictions", "original_strength",
                                            "consecutive_defenses"};
    static const std::vector<std::string> x{"id", "targets", "attack_type", "attack_strategy", "statement",
                                            "my_response", "response_sufficiency"};
    static const std::vector<std::string> u{"id", "targets", "question", "importance", "status", "resolution_note"};
    switch (kind) {
    case NodeKind::Definition: return d;
    case NodeKind::Assumption: return a;
    case NodeKind::Evidence: return e;
    case NodeKind::Claim: return c;
    case NodeKind::Counterposition: return x;
    case NodeKind::Uncertainty: return u;
    }
    return d;
}

ordered_json encode_node(const AnyNode& node) {
    return std::visit([](const auto& n) { return encode(n); }, node);
}

ordered_json encode_node(const Belief& belief, NodeId id) {
    auto node = get_node(belief, id);
    if (!node) throw std::invalid_argument("no such node: " + id.str());
    return encode_node(*node);
}

std::optional<AnyNode> get_node(const Belief& belief, NodeId id) {
    switch (id.kind) {
    case NodeKind::Definition:
        if (auto it = belief.definitions.find(id); it != belief.definitions.end()) return AnyNode{it->second};
        break;
    case NodeKind::Assumption:
        if (auto it = belief.assumptions.find(id); it != belief.assumptions.end()) return AnyNode{it->second};
        break;
    case NodeKind::Evidence:
        if (auto it = belief.evidence.find(id); it != belief.evidence.end()) return AnyNode{it->second};
        break;
    case NodeKind::Claim:
        if (auto it = belief.claims.find(id); it != belief.claims.end()) return AnyNode{it->second};
        break;
    case NodeKind::Counterposition:
        if (auto it = belief.counterpositions.find(id); it != belief.counterpositions.end()) return AnyNode{it->second};
        break;
    case NodeKind::Uncertainty:
        if (auto it = belief.uncertainties.find(id); it != belief.uncertainties.end()) return AnyNode{it->second};
        break;
    }
    return std::nullopt;
}

void put_node(Belief& belief, AnyNode node) {
    std::visit(
        [&](auto&& n) {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, DefinitionNode>) belief.definitions[n.id] = std::move(n);
            else if constexpr (std::is_same_v<T, AssumptionNode>) belief.assumptions[n.id] = std::move(n);
            else if constexpr (std::is_same_v<T, EvidenceNode>) belief.evidence[n.id] = std::move(n);
            else if constexpr (std::is_same_v<T, ClaimNode>) belief.claims[n.id] = std::move(n);
            else if constexpr (std::is_same_v<T, CounterpositionNode>) belief.counterpositions[n.id] = std::move(n);
            else belief.uncertainties[n.id] = std::move(n);
        },
        std::move(node));
}

std::optional<AnyNode> decode_node(NodeKind kind, const json& object, ValidationReport& report) {
    std::string where = "id" ;
    if (object.is_object() && object.contains("id") && object.at("id").is_string()) where = object.at("id").get<std::string>();
    Decoder d(report, where);
    if (!object.is_object()) {
        d.fail("not_an_object", "expected a " + std::string(kind_name(kind)) + " object");
        return std::nullopt;
    }
    std::string raw;
    if (!d.str(object, "id", raw, true)) return std::nullopt;
    auto id = NodeId::parse(raw);
    if (!id) {
        d.fail("id_format", "\"" + raw + "\" is not a valid identifier");
        return std::nullopt;
    }
    if (id->kind != kind) {
        d.fail("wrong_collection", raw + " is not a " + std::string(kind_name(kind)) + " identifier");
        return std::nullopt;
    }
    return decode_with_id(kind, d, object, *id);
}

DecodeResult decode_belief(const json& doc) {
    DecodeResult out;
    Decoder root(out.report, "document");
    if (!doc.is_object()) {
        root.fail("not_an_object", "a belief document is a JSON object");
        return out;
    }
    std::string version;
    if (!doc.contains("cbs_version")) {
        root.fail("cbs_version", std::string(rule_text("cbs_version")));
    } else if (!doc.at("cbs_version").is_string() || doc.at("cbs_version").get<std::string>() != kCbsVersion) {
        root.fail("cbs_version", "unsupported cbs_version " + doc.at("cbs_version").dump());
    }
    root.num(doc, "breadth_exponent", out.belief.breadth_exponent, false);

    Decoder th(out.report, "thesis");
    if (!doc.contains("thesis") || !doc.at("thesis").is_object()) {
        root.fail("missing_field", "missing object \"thesis\"");
    } else {
        const auto& t = doc.at("thesis");
        th.str(t, "stance", out.belief.thesis.stance, true);
        th.strings(t, "summary_bullets", out.belief.thesis.summary_bullets);
        th.num(t, "strength", out.belief.thesis.strength, false);
        th.str(t, "strength_reasoning", out.belief.thesis.strength_reasoning, false);
    }

    for (NodeKind kind : kAllKinds) {
        std::string key(collection_name(kind));
        if (!doc.contains(key) || doc.at(key).is_null()) continue;
        const auto& arr = doc.at(key);
        if (!arr.is_array()) {
            root.fail("field_type", "\"" + key + "\" must be a list");
            continue;
        }
        for (const auto& item : arr) {
            auto node = decode_node(kind, item, out.report);
            if (!node) continue;
            NodeId id = node_id_of(*node);
            if (out.belief.contains(id)) {
                out.report.violations.push_back({id.str(), "duplicate_id", id.str() + " is declared more than once"});
                continue;
            }
            put_node(out.belief, std::move(*node));
        }
    }
    out.report.normalize();
    return out;
}

DecodeResult parse_belief(const json& document) {
    DecodeResult out = decode_belief(document);
    out.report.merge(validate_belief(out.belief));
    repair_used_by(out.belief);
    return out;
}

DecodeResult parse_belief(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        DecodeResult out;
        out.report.violations.push_back({"document", "json_syntax", e.what()});
        return out;
    }
    return parse_belief(doc);
}

DecodeResult parse_belief(const std::string& text) { return parse_belief(std::string_view(text)); }
DecodeResult parse_belief(const char* text) { return parse_belief(std::string_view(text)); }

ordered_json encode_belief(const Belief& belief) {
    Belief b = belief;
    repair_used_by(b);
    ordered_json o;
    o["cbs_version"] = std::string(kCbsVersion);
    o["breadth_exponent"] = b.breadth_exponent;
    ordered_json t;
    t["stance"] = b.thesis.stance;
    t["summary_bullets"] = b.thesis.summary_bullets;
    t["strength"] = round4(b.thesis.strength);
    t["strength_reasoning"] = b.thesis.strength_reasoning;
    o["thesis"] = std::move(t);
    auto put = [&](const char* key, const auto& map) {
        ordered_json arr = ordered_json::array();
        for (const auto& [id, n] : map) arr.push_back(encode(n));
        o[key] = std::move(arr);
    };
    put("definitions", b.definitions);
    put("assumptions", b.assumptions);
    put("evidence", b.evidence);
    put("claims", b.claims);
    put("counterpositions", b.counterpositions);
    put("uncertainties", b.uncertainties);
    return o;
}

std::string serialize_belief(const Belief& belief) { return encode_belief(belief).dump(2) + "\n"; }

Belief canonicalize(const Belief& belief) {
    auto decoded = decode_belief(json::parse(serialize_belief(belief)));
    return std::move(decoded.belief);
}

Belief load_belief(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    auto result = parse_belief(ss.str());
    if (!result.ok())
        throw InvalidBeliefError("invalid belief document " + path.string() + ":\n" + result.report.to_text(), result.report);
    return std::move(result.belief);
}

void save_belief(const std::filesystem::path& path, const Belief& belief) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << serialize_belief(belief);
    if (!out) throw IoError("write failed for " + path.string());
}

} // namespace chal
