#include "chal/analytics.hpp"

#include "chal/error.hpp"
#include "chal/pipeline.hpp"

#include <fmt/format.h>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

namespace chal {

namespace {

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << content;
    if (!out) throw IoError("write failed for " + path.string());
}

std::string fmt_double(double v) { return fmt::format("{:.6f}", v); }

} // namespace

double ApsTable::score(ExchangeRole role, VerdictKind kind) const noexcept {
    if (role == ExchangeRole::Challenger) {
        switch (kind) {
        case VerdictKind::CritiqueValid: return challenger_critique_valid;
        case VerdictKind::RebuttalValid: return challenger_rebuttal_valid;
        case VerdictKind::Unresolved: return challenger_unresolved;
        }
    }
    switch (kind) {
    case VerdictKind::CritiqueValid: return target_critique_valid;
    case VerdictKind::RebuttalValid: return target_rebuttal_valid;
    case VerdictKind::Unresolved: return target_unresolved;
    }
    return 0.0;
}

ApsTable ApsTable::from_json(const nlohmann::json& v) {
    if (!v.is_object()) throw ConfigError("aps_table must be an object");
    ApsTable t;
    std::map<std::string, double*> fields{
        {"challenger_critique_valid", &t.challenger_critique_valid},
        {"challenger_rebuttal_valid", &t.challenger_rebuttal_valid},
        {"challenger_unresolved", &t.challenger_unresolved},
        {"target_critique_valid", &t.target_critique_valid},
        {"target_rebuttal_valid", &t.target_rebuttal_valid},
        {"target_unresolved", &t.target_unresolved},
    };
    for (const auto& [key, val] : v.items()) {
        auto it = fields.find(key);
        if (it == fields.end()) throw ConfigError("unknown aps_table entry \"" + key + "\"");
        if (!val.is_number() || val.get<double>() < -1.0 || val.get<double>() > 1.0)
            throw ConfigError("aps_table entry \"" + key + "\" must be a number in [-1, 1]");
        *it->second = val.get<double>();
    }
    return t;
}

nlohmann::ordered_json ApsTable::to_json() const {
    nlohmann::ordered_json o;
    o["challenger_critique_valid"] = challenger_critique_valid;
    o["challenger_rebuttal_valid"] = challenger_rebuttal_valid;
    o["challenger_unresolved"] = challenger_unresolved;
    o["target_critique_valid"] = target_critique_valid;
    o["target_rebuttal_valid"] = target_rebuttal_valid;
    o["target_unresolved"] = target_unresolved;
    return o;
}

std::optional<double> aps(std::span<const Exchange> exchanges, std::string_view agent, std::optional<int> upto_round,
                          const ApsTable& table) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& ex : exchanges) {
        if (upto_round && ex.round > *upto_round) continue;
        if (ex.challenge.challenger == agent) {
            sum += table.score(ExchangeRole::Challenger, ex.verdict.kind);
            ++n;
        }
        if (ex.challenge.defender == agent) {
            sum += table.score(ExchangeRole::Target, ex.verdict.kind);
            ++n;
        }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
}

std::vector<double> TextEncoder::encode(const std::string& text) { return encode_batch({text}).at(0); }

HashingEncoder::HashingEncoder(std::size_t dimension) : dimension_(dimension) {
    if (dimension == 0) throw ConfigError("encoder dimension must be positive");
}

std::vector<std::vector<double>> HashingEncoder::encode_batch(const std::vector<std::string>& texts) {
    std::vector<std::vector<double>> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
        std::vector<double> v(dimension_, 0.0);
        std::string token;
        auto flush = [&] {
            if (token.empty()) return;
            std::uint64_t h = fnv1a(token);
            v[h % dimension_] += (h >> 63) ? -1.0 : 1.0;
            token.clear();
        };
        for (unsigned char c : text) {
            if (std::isalnum(c)) token += static_cast<char>(std::tolower(c));
            else flush();
        }
        flush();
        double norm = 0.0;
        for (double x : v) norm += x * x;
        if (norm > 0.0) {
            norm = std::sqrt(norm);
            for (double& x : v) x /= norm;
        }
        out.push_back(std::move(v));
    }
    return out;
}

ExternalCommandEncoder::ExternalCommandEncoder(std::string command, std::size_t dimension)
    : command_(std::move(command)), dimension_(dimension) {
    if (command_.empty()) throw ConfigError("encoder command is empty");
    if (dimension == 0) throw ConfigError("encoder dimension must be positive");
}

std::vector<std::vector<double>> ExternalCommandEncoder::encode_batch(const std::vector<std::string>& texts) {
    if (texts.empty()) return {};
    char tmpl[] = "/tmp/chal_encoder_XXXXXX";
    int fd = mkstemp(tmpl);
    if (fd < 0) throw std::runtime_error("cannot create encoder input file");
    close(fd);
    std::filesystem::path input(tmpl);
    write_file(input, nlohmann::json(texts).dump());

    std::string cmd = command_ + " < '" + input.string() + "'";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) {
        std::filesystem::remove(input);
        throw std::runtime_error("cannot start encoder command");
    }
    std::string reply;
    char buf[4096];
    while (std::size_t n = fread(buf, 1, sizeof buf, pipe)) reply.append(buf, n);
    int status = pclose(pipe);
    std::filesystem::remove(input);
    if (status != 0) throw std::runtime_error("encoder command exited with status " + std::to_string(status));

    auto parsed = nlohmann::json::parse(reply, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array() || parsed.size() != texts.size())
        throw std::runtime_error("encoder output must be a JSON list with one vector per text");
    std::vector<std::vector<double>> out;
    for (const auto& row : parsed) {
        if (!row.is_array() || row.size() != dimension_)
            throw std::runtime_error("encoder returned a vector of the wrong dimension");
        std::vector<double> v;
        for (const auto& x : row) {
            if (!x.is_number()) throw std::runtime_error("encoder returned a non-numeric entry");
            v.push_back(x.get<double>());
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::unique_ptr<TextEncoder> make_encoder(const std::string& spec, std::size_t dimension) {
    if (spec == "hashing") return std::make_unique<HashingEncoder>(dimension);
    if (spec.rfind("command:", 0) == 0) return std::make_unique<ExternalCommandEncoder>(spec.substr(8), dimension);
    throw ConfigError("unknown encoder \"" + spec + "\"");
}

std::vector<double> component_embedding(const std::vector<EmbeddingItem>& items, TextEncoder& encoder) {
    const std::size_t d = encoder.dimension();
    std::vector<double> out(d, 0.0);
    if (items.empty()) return out;

    std::vector<std::string> texts;
    for (const auto& item : items) texts.push_back(item.text);
    std::vector<std::vector<double>> vecs;
    try {
        vecs = encoder.encode_batch(texts);
        if (vecs.size() != items.size()) throw std::runtime_error("wrong number of vectors");
    } catch (const std::exception& e) {
        std::string ids;
        for (const auto& item : items) ids += (ids.empty() ? "" : ", ") + item.node;
        throw std::runtime_error("encoding " + ids + " failed: " + e.what());
    }

    double total = 0.0;
    for (const auto& item : items) total += item.weight;
    const bool weighted = total > 0.0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        double w = weighted ? items[i].weight : 1.0;
        for (std::size_t k = 0; k < d; ++k) out[k] += w * vecs[i][k];
    }
    double denom = weighted ? total : static_cast<double>(items.size());
    for (double& x : out) x /= denom;
    return out;
}

std::array<int, 6> component_counts(const Belief& b) {
    auto active = [](const auto& collection) {
        int n = 0;
        for (const auto& [id, node] : collection)
            if (!node.retracted()) ++n;
        return n;
    };
    return {active(b.definitions), active(b.assumptions), active(b.evidence), active(b.claims),
            static_cast<int>(b.counterpositions.size()), static_cast<int>(b.uncertainties.size())};
}

std::vector<double> belief_embedding(const Belief& b, TextEncoder& encoder, double count_divisor) {
    if (!(count_divisor > 0.0)) throw std::invalid_argument("count divisor must be positive");
    std::vector<double> z;
    z.reserve(embedding_dimension(encoder.dimension()));
    auto append = [&](const std::vector<double>& v) { z.insert(z.end(), v.begin(), v.end()); };

    std::array<double, 4> avg{};
    auto weighted_block = [&](const auto& collection, auto&& text_of, std::size_t slot) {
        std::vector<EmbeddingItem> items;
        double sum = 0.0;
        for (const auto& [id, node] : collection) {
            if (node.retracted()) continue;
            items.push_back({id.str(), text_of(node), node.strength});
            sum += node.strength;
        }
        avg[slot] = items.empty() ? 0.0 : sum / static_cast<double>(items.size());
        append(component_embedding(items, encoder));
    };
    weighted_block(b.definitions, [](const DefinitionNode& n) { return n.term + " " + n.definition; }, 0);
    weighted_block(b.assumptions, [](const AssumptionNode& n) { return n.statement; }, 1);
    weighted_block(b.evidence, [](const EvidenceNode& n) { return n.summary; }, 2);
    weighted_block(b.claims, [](const ClaimNode& n) { return n.statement; }, 3);

    std::string thesis_text = b.thesis.stance;
    for (const auto& bullet : b.thesis.summary_bullets) thesis_text += " " + bullet;
    append(component_embedding({{"thesis", thesis_text, b.thesis.strength}}, encoder));

    std::vector<EmbeddingItem> open;
    for (const auto& [id, u] : b.uncertainties)
        if (u.status != UncertaintyStatus::Resolved) open.push_back({id.str(), u.question, 1.0});
    append(component_embedding(open, encoder));

    for (Sufficiency bucket : {Sufficiency::Partial, Sufficiency::Sufficient, Sufficiency::Unaddressed, Sufficiency::Moot}) {
        std::vector<EmbeddingItem> items;
        for (const auto& [id, x] : b.counterpositions)
            if (x.response_sufficiency == bucket) items.push_back({id.str(), x.statement, 1.0});
        append(component_embedding(items, encoder));
    }

    for (int c : component_counts(b)) z.push_back(static_cast<double>(c) / count_divisor);
    for (double a : avg) z.push_back(a);
    z.push_back(b.thesis.strength);
    return z;
}

std::string metrics_csv(const std::vector<MetricsRow>& rows) {
    std::string out =
        "round,agent,thesis_strength,aps,count_D,count_A,count_E,count_C,count_X,count_U,"
        "challenger_critique_valid,challenger_rebuttal_valid,challenger_unresolved,"
        "defender_critique_valid,defender_rebuttal_valid,defender_unresolved,degraded_events\n";
    for (const auto& r : rows) {
        out += fmt::format("{},{},{},{}", r.round, r.agent, fmt_double(r.thesis_strength),
                           r.aps ? fmt_double(*r.aps) : std::string());
        for (int c : r.counts) out += fmt::format(",{}", c);
        for (int c : r.as_challenger) out += fmt::format(",{}", c);
        for (int c : r.as_defender) out += fmt::format(",{}", c);
        out += fmt::format(",{}\n", r.degraded_events);
    }
    return out;
}

void export_metrics(const DebateArtifacts& a, const std::filesystem::path& dir, TextEncoder& encoder,
                    double count_divisor) {
    std::filesystem::create_directories(dir);
    write_file(dir / "metrics.csv", metrics_csv(a.metrics));

    std::string aps_csv = "round,agent,aps\n";
    for (const auto& r : a.metrics)
        if (r.round > 0) aps_csv += fmt::format("{},{},{}\n", r.round, r.agent, r.aps ? fmt_double(*r.aps) : "");
    write_file(dir / "aps.csv", aps_csv);

    // One row per agent with the verdicts it received as defender and obtained as challenger.
    std::string verdicts = "agent,role,critique_valid,rebuttal_valid,unresolved\n";
    std::string attacks = "agent,undermining,rebutting,undercutting,total\n";
    for (const auto& m : a.config.council) {
        std::array<int, 3> chal{}, def{};
        std::array<int, 3> types{};
        for (const auto& ex : a.transcript) {
            auto k = static_cast<std::size_t>(ex.verdict.kind);
            if (ex.challenge.challenger == m.id) chal[k]++;
            if (ex.challenge.defender == m.id) def[k]++;
        }
        // Attack types count every challenge issued, adjudicated or not.
        for (const auto& c : a.challenges)
            if (c.challenger == m.id) types[static_cast<std::size_t>(c.attack_type)]++;
        verdicts += fmt::format("{},challenger,{},{},{}\n", m.id, chal[0], chal[1], chal[2]);
        verdicts += fmt::format("{},defender,{},{},{}\n", m.id, def[0], def[1], def[2]);
        attacks += fmt::format("{},{},{},{},{}\n", m.id, types[0], types[1], types[2], types[0] + types[1] + types[2]);
    }
    write_file(dir / "verdicts.csv", verdicts);
    write_file(dir / "attack_histogram.csv", attacks);

    const std::size_t width = embedding_dimension(encoder.dimension());
    std::string emb = "agent,round";
    for (std::size_t k = 0; k < width; ++k) emb += fmt::format(",z{}", k);
    emb += "\n";
    for (const auto& m : a.config.council) {
        auto it = a.snapshots.find(m.id);
        if (it == a.snapshots.end()) continue;
        for (std::size_t r = 0; r < it->second.size(); ++r) {
            auto z = belief_embedding(it->second[r], encoder, count_divisor);
            emb += fmt::format("{},{}", m.id, r);
            for (double x : z) emb += "," + fmt::format("{:.8g}", x);
            emb += "\n";
        }
    }
    write_file(dir / "embeddings.csv", emb);
}

} // namespace chal
