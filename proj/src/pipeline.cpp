#include "chal/pipeline.hpp"

#include "chal/belief_io.hpp"
#include "chal/error.hpp"
#include "chal/graph.hpp"
#include "chal/llm.hpp"
#include "chal/prompt.hpp"
#include "chal/scripted.hpp"
#include "chal/value_systems.hpp"

#include <fmt/format.h>

#include <chrono>
#include <fstream>
#include <future>
#include <set>
#include <sstream>

namespace chal {

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- files

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    // Write then rename so a crash never leaves a truncated checkpoint.
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << text;
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path);
}

json read_json(const fs::path& path) {
    auto v = json::parse(read_text(path), nullptr, false);
    if (v.is_discarded()) throw IoError(path.string() + " is not valid JSON");
    return v;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

fs::path checkpoint_path(const fs::path& dir, int round, int stage) {
    return dir / "checkpoints" / fmt::format("r{}_s{}.json", round, stage);
}

fs::path snapshot_path(const fs::path& dir, const std::string& agent, int round) {
    return dir / "beliefs" / agent / fmt::format("round_{}.json", round);
}

// ---------------------------------------------------------------- config parsing

void check_keys(const json& v, std::initializer_list<std::string_view> allowed, std::string_view where) {
    for (const auto& [key, _] : v.items()) {
        bool ok = false;
        for (auto a : allowed) ok |= key == a;
        if (!ok) throw ConfigError(fmt::format("unknown key \"{}\" in {}", key, where));
    }
}

template <typename T>
T get_or(const json& v, const char* key, T fallback, std::string_view where) {
    if (!v.contains(key)) return fallback;
    try {
        return v.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError(fmt::format("\"{}\" in {} has the wrong type", key, where));
    }
}

fs::path resolve(const fs::path& base, const fs::path& p) {
    if (p.empty() || p.is_absolute() || base.empty()) return p;
    return fs::absolute(base / p).lexically_normal();
}

BackendConfig backend_from_json(const json& v, const fs::path& base, std::string_view where) {
    if (!v.is_object()) throw ConfigError(fmt::format("{} backend must be an object", where));
    check_keys(v, {"type", "scenario", "provider"}, where);
    BackendConfig b;
    b.type = get_or<std::string>(v, "type", "scripted", where);
    if (v.contains("scenario")) b.scenario = resolve(base, get_or<std::string>(v, "scenario", "", where));
    if (v.contains("provider")) b.provider = v["provider"];
    return b;
}

ojson backend_to_json(const BackendConfig& b) {
    ojson o;
    o["type"] = b.type;
    if (!b.scenario.empty()) o["scenario"] = b.scenario.string();
    if (b.type == "llm") o["provider"] = ChatProviderConfig::from_json(b.provider).to_json();
    return o;
}

void check_backend(const BackendConfig& b, std::string_view where) {
    if (b.type == "scripted") {
        if (b.scenario.empty()) throw ConfigError(fmt::format("{}: scripted backend requires \"scenario\"", where));
    } else if (b.type == "llm") {
        ChatProviderConfig::from_json(b.provider);
    } else {
        throw ConfigError(fmt::format("{}: unknown backend type \"{}\"", where, b.type));
    }
}

bool valid_agent_id(const std::string& id) {
    if (id.empty()) return false;
    for (unsigned char c : id)
        if (!std::isalnum(c) && c != '_' && c != '-') return false;
    return true;
}

// ---------------------------------------------------------------- parallel helper

// Runs fn(0..n-1) with at most `limit` calls in flight; results come back in index order.
template <typename F>
auto parallel_map(std::size_t n, int limit, F&& fn) {
    using R = decltype(fn(std::size_t{}));
    std::vector<R> out;
    out.reserve(n);
    if (limit <= 1) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(fn(i));
        return out;
    }
    for (std::size_t start = 0; start < n; start += static_cast<std::size_t>(limit)) {
        std::size_t end = std::min(n, start + static_cast<std::size_t>(limit));
        std::vector<std::future<R>> futures;
        for (std::size_t i = start; i < end; ++i) futures.push_back(std::async(std::launch::async, fn, i));
        for (auto& f : futures) out.push_back(f.get());
    }
    return out;
}

// ---------------------------------------------------------------- run state

struct RunState {
    DebateConfig config;
    fs::path dir;
    std::map<std::string, Belief> beliefs;  // current snapshot per agent
    std::map<std::string, std::vector<Belief>> snapshots;
    std::vector<Challenge> challenges;
    std::vector<Exchange> transcript;
    std::vector<RevisionRecord> revisions;
    std::vector<DebateEvent> events;
    // Current round, between stages 2 and 5.
    std::vector<Challenge> round_challenges;
    std::map<std::string, Rebuttal> round_rebuttals;
    int completed_rounds = 0;
};

struct Position {
    int round = 0;
    int stage = 1;  // next stage to run
};

Position next_position(Position p) {
    if (p.stage == 1) return {1, 2};
    if (p.stage == 5) return {p.round + 1, 2};
    return {p.round, p.stage + 1};
}

const std::string& persona_of(const DebateConfig& c, const std::string& agent) {
    for (const auto& m : c.council)
        if (m.id == agent) return m.persona;
    throw ConfigError("unknown agent " + agent);
}

ojson events_json(const std::vector<DebateEvent>& events) {
    ojson a = ojson::array();
    for (const auto& e : events) a.push_back(to_json(e));
    return a;
}

std::vector<DebateEvent> events_from(const json& v) {
    std::vector<DebateEvent> out;
    for (const auto& e : v.value("events", json::array())) out.push_back(debate_event_from_json(e));
    return out;
}

ojson beliefs_json(const std::map<std::string, Belief>& beliefs) {
    ojson o = ojson::object();
    for (const auto& [agent, b] : beliefs) o[agent] = encode_belief(b);
    return o;
}

// ---------------------------------------------------------------- metrics

std::vector<MetricsRow> compute_metrics(const RunState& s) {
    std::vector<MetricsRow> rows;
    for (int r = 0; r <= s.completed_rounds; ++r) {
        for (const auto& m : s.config.council) {
            auto it = s.snapshots.find(m.id);
            if (it == s.snapshots.end() || static_cast<int>(it->second.size()) <= r) continue;
            const Belief& b = it->second[static_cast<std::size_t>(r)];
            MetricsRow row;
            row.round = r;
            row.agent = m.id;
            row.thesis_strength = b.thesis.strength;
            row.counts = component_counts(b);
            if (r > 0) row.aps = aps(s.transcript, m.id, r, s.config.aps_table);
            for (const auto& ex : s.transcript) {
                if (ex.round != r) continue;
                auto k = static_cast<std::size_t>(ex.verdict.kind);
                if (ex.challenge.challenger == m.id) row.as_challenger[k]++;
                if (ex.challenge.defender == m.id) row.as_defender[k]++;
            }
            for (const auto& e : s.events)
                if (e.round == r && e.agent == m.id) row.degraded_events++;
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

DebateArtifacts artifacts_of(const RunState& s) {
    DebateArtifacts a;
    a.config = s.config;
    a.snapshots = s.snapshots;
    a.challenges = s.challenges;
    a.transcript = s.transcript;
    a.revisions = s.revisions;
    a.events = s.events;
    a.completed_rounds = s.completed_rounds;
    a.metrics = compute_metrics(s);
    return a;
}

void write_jsonl(const fs::path& path, const auto& items) {
    std::string text;
    for (const auto& item : items) text += to_json(item).dump() + "\n";
    write_text(path, text);
}

// Rewrites every derived output from the state; cheap, and keeps them consistent after a crash.
void persist_outputs(const RunState& s) {
    write_jsonl(s.dir / "transcript.jsonl", s.transcript);
    write_jsonl(s.dir / "revisions.jsonl", s.revisions);
    write_jsonl(s.dir / "events.jsonl", s.events);
    for (const auto& [agent, snaps] : s.snapshots)
        for (std::size_t r = 0; r < snaps.size(); ++r) {
            auto path = snapshot_path(s.dir, agent, static_cast<int>(r));
            std::string text = serialize_belief(snaps[r]);
            if (!fs::exists(path) || read_text(path) != text) write_text(path, text);
        }
    auto encoder = make_encoder(s.config.embedding.encoder, static_cast<std::size_t>(s.config.embedding.dimension));
    export_metrics(artifacts_of(s), s.dir, *encoder, s.config.embedding.count_divisor);
}

// ---------------------------------------------------------------- revision replay

struct Phase1Outcome {
    Belief belief;
    ChangeLog changelog;
    std::vector<PatchDisposition> dispositions;
    bool rolled_back = false;
};

Phase1Outcome apply_phase1_and_boosts(const Belief& previous, const RevisionRecord& rec, const StrengthParams& params) {
    Phase1Outcome out;
    auto r1 = apply_patches(previous, rec.phase1, false, params);
    out.belief = std::move(r1.belief_out);
    out.changelog = std::move(r1.changelog);
    out.dispositions = std::move(r1.dispositions);
    out.rolled_back = r1.rolled_back;
    for (const auto& targets : rec.boosts) {
        // Only live strength-bearing targets can be boosted; X/U or since-retracted ones are skipped.
        std::vector<NodeId> live;
        for (NodeId id : targets) {
            const StrengthFields* sn = out.belief.strength_node(id);
            if (sn && !sn->retracted() && std::find(live.begin(), live.end(), id) == live.end()) live.push_back(id);
        }
        if (live.empty()) continue;
        auto boosted = apply_defense_boosts(out.belief, live, params);
        out.belief = std::move(boosted.belief);
        out.changelog.insert(out.changelog.end(), boosted.changelog.begin(), boosted.changelog.end());
    }
    return out;
}

// ---------------------------------------------------------------- stages

void stage_openings(RunState& s, const Backends& backends) {
    const auto& cfg = s.config;
    struct Result {
        Belief belief;
    };
    auto results = parallel_map(cfg.council.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& m = cfg.council[i];
        json doc;
        if (m.belief_file) {
            doc = read_json(*m.belief_file);
        } else {
            try {
                doc = backends.council.at(m.id)->generate_opening({m.id, m.persona, cfg.topic});
            } catch (const Error& e) {
                throw BackendError("opening for " + m.id + " failed: " + e.what());
            }
        }
        auto parsed = parse_belief(doc);
        if (!parsed.ok())
            throw BackendError("opening belief for " + m.id + " is invalid:\n" + parsed.report.to_text());
        return Result{std::move(parsed.belief)};
    });

    StrengthParams params = cfg.strength;
    for (std::size_t i = 0; i < cfg.council.size(); ++i) {
        Belief b = std::move(results[i].belief);
        if (cfg.breadth_exponent) b.breadth_exponent = *cfg.breadth_exponent;
        b = enforce_constraints(b, params).belief;
        for (NodeKind kind : {NodeKind::Definition, NodeKind::Assumption, NodeKind::Evidence, NodeKind::Claim})
            for (NodeId id : b.ids(kind)) {
                StrengthFields* sn = b.strength_node(id);
                sn->original_strength = sn->strength;
                sn->consecutive_defenses = 0;
            }
        b = canonicalize(b);
        s.beliefs[cfg.council[i].id] = b;
        s.snapshots[cfg.council[i].id] = {b};
    }
}

std::vector<DebateEvent> stage_challenges(RunState& s, int round, const Backends& backends) {
    const auto& cfg = s.config;
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& a : cfg.council)
        for (const auto& b : cfg.council)
            if (a.id != b.id) pairs.emplace_back(a.id, b.id);

    struct Result {
        std::vector<Challenge> challenges;
        std::vector<DebateEvent> events;
    };
    auto results = parallel_map(pairs.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& [challenger, defender] = pairs[i];
        Result res;
        ChallengeRequest req;
        req.round = round;
        req.challenger = challenger;
        req.defender = defender;
        req.persona = persona_of(cfg, challenger);
        req.topic = cfg.topic;
        req.own = s.beliefs.at(challenger);
        req.opponent = s.beliefs.at(defender);
        req.vulnerabilities = vulnerability_report(req.opponent, cfg.vulnerability_threshold);
        for (const auto& ex : s.transcript)
            if (ex.challenge.challenger == challenger && ex.challenge.defender == defender) req.prior.push_back(ex);
        req.max_challenges = cfg.challenges_per_pair;

        std::vector<ChallengeDraft> drafts;
        try {
            drafts = backends.council.at(challenger)->generate_challenges(req);
        } catch (const Error& e) {
            res.events.push_back({round, 2, challenger, "no_challenges", fmt::format("against {}: {}", defender, e.what())});
            return res;
        }
        if (static_cast<int>(drafts.size()) > cfg.challenges_per_pair) {
            res.events.push_back({round, 2, challenger, "challenges_truncated",
                                  fmt::format("against {}: {} drafts, kept {}", defender, drafts.size(),
                                              cfg.challenges_per_pair)});
            drafts.resize(static_cast<std::size_t>(cfg.challenges_per_pair));
        }
        for (std::size_t k = 0; k < drafts.size(); ++k) {
            Challenge c;
            c.round = round;
            c.challenger = challenger;
            c.defender = defender;
            c.index = static_cast<int>(k) + 1;
            c.id = challenge_id(round, challenger, defender, c.index);
            c.text = drafts[k].text;
            c.targets = drafts[k].targets;
            c.attack_type = drafts[k].attack_type;
            c.attack_strategy = drafts[k].attack_strategy;
            auto problems = validate_challenge(c, req.opponent);
            if (!problems.empty()) {
                std::string detail = c.id + ":";
                for (const auto& p : problems) detail += " " + p + ";";
                res.events.push_back({round, 2, challenger, "challenge_rejected", detail});
                continue;
            }
            res.challenges.push_back(std::move(c));
        }
        return res;
    });

    std::vector<DebateEvent> events;
    s.round_challenges.clear();
    for (auto& r : results) {
        for (auto& c : r.challenges) s.round_challenges.push_back(std::move(c));
        for (auto& e : r.events) events.push_back(std::move(e));
    }
    return events;
}

Rebuttal deferral(const std::string& challenge_id, std::string text) {
    Rebuttal r;
    r.challenge_id = challenge_id;
    r.action = RebuttalAction::Defer;
    r.text = std::move(text);
    return r;
}

std::vector<DebateEvent> stage_rebuttals(RunState& s, int round, const Backends& backends) {
    const auto& cfg = s.config;
    struct Result {
        std::vector<Rebuttal> rebuttals;
        std::vector<DebateEvent> events;
    };
    auto results = parallel_map(cfg.council.size(), cfg.parallelism, [&](std::size_t i) {
        const auto& defender = cfg.council[i].id;
        Result res;
        RebuttalRequest req;
        req.round = round;
        req.defender = defender;
        req.persona = cfg.council[i].persona;
        req.topic = cfg.topic;
        req.own = s.beliefs.at(defender);
        for (const auto& c : s.round_challenges)
            if (c.defender == defender) req.challenges.push_back(c);
        if (req.challenges.empty()) return res;

        std::vector<Rebuttal> produced;
        try {
            produced = backends.council.at(defender)->generate_rebuttals(req);
        } catch (const Error& e) {
            res.events.push_back({round, 3, defender, "rebuttals_failed", e.what()});
        }
        std::map<std::string, Rebuttal> by_id;
        for (auto& r : produced) {
            bool known = std::any_of(req.challenges.begin(), req.challenges.end(),
                                     [&](const Challenge& c) { return c.id == r.challenge_id; });
            if (!known) {
                res.events.push_back({round, 3, defender, "rebuttal_unknown_challenge", r.challenge_id});
                continue;
            }
            if (by_id.count(r.challenge_id)) {
                res.events.push_back({round, 3, defender, "rebuttal_duplicate", r.challenge_id});
                continue;
            }
            by_id.emplace(r.challenge_id, std::move(r));
        }
        for (const auto& c : req.challenges) {
            auto it = by_id.find(c.id);
            if (it == by_id.end()) {
                if (!produced.empty()) res.events.push_back({round, 3, defender, "rebuttal_missing", c.id});
                res.rebuttals.push_back(deferral(c.id, "No rebuttal was produced."));
                continue;
            }
            auto problems = validate_rebuttal(it->second, req.own);
            if (!problems.empty()) {
                std::string detail = c.id + ":";
                for (const auto& p : problems) detail += " " + p + ";";
                res.events.push_back({round, 3, defender, "rebuttal_invalid", detail});
                res.rebuttals.push_back(deferral(c.id, it->second.text));
                continue;
            }
            res.rebuttals.push_back(std::move(it->second));
        }
        return res;
    });

    std::vector<DebateEvent> events;
    s.round_rebuttals.clear();
    for (auto& r : results) {
        for (auto& rb : r.rebuttals) s.round_rebuttals[rb.challenge_id] = std::move(rb);
        for (auto& e : r.events) events.push_back(std::move(e));
    }
    return events;
}

std::pair<std::vector<Exchange>, std::vector<DebateEvent>> stage_adjudication(const RunState& s, int round,
                                                                              const Backends& backends) {
    const auto& cfg = s.config;
    struct Result {
        std::optional<Exchange> exchange;
        std::vector<DebateEvent> events;
    };
    auto results = parallel_map(s.round_challenges.size(), cfg.parallelism, [&](std::size_t i) {
        const Challenge& c = s.round_challenges[i];
        Result res;
        const Rebuttal& rb = s.round_rebuttals.at(c.id);
        const Belief& challenger_belief = s.beliefs.at(c.challenger);
        std::vector<NodeId> claims;
        for (const auto& [id, node] : challenger_belief.claims)
            if (!node.retracted()) claims.push_back(id);

        ScoreRequest req;
        req.round = round;
        req.challenge = c;
        req.rebuttal = rb;
        req.challenger_excerpt = belief_excerpt(challenger_belief, claims);
        req.defender_excerpt = belief_excerpt(s.beliefs.at(c.defender), c.targets);
        req.params = cfg.adjudicator;
        try {
            auto scored = backends.adjudicator->score_pair(req);
            Exchange ex;
            ex.round = round;
            ex.challenge = c;
            ex.rebuttal = rb;
            ex.verdict = adjudicate(scored.scores, scored.reasoning, cfg.adjudicator, rb.action,
                                    cfg.concession_forces_critique);
            res.exchange = std::move(ex);
        } catch (const std::exception& e) {
            res.events.push_back({round, 4, "adjudicator", "adjudication_failed", c.id + ": " + e.what()});
        }
        return res;
    });
    std::vector<Exchange> exchanges;
    std::vector<DebateEvent> events;
    for (auto& r : results) {
        if (r.exchange) exchanges.push_back(std::move(*r.exchange));
        for (auto& e : r.events) events.push_back(std::move(e));
    }
    return {std::move(exchanges), std::move(events)};
}

std::vector<Patch> applied_subset(const std::vector<Patch>& patches, const std::vector<PatchDisposition>& dispositions) {
    std::vector<Patch> out;
    for (const auto& d : dispositions)
        if (d.applied && d.index < patches.size()) out.push_back(patches[d.index]);
    return out;
}

std::pair<RevisionRecord, std::vector<DebateEvent>> revise_agent(const RunState& s, const CouncilMember& member,
                                                                 int round, const Backends& backends) {
    const auto& cfg = s.config;
    const Belief& previous = s.beliefs.at(member.id);
    CouncilBackend& backend = *backends.council.at(member.id);
    std::vector<DebateEvent> events;
    RevisionRecord rec;
    rec.round = round;
    rec.agent = member.id;

    std::vector<Exchange> defended;
    for (const auto& ex : s.transcript)
        if (ex.round == round && ex.challenge.defender == member.id) defended.push_back(ex);
    ObligationSet obligations = enforcement_obligations(defended, member.id, previous);
    for (const auto& b : obligations.boost) rec.boosts.push_back(b.targets);

    ComplianceReport compliance;
    if (!obligations.weaken.empty() || !obligations.uncertainty.empty()) {
        Phase1Request req;
        req.round = round;
        req.agent = member.id;
        req.persona = member.persona;
        req.topic = cfg.topic;
        req.belief = previous;
        req.exchanges = defended;
        req.obligations = obligations;

        std::vector<Patch> patches;
        bool engine = false;
        try {
            patches = backend.revise_phase1(req);
            auto report = check_obligations(obligations, patches, previous);
            if (!report.all_satisfied()) {
                req.attempt = 2;
                req.previous = report;
                try {
                    patches = backend.revise_phase1(req);
                } catch (const Error& e) {
                    events.push_back({round, 5, member.id, "phase1_retry_failed", e.what()});
                }
                report = check_obligations(obligations, patches, previous);
                if (!report.all_satisfied()) {
                    auto extra = synthesize_obligation_patches(obligations, previous, &report);
                    patches.insert(patches.end(), extra.begin(), extra.end());
                    events.push_back({round, 5, member.id, "engine_enforced", report.to_text()});
                    engine = true;
                }
            }
        } catch (const Error& e) {
            events.push_back({round, 5, member.id, "phase1_failed", e.what()});
            patches = synthesize_obligation_patches(obligations, previous);
            events.push_back({round, 5, member.id, "engine_enforced", "all obligations synthesized"});
            engine = true;
        }

        // Obligations count only through patches that actually apply.
        auto trial = apply_patches(previous, patches, false, cfg.strength);
        if (trial.rolled_back) {
            events.push_back({round, 5, member.id, "phase1_rolled_back", trial.final_report.to_text()});
            patches = synthesize_obligation_patches(obligations, previous);
            trial = apply_patches(previous, patches, false, cfg.strength);
            engine = true;
        }
        auto applied = applied_subset(patches, trial.dispositions);
        auto report = check_obligations(obligations, applied, previous);
        if (!report.all_satisfied() && !trial.rolled_back) {
            auto extra = synthesize_obligation_patches(obligations, previous, &report);
            if (!extra.empty()) {
                patches.insert(patches.end(), extra.begin(), extra.end());
                if (!engine) events.push_back({round, 5, member.id, "engine_enforced", report.to_text()});
                trial = apply_patches(previous, patches, false, cfg.strength);
                applied = applied_subset(patches, trial.dispositions);
            }
        }
        compliance = check_obligations(obligations, applied, previous);
        rec.phase1 = std::move(patches);
        rec.compliance = compliance;
    }

    // Phase 2 sees the belief after mandatory patches and boosts.
    auto intermediate = apply_phase1_and_boosts(previous, rec, cfg.strength).belief;
    Phase2Request req2;
    req2.round = round;
    req2.agent = member.id;
    req2.persona = member.persona;
    req2.topic = cfg.topic;
    req2.belief = intermediate;
    req2.analysis = position_analysis(intermediate, cfg.strength, cfg.raise_increment, cfg.add_above_delta);
    req2.compliance = compliance;
    try {
        auto response = backend.revise_phase2(req2);
        rec.phase2 = std::move(response.patches);
        rec.stance = std::move(response.stance);
        rec.summary_bullets = std::move(response.summary_bullets);
    } catch (const Error& e) {
        events.push_back({round, 5, member.id, "phase2_failed", e.what()});
    }

    auto outcome = replay_revision(previous, rec, cfg.strength);
    if (outcome.phase2_rolled_back) events.push_back({round, 5, member.id, "phase2_rolled_back", ""});
    rec.changelog = std::move(outcome.changelog);
    rec.phase1_dispositions = std::move(outcome.phase1_dispositions);
    rec.phase2_dispositions = std::move(outcome.phase2_dispositions);
    rec.phase1_rolled_back = outcome.phase1_rolled_back;
    rec.phase2_rolled_back = outcome.phase2_rolled_back;
    return {std::move(rec), std::move(events)};
}

// ---------------------------------------------------------------- checkpoints

void checkpoint(const RunState& s, int round, int stage, ojson body) {
    body["round"] = round;
    body["stage"] = stage;
    write_text(checkpoint_path(s.dir, round, stage), body.dump(2) + "\n");
}

// Applies one checkpoint to the state; used both after running a stage and when restoring.
void absorb(RunState& s, int round, int stage, const json& body, bool verify) {
    auto events = events_from(body);
    try {
        switch (stage) {
        case 1: {
            for (const auto& m : s.config.council) {
                if (!body["beliefs"].contains(m.id))
                    throw CheckpointError("inconsistent checkpoint: opening belief for " + m.id + " missing");
                Belief b = decode_belief(body["beliefs"][m.id]).belief;
                s.beliefs[m.id] = b;
                s.snapshots[m.id] = {b};
            }
            break;
        }
        case 2:
            s.round_challenges.clear();
            for (const auto& c : body.at("challenges")) s.round_challenges.push_back(challenge_from_json(c));
            s.round_rebuttals.clear();
            break;
        case 3:
            s.round_rebuttals.clear();
            for (const auto& r : body.at("rebuttals")) {
                auto rb = rebuttal_from_json(r);
                s.round_rebuttals[rb.challenge_id] = std::move(rb);
            }
            break;
        case 4:
            for (const auto& c : s.round_challenges) s.challenges.push_back(c);
            for (const auto& e : body.at("exchanges")) s.transcript.push_back(exchange_from_json(e));
            break;
        case 5: {
            std::map<std::string, Belief> next;
            for (const auto& rj : body.at("revisions")) {
                auto rec = revision_record_from_json(rj);
                const Belief& prev = s.beliefs.at(rec.agent);
                Belief stored = decode_belief(body["beliefs"].at(rec.agent)).belief;
                // Outcomes are not trusted from the file; replay recomputes them.
                auto outcome = replay_revision(prev, rec, s.config.strength);
                if (verify && serialize_belief(outcome.belief) != serialize_belief(stored))
                    throw CheckpointError(fmt::format(
                        "inconsistent checkpoint: replaying round {} for {} does not reproduce its snapshot", round,
                        rec.agent));
                rec.changelog = std::move(outcome.changelog);
                rec.phase1_dispositions = std::move(outcome.phase1_dispositions);
                rec.phase2_dispositions = std::move(outcome.phase2_dispositions);
                rec.phase1_rolled_back = outcome.phase1_rolled_back;
                rec.phase2_rolled_back = outcome.phase2_rolled_back;
                next[rec.agent] = std::move(stored);
                s.revisions.push_back(std::move(rec));
            }
            for (const auto& m : s.config.council) {
                if (!next.count(m.id))
                    throw CheckpointError(fmt::format("inconsistent checkpoint: round {} revision for {} missing", round, m.id));
                s.beliefs[m.id] = next[m.id];
                s.snapshots[m.id].push_back(next[m.id]);
            }
            s.round_challenges.clear();
            s.round_rebuttals.clear();
            s.completed_rounds = round;
            break;
        }
        default: throw CheckpointError("inconsistent checkpoint: unknown stage");
        }
    } catch (const CheckpointError&) {
        throw;
    } catch (const std::exception& e) {
        throw CheckpointError(fmt::format("inconsistent checkpoint r{}_s{}: {}", round, stage, e.what()));
    }
    for (auto& e : events) s.events.push_back(std::move(e));
}

// Runs the stage at `pos`, checkpoints it and folds its result into the state.
void run_stage(RunState& s, Position pos, const Backends& backends) {
    ojson body;
    switch (pos.stage) {
    case 1: {
        RunState scratch = s;
        stage_openings(scratch, backends);
        body["beliefs"] = beliefs_json(scratch.beliefs);
        body["events"] = ojson::array();
        break;
    }
    case 2: {
        RunState scratch = s;
        auto events = stage_challenges(scratch, pos.round, backends);
        ojson list = ojson::array();
        for (const auto& c : scratch.round_challenges) list.push_back(to_json(c));
        body["challenges"] = std::move(list);
        body["events"] = events_json(events);
        break;
    }
    case 3: {
        RunState scratch = s;
        auto events = stage_rebuttals(scratch, pos.round, backends);
        ojson list = ojson::array();
        for (const auto& c : s.round_challenges) list.push_back(to_json(scratch.round_rebuttals.at(c.id)));
        body["rebuttals"] = std::move(list);
        body["events"] = events_json(events);
        break;
    }
    case 4: {
        auto [exchanges, events] = stage_adjudication(s, pos.round, backends);
        ojson list = ojson::array();
        for (const auto& ex : exchanges) list.push_back(to_json(ex));
        body["exchanges"] = std::move(list);
        body["events"] = events_json(events);
        break;
    }
    case 5: {
        // Serialized per agent; each revision reads only the agent's own previous snapshot.
        ojson revisions = ojson::array();
        ojson beliefs = ojson::object();
        std::vector<DebateEvent> events;
        for (const auto& m : s.config.council) {
            auto [rec, ev] = revise_agent(s, m, pos.round, backends);
            auto outcome = replay_revision(s.beliefs.at(m.id), rec, s.config.strength);
            beliefs[m.id] = encode_belief(outcome.belief);
            revisions.push_back(to_json(rec));
            events.insert(events.end(), ev.begin(), ev.end());
        }
        body["revisions"] = std::move(revisions);
        body["beliefs"] = std::move(beliefs);
        body["events"] = events_json(events);
        break;
    }
    }
    checkpoint(s, pos.round, pos.stage, body);
    // Reload through JSON so a fresh run and a resumed run hold identical state.
    absorb(s, pos.round, pos.stage, json::parse(body.dump()), false);
    persist_outputs(s);
}

DebateArtifacts drive(RunState& s, Position pos, const Backends& backends, const StopAfter& stop_after) {
    auto started = std::chrono::steady_clock::now();
    while (!(pos.stage != 1 && pos.round > s.config.rounds)) {
        run_stage(s, pos, backends);
        Position done = pos;
        pos = next_position(pos);
        if (stop_after && stop_after(done.round, done.stage)) break;
    }
    double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

    ojson meta;
    meta["config_hash"] = fmt::format("{:016x}", fnv1a(read_text(s.dir / "config.snapshot")));
    meta["seed"] = s.config.seed;
    meta["rounds_completed"] = s.completed_rounds;
    meta["complete"] = s.completed_rounds == s.config.rounds && s.snapshots.size() == s.config.council.size();
    meta["exchanges"] = s.transcript.size();
    meta["challenges"] = s.challenges.size();
    meta["degraded_events"] = s.events.size();
    meta["elapsed_seconds"] = seconds;
    meta["token_counts"] = nullptr;  // not reported by the backends
    write_text(s.dir / "run_meta.json", meta.dump(2) + "\n");
    return artifacts_of(s);
}

// Rebuilds the state from the checkpoints; returns the first stage that has not run.
Position restore(RunState& s) {
    Position pos{0, 1};
    std::set<fs::path> used;
    while (!(pos.stage != 1 && pos.round > s.config.rounds)) {
        auto path = checkpoint_path(s.dir, pos.round, pos.stage);
        if (!fs::exists(path)) break;
        json body;
        try {
            body = read_json(path);
        } catch (const IoError& e) {
            throw CheckpointError(std::string("inconsistent checkpoint: ") + e.what());
        }
        absorb(s, pos.round, pos.stage, body, true);
        used.insert(path);
        pos = next_position(pos);
    }
    if (fs::exists(s.dir / "checkpoints"))
        for (const auto& entry : fs::directory_iterator(s.dir / "checkpoints"))
            if (entry.path().extension() == ".json" && !used.count(entry.path()))
                throw CheckpointError("inconsistent checkpoint: " + entry.path().filename().string() +
                                      " follows a missing stage");
    for (const auto& [agent, snaps] : s.snapshots)
        for (std::size_t r = 0; r < snaps.size(); ++r) {
            auto path = snapshot_path(s.dir, agent, static_cast<int>(r));
            if (!fs::exists(path))
                throw CheckpointError("inconsistent checkpoint: missing snapshot " +
                                      fs::relative(path, s.dir).string());
            if (read_text(path) != serialize_belief(snaps[r]))
                throw CheckpointError("inconsistent checkpoint: snapshot " + fs::relative(path, s.dir).string() +
                                      " differs from its checkpoint");
        }
    return pos;
}

RunState load_state(const fs::path& dir) {
    if (!fs::exists(dir / "config.snapshot")) throw CheckpointError("inconsistent checkpoint: config.snapshot missing");
    RunState s;
    try {
        s.config = DebateConfig::from_json(read_json(dir / "config.snapshot"));
        s.config.validate();
    } catch (const ConfigError& e) {
        throw CheckpointError(std::string("inconsistent checkpoint: ") + e.what());
    }
    s.config.output_dir = dir;
    s.dir = dir;
    return s;
}

} // namespace

// ---------------------------------------------------------------- config

void DebateConfig::validate() const {
    if (council.size() < 2) throw ConfigError("council needs at least two members");
    std::set<std::string> ids;
    const Registries& reg = bundled_registry();
    for (const auto& m : council) {
        if (!valid_agent_id(m.id))
            throw ConfigError("agent id \"" + m.id + "\" must be non-empty letters, digits, '_' or '-'");
        if (!ids.insert(m.id).second) throw ConfigError("duplicate agent id " + m.id);
        try {
            reg.persona(m.persona);
        } catch (const RegistryError& e) {
            throw ConfigError(e.what());
        }
        if (!m.belief_file) check_backend(m.backend, "council member " + m.id);
        else if (!m.backend.type.empty() && m.backend.type != "scripted" && m.backend.type != "llm")
            throw ConfigError("council member " + m.id + ": unknown backend type \"" + m.backend.type + "\"");
    }
    if (rounds < 0) throw ConfigError("rounds must be non-negative");
    if (challenges_per_pair < 1) throw ConfigError("challenges_per_pair must be positive");
    if (parallelism < 1) throw ConfigError("parallelism must be positive");
    try {
        adjudicator.validate();
        strength.validate();
        reg.logic_system(adjudicator.logic_system);
        reg.ethics_system(adjudicator.ethics_system);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (breadth_exponent && !(*breadth_exponent > 0.0)) throw ConfigError("breadth exponent p must be positive");
    if (rounds > 0) check_backend(adjudicator_backend, "adjudicator");
    if (embedding.dimension < 1) throw ConfigError("embedding dimension must be positive");
    if (!(embedding.count_divisor > 0.0)) throw ConfigError("embedding count_divisor must be positive");
    if (embedding.encoder != "hashing" && embedding.encoder.rfind("command:", 0) != 0)
        throw ConfigError("unknown encoder \"" + embedding.encoder + "\"");
    if (!(vulnerability_threshold >= 0.0 && vulnerability_threshold <= 1.0))
        throw ConfigError("vulnerability_threshold must lie in [0,1]");
    if (output_dir.empty()) throw ConfigError("output_dir is empty");
}

DebateConfig DebateConfig::from_json(const json& v, const fs::path& base) {
    if (!v.is_object()) throw ConfigError("config must be an object");
    check_keys(v,
               {"topic", "rounds", "challenges_per_pair", "council", "adjudicator", "strength",
                "concession_forces_critique", "parallelism", "output_dir", "seed", "vulnerability_threshold",
                "raise_increment", "add_above_delta", "embedding", "aps_table", "prompt_budget_tokens"},
               "config");
    DebateConfig c;
    const std::string where = "config";
    if (!v.contains("topic") || !v["topic"].is_string()) throw ConfigError("config requires a string \"topic\"");
    c.topic = v["topic"].get<std::string>();
    c.rounds = get_or<int>(v, "rounds", 1, where);
    c.challenges_per_pair = get_or<int>(v, "challenges_per_pair", 1, where);
    if (!v.contains("council") || !v["council"].is_array()) throw ConfigError("config requires a \"council\" list");
    for (const auto& mj : v["council"]) {
        if (!mj.is_object()) throw ConfigError("council entries must be objects");
        check_keys(mj, {"id", "persona", "backend", "belief_file"}, "council member");
        CouncilMember m;
        m.id = get_or<std::string>(mj, "id", "", "council member");
        m.persona = get_or<std::string>(mj, "persona", "", "council member");
        if (mj.contains("backend")) m.backend = backend_from_json(mj["backend"], base, "council member " + m.id);
        if (mj.contains("belief_file"))
            m.belief_file = resolve(base, get_or<std::string>(mj, "belief_file", "", "council member"));
        c.council.push_back(std::move(m));
    }
    if (v.contains("adjudicator")) {
        const auto& aj = v["adjudicator"];
        if (!aj.is_object()) throw ConfigError("\"adjudicator\" must be an object");
        check_keys(aj, {"params", "backend"}, "adjudicator");
        if (aj.contains("params")) {
            try {
                c.adjudicator = adjudicator_params_from_json(aj["params"]);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("adjudicator params: ") + e.what());
            }
        }
        if (aj.contains("backend")) c.adjudicator_backend = backend_from_json(aj["backend"], base, "adjudicator");
    }
    if (v.contains("strength")) {
        const auto& sj = v["strength"];
        if (!sj.is_object()) throw ConfigError("\"strength\" must be an object");
        check_keys(sj, {"p", "s_orph", "boost_b", "boost_cmax"}, "strength");
        if (sj.contains("p")) {
            c.breadth_exponent = get_or<double>(sj, "p", 1.0, "strength");
            c.strength.p = *c.breadth_exponent;
        }
        c.strength.s_orph = get_or<double>(sj, "s_orph", c.strength.s_orph, "strength");
        c.strength.boost_b = get_or<double>(sj, "boost_b", c.strength.boost_b, "strength");
        c.strength.boost_cmax = get_or<double>(sj, "boost_cmax", c.strength.boost_cmax, "strength");
    }
    c.concession_forces_critique = get_or<bool>(v, "concession_forces_critique", true, where);
    c.parallelism = get_or<int>(v, "parallelism", 1, where);
    c.output_dir = resolve(base, get_or<std::string>(v, "output_dir", "chal_run", where));
    c.seed = get_or<std::uint64_t>(v, "seed", 0, where);
    c.vulnerability_threshold = get_or<double>(v, "vulnerability_threshold", 0.5, where);
    c.raise_increment = get_or<double>(v, "raise_increment", 0.05, where);
    c.add_above_delta = get_or<double>(v, "add_above_delta", 0.10, where);
    if (v.contains("embedding")) {
        const auto& ej = v["embedding"];
        if (!ej.is_object()) throw ConfigError("\"embedding\" must be an object");
        check_keys(ej, {"encoder", "dimension", "count_divisor"}, "embedding");
        c.embedding.encoder = get_or<std::string>(ej, "encoder", "hashing", "embedding");
        c.embedding.dimension = get_or<int>(ej, "dimension", 8, "embedding");
        c.embedding.count_divisor = get_or<double>(ej, "count_divisor", 50.0, "embedding");
    }
    if (v.contains("aps_table")) c.aps_table = ApsTable::from_json(v["aps_table"]);
    c.prompt_budget_tokens = get_or<std::size_t>(v, "prompt_budget_tokens", 24000, where);
    return c;
}

ojson DebateConfig::to_json() const {
    ojson o;
    o["topic"] = topic;
    o["rounds"] = rounds;
    o["challenges_per_pair"] = challenges_per_pair;
    ojson members = ojson::array();
    for (const auto& m : council) {
        ojson mj;
        mj["id"] = m.id;
        mj["persona"] = m.persona;
        mj["backend"] = backend_to_json(m.backend);
        if (m.belief_file) mj["belief_file"] = m.belief_file->string();
        members.push_back(std::move(mj));
    }
    o["council"] = std::move(members);
    o["adjudicator"] = {{"params", chal::to_json(adjudicator)}, {"backend", backend_to_json(adjudicator_backend)}};
    ojson sj;
    if (breadth_exponent) sj["p"] = *breadth_exponent;
    sj["s_orph"] = strength.s_orph;
    sj["boost_b"] = strength.boost_b;
    sj["boost_cmax"] = strength.boost_cmax;
    o["strength"] = std::move(sj);
    o["concession_forces_critique"] = concession_forces_critique;
    o["parallelism"] = parallelism;
    o["output_dir"] = output_dir.string();
    o["seed"] = seed;
    o["vulnerability_threshold"] = vulnerability_threshold;
    o["raise_increment"] = raise_increment;
    o["add_above_delta"] = add_above_delta;
    o["embedding"] = {{"encoder", embedding.encoder}, {"dimension", embedding.dimension},
                      {"count_divisor", embedding.count_divisor}};
    o["aps_table"] = aps_table.to_json();
    o["prompt_budget_tokens"] = prompt_budget_tokens;
    return o;
}

DebateConfig DebateConfig::load(const fs::path& path) {
    json v;
    try {
        v = read_json(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    auto c = from_json(v, fs::absolute(path).parent_path());
    c.validate();
    return c;
}

Backends make_backends(const DebateConfig& config) {
    Backends out;
    std::map<fs::path, std::shared_ptr<ScriptedBackend>> scripted;
    auto scripted_for = [&](const fs::path& scenario) {
        auto it = scripted.find(scenario);
        if (it != scripted.end()) return it->second;
        auto b = std::make_shared<ScriptedBackend>(ScriptedScenario::load(scenario));
        scripted.emplace(scenario, b);
        return b;
    };
    auto llm_for = [&](const BackendConfig& bc) {
        auto pc = ChatProviderConfig::from_json(bc.provider);
        return std::make_shared<LlmBackend>(std::make_shared<HttpChatProvider>(pc), bundled_registry(), pc.max_retries,
                                            config.prompt_budget_tokens);
    };
    for (const auto& m : config.council) {
        if (m.backend.type == "llm") out.council[m.id] = llm_for(m.backend);
        else if (!m.backend.scenario.empty()) out.council[m.id] = scripted_for(m.backend.scenario);
        else out.council[m.id] = std::make_shared<ScriptedBackend>(ScriptedScenario());
    }
    if (config.adjudicator_backend.type == "llm") out.adjudicator = llm_for(config.adjudicator_backend);
    else if (!config.adjudicator_backend.scenario.empty()) out.adjudicator = scripted_for(config.adjudicator_backend.scenario);
    else out.adjudicator = std::make_shared<ScriptedBackend>(ScriptedScenario());
    return out;
}

// ---------------------------------------------------------------- records

ojson to_json(const DebateEvent& e) {
    ojson o;
    o["round"] = e.round;
    o["stage"] = e.stage;
    o["agent"] = e.agent;
    o["kind"] = e.kind;
    o["detail"] = e.detail;
    return o;
}

DebateEvent debate_event_from_json(const json& v) {
    DebateEvent e;
    e.round = v.at("round").get<int>();
    e.stage = v.at("stage").get<int>();
    e.agent = v.at("agent").get<std::string>();
    e.kind = v.at("kind").get<std::string>();
    e.detail = v.value("detail", "");
    return e;
}

ojson to_json(const RevisionRecord& r) {
    ojson o;
    o["round"] = r.round;
    o["agent"] = r.agent;
    auto patches = [](const std::vector<Patch>& list) {
        ojson a = ojson::array();
        for (const auto& p : list) a.push_back(to_json(p));
        return a;
    };
    o["phase1"] = patches(r.phase1);
    ojson boosts = ojson::array();
    for (const auto& b : r.boosts) boosts.push_back(encode_ids(b));
    o["boosts"] = std::move(boosts);
    o["phase2"] = patches(r.phase2);
    if (r.stance) o["stance"] = *r.stance;
    if (r.summary_bullets) o["summary_bullets"] = *r.summary_bullets;
    ojson log = ojson::array();
    for (const auto& e : r.changelog) log.push_back(to_json(e));
    o["changelog"] = std::move(log);
    auto dispositions = [](const std::vector<PatchDisposition>& list) {
        ojson a = ojson::array();
        for (const auto& d : list) a.push_back(to_json(d));
        return a;
    };
    o["phase1_dispositions"] = dispositions(r.phase1_dispositions);
    o["phase2_dispositions"] = dispositions(r.phase2_dispositions);
    o["phase1_rolled_back"] = r.phase1_rolled_back;
    o["phase2_rolled_back"] = r.phase2_rolled_back;
    if (r.compliance) o["compliance"] = to_json(*r.compliance);
    return o;
}

RevisionRecord revision_record_from_json(const json& v) {
    RevisionRecord r;
    r.round = v.at("round").get<int>();
    r.agent = v.at("agent").get<std::string>();
    auto patches = [](const json& list) {
        std::vector<Patch> out;
        for (const auto& pj : list) {
            std::string error;
            auto p = patch_from_json(pj, &error);
            if (!p) throw std::invalid_argument("patch: " + error);
            out.push_back(std::move(*p));
        }
        return out;
    };
    r.phase1 = patches(v.at("phase1"));
    for (const auto& b : v.at("boosts")) {
        std::vector<NodeId> ids;
        std::string error;
        if (!decode_ids(b, ids, error)) throw std::invalid_argument("boost targets: " + error);
        r.boosts.push_back(std::move(ids));
    }
    r.phase2 = patches(v.at("phase2"));
    if (v.contains("stance")) r.stance = v["stance"].get<std::string>();
    if (v.contains("summary_bullets")) r.summary_bullets = v["summary_bullets"].get<std::vector<std::string>>();
    if (v.contains("compliance")) r.compliance = compliance_report_from_json(v["compliance"]);
    return r;
}

RevisionOutcome replay_revision(const Belief& previous, const RevisionRecord& rec, const StrengthParams& params) {
    RevisionOutcome out;
    auto p1 = apply_phase1_and_boosts(previous, rec, params);
    out.changelog = std::move(p1.changelog);
    out.phase1_dispositions = std::move(p1.dispositions);
    out.phase1_rolled_back = p1.rolled_back;

    auto r2 = apply_patches(p1.belief, rec.phase2, true, params);
    out.changelog.insert(out.changelog.end(), r2.changelog.begin(), r2.changelog.end());
    out.phase2_dispositions = std::move(r2.dispositions);
    out.phase2_rolled_back = r2.rolled_back;

    // Thesis last: text first, then the strength from the final claims.
    Belief b = std::move(r2.belief_out);
    if (rec.stance) b.thesis.stance = *rec.stance;
    if (rec.summary_bullets) b.thesis.summary_bullets = *rec.summary_bullets;
    auto enforced = enforce_constraints(b, params);
    out.changelog.insert(out.changelog.end(), enforced.changelog.begin(), enforced.changelog.end());
    out.belief = canonicalize(enforced.belief);
    return out;
}

// ---------------------------------------------------------------- entry points

DebateArtifacts run_debate(const DebateConfig& config, const Backends& backends, StopAfter stop_after) {
    config.validate();
    RunState s;
    s.config = config;
    s.dir = config.output_dir;
    if (fs::exists(s.dir / "checkpoints") && !fs::is_empty(s.dir / "checkpoints"))
        throw ConfigError("output directory " + s.dir.string() + " already holds a run; use resume");
    fs::create_directories(s.dir);
    // The directory is implied by where the snapshot lives, so runs in different places match.
    auto snapshot = config.to_json();
    snapshot.erase("output_dir");
    write_text(s.dir / "config.snapshot", snapshot.dump(2) + "\n");
    return drive(s, Position{0, 1}, backends, stop_after);
}

DebateArtifacts run_debate(const DebateConfig& config) {
    config.validate();
    return run_debate(config, make_backends(config));
}

DebateArtifacts resume_debate(const fs::path& dir, const Backends& backends, StopAfter stop_after) {
    RunState s = load_state(dir);
    Position pos = restore(s);
    if (pos.stage != 1 && pos.round > s.config.rounds) return artifacts_of(s);
    return drive(s, pos, backends, stop_after);
}

DebateArtifacts resume_debate(const fs::path& dir) {
    RunState s = load_state(dir);
    return resume_debate(dir, make_backends(s.config));
}

DebateArtifacts load_artifacts(const fs::path& dir) {
    RunState s = load_state(dir);
    restore(s);
    return artifacts_of(s);
}

} // namespace chal
