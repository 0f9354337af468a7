#pragma once

#include "chal/agent.hpp"
#include "chal/analytics.hpp"
#include "chal/belief.hpp"
#include "chal/protocol.hpp"
#include "chal/strength.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace chal {

/// Backend selection for one council member or the adjudicator:
/// {"type": "scripted", "scenario": path} or {"type": "llm", "provider": {...}}.
struct BackendConfig {
    std::string type = "scripted";
    std::filesystem::path scenario;
    nlohmann::json provider = nlohmann::json::object();

    bool operator==(const BackendConfig&) const = default;
};

struct CouncilMember {
    std::string id;
    std::string persona;
    BackendConfig backend;
    std::optional<std::filesystem::path> belief_file;

    bool operator==(const CouncilMember&) const = default;
};

struct EmbeddingConfig {
    std::string encoder = "hashing";  // "hashing" or "command:<program>"
    int dimension = 8;
    double count_divisor = 50.0;

    bool operator==(const EmbeddingConfig&) const = default;
};

struct DebateConfig {
    std::string topic;
    int rounds = 1;
    int challenges_per_pair = 1;
    std::vector<CouncilMember> council;
    AdjudicatorParams adjudicator;
    BackendConfig adjudicator_backend;
    StrengthParams strength;
    std::optional<double> breadth_exponent;  // overrides every opening belief's exponent when set
    bool concession_forces_critique = true;
    int parallelism = 1;
    std::filesystem::path output_dir = "chal_run";
    std::uint64_t seed = 0;
    double vulnerability_threshold = 0.5;
    double raise_increment = 0.05;
    double add_above_delta = 0.10;
    EmbeddingConfig embedding;
    ApsTable aps_table;
    std::size_t prompt_budget_tokens = 24000;

    /// Throws ConfigError naming the first problem: fewer than two members, duplicate ids,
    /// unknown personas or systems, weights not summing to one, non-positive counts.
    void validate() const;

    /// Relative paths resolve against `base_dir`. Throws ConfigError.
    static DebateConfig from_json(const nlohmann::json& value, const std::filesystem::path& base_dir = {});
    nlohmann::ordered_json to_json() const;

    /// Reads and validates a config file.
    static DebateConfig load(const std::filesystem::path& path);
};

struct Backends {
    std::map<std::string, std::shared_ptr<CouncilBackend>> council;
    std::shared_ptr<AdjudicatorBackend> adjudicator;
};

/// Instantiates the configured backends; scripted members sharing a scenario share one backend.
Backends make_backends(const DebateConfig& config);

/// A recorded departure from the normal protocol path.
struct DebateEvent {
    int round = 0;
    int stage = 0;
    std::string agent;
    std::string kind;  // e.g. no_challenges, rebuttal_missing, engine_enforced, adjudication_failed
    std::string detail;

    bool operator==(const DebateEvent&) const = default;
};

nlohmann::ordered_json to_json(const DebateEvent& event);
DebateEvent debate_event_from_json(const nlohmann::json& value);

/// Everything needed to turn an agent's round r-1 snapshot into its round r snapshot.
struct RevisionRecord {
    int round = 1;
    std::string agent;
    std::vector<Patch> phase1;                // batch applied without the strength filter
    std::vector<std::vector<NodeId>> boosts;  // one target list per successful defense, in order
    std::vector<Patch> phase2;                // batch applied with the strength filter
    std::optional<std::string> stance;
    std::optional<std::vector<std::string>> summary_bullets;
    // Outcomes, kept for auditing; replay recomputes them.
    ChangeLog changelog;
    std::vector<PatchDisposition> phase1_dispositions;
    std::vector<PatchDisposition> phase2_dispositions;
    bool phase1_rolled_back = false;
    bool phase2_rolled_back = false;
    std::optional<ComplianceReport> compliance;

    bool operator==(const RevisionRecord&) const = default;
};

nlohmann::ordered_json to_json(const RevisionRecord& record);
RevisionRecord revision_record_from_json(const nlohmann::json& value);

struct RevisionOutcome {
    Belief belief;
    ChangeLog changelog;
    std::vector<PatchDisposition> phase1_dispositions;
    std::vector<PatchDisposition> phase2_dispositions;
    bool phase1_rolled_back = false;
    bool phase2_rolled_back = false;
};

/// Applies a revision record to the previous snapshot: Phase-1 batch, defense boosts,
/// Phase-2 batch, thesis text, constraint enforcement, then canonicalization.
/// The pipeline and replay both go through this function.
RevisionOutcome replay_revision(const Belief& previous, const RevisionRecord& record, const StrengthParams& params);

struct DebateArtifacts {
    DebateConfig config;
    std::map<std::string, std::vector<Belief>> snapshots;  // agent -> rounds 0..R
    std::vector<Challenge> challenges;  // every accepted challenge, adjudicated or not
    std::vector<Exchange> transcript;
    std::vector<RevisionRecord> revisions;
    std::vector<DebateEvent> events;
    std::vector<MetricsRow> metrics;
    int completed_rounds = 0;

    const Belief& final_belief(const std::string& agent) const { return snapshots.at(agent).back(); }
};

/// Stop hook for tests and interrupted runs: returning true after (round, stage) stops the
/// run with that stage checkpointed.
using StopAfter = std::function<bool(int round, int stage)>;

/// Runs a full debate and writes every artifact under config.output_dir.
DebateArtifacts run_debate(const DebateConfig& config, const Backends& backends, StopAfter stop_after = {});
DebateArtifacts run_debate(const DebateConfig& config);

/// Continues a partial run from its checkpoints. Throws CheckpointError on an inconsistent directory.
DebateArtifacts resume_debate(const std::filesystem::path& artifact_dir, const Backends& backends,
                              StopAfter stop_after = {});
DebateArtifacts resume_debate(const std::filesystem::path& artifact_dir);

/// Reads the artifacts of a finished or partial run without executing anything.
DebateArtifacts load_artifacts(const std::filesystem::path& artifact_dir);

} // namespace chal
