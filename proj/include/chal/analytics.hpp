#pragma once

#include "chal/belief.hpp"
#include "chal/protocol.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace chal {

// Agent performance score

enum class ExchangeRole { Challenger, Target };

/// Per-exchange score by role and verdict.
struct ApsTable {
    double challenger_critique_valid = 1.0;
    double challenger_rebuttal_valid = -0.5;
    double challenger_unresolved = 0.0;
    double target_critique_valid = -1.0;
    double target_rebuttal_valid = 1.0;
    double target_unresolved = 0.25;

    double score(ExchangeRole role, VerdictKind kind) const noexcept;

    /// Throws ConfigError for values outside [-1, 1] or unknown keys.
    static ApsTable from_json(const nlohmann::json& value);
    nlohmann::ordered_json to_json() const;

    bool operator==(const ApsTable&) const = default;
};

/// Mean per-exchange score of the agent over exchanges through `upto_round` in both roles;
/// nullopt when the agent has no exchange in scope.
std::optional<double> aps(std::span<const Exchange> exchanges, std::string_view agent,
                          std::optional<int> upto_round = std::nullopt, const ApsTable& table = {});

// Text encoders and belief embeddings

class TextEncoder {
public:
    virtual ~TextEncoder() = default;
    virtual std::size_t dimension() const = 0;
    /// One vector per text, each of dimension(). Throws std::runtime_error on failure.
    virtual std::vector<std::vector<double>> encode_batch(const std::vector<std::string>& texts) = 0;
    std::vector<double> encode(const std::string& text);
};

/// Deterministic bag-of-tokens encoder: lowercase alphanumeric tokens hashed (FNV-1a) into
/// signed buckets, then L2-normalized. Not semantic; for tests and offline runs.
class HashingEncoder final : public TextEncoder {
public:
    explicit HashingEncoder(std::size_t dimension);
    std::size_t dimension() const override { return dimension_; }
    std::vector<std::vector<double>> encode_batch(const std::vector<std::string>& texts) override;

private:
    std::size_t dimension_;
};

/// Runs an external program once per batch: texts go to its stdin as a JSON list of strings,
/// and it must print a JSON list of equally long numeric vectors.
class ExternalCommandEncoder final : public TextEncoder {
public:
    ExternalCommandEncoder(std::string command, std::size_t dimension);
    std::size_t dimension() const override { return dimension_; }
    std::vector<std::vector<double>> encode_batch(const std::vector<std::string>& texts) override;

private:
    std::string command_;
    std::size_t dimension_;
};

/// "hashing" or "command:<program>". Throws ConfigError.
std::unique_ptr<TextEncoder> make_encoder(const std::string& spec, std::size_t dimension);

struct EmbeddingItem {
    std::string node;  // for error context
    std::string text;
    double weight = 1.0;
};

/// Weight-averaged encodings; the unweighted mean when the weights sum to zero, the zero
/// vector for an empty list. Encoder failures are rethrown with the node ids.
std::vector<double> component_embedding(const std::vector<EmbeddingItem>& items, TextEncoder& encoder);

constexpr std::size_t embedding_dimension(std::size_t d) noexcept { return 10 * d + 11; }

/// Block order: definitions, assumptions, evidence, claims, thesis, open uncertainties,
/// counterpositions (partial, sufficient, unaddressed, moot), then 6 component counts over
/// `count_divisor` and 5 average strengths (D, A, E, C, thesis). Retracted nodes are excluded.
std::vector<double> belief_embedding(const Belief& belief, TextEncoder& encoder, double count_divisor = 50.0);

// Metrics

struct MetricsRow {
    int round = 0;
    std::string agent;
    double thesis_strength = 0.0;
    std::optional<double> aps;
    std::array<int, 6> counts{};  // D, A, E, C, X, U
    std::array<int, 3> as_challenger{};  // critique_valid, rebuttal_valid, unresolved
    std::array<int, 3> as_defender{};
    int degraded_events = 0;

    bool operator==(const MetricsRow&) const = default;
};

/// Non-retracted D/A/E/C nodes and all X/U nodes.
std::array<int, 6> component_counts(const Belief& belief);

std::string metrics_csv(const std::vector<MetricsRow>& rows);

struct DebateArtifacts;

/// Writes metrics.csv, aps.csv, verdicts.csv, attack_histogram.csv and embeddings.csv into `dir`.
void export_metrics(const DebateArtifacts& artifacts, const std::filesystem::path& dir, TextEncoder& encoder,
                    double count_divisor);

} // namespace chal
