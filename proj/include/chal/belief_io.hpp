#pragma once

#include "chal/belief.hpp"
#include "chal/error.hpp"
#include "chal/validation.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>

namespace chal {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

inline constexpr std::string_view kCbsVersion = "1";

/// Rounds to four decimal places, the on-disk precision of every strength.
double round4(double value) noexcept;

/// Result of decoding a document. `belief` holds every node that decoded cleanly;
/// `report` carries the structural problems found while decoding.
struct DecodeResult {
    Belief belief;
    ValidationReport report;

    bool ok() const noexcept { return report.ok(); }
};

DecodeResult decode_belief(const json& document);

/// Decodes and then runs validate_belief; the report merges both passes.
DecodeResult parse_belief(std::string_view text);
DecodeResult parse_belief(const std::string& text);
DecodeResult parse_belief(const char* text);
DecodeResult parse_belief(const json& document);

ordered_json encode_belief(const Belief& belief);
std::string serialize_belief(const Belief& belief);

/// Thrown when a document that must be valid is not.
class InvalidBeliefError : public Error {
public:
    InvalidBeliefError(const std::string& what, ValidationReport report)
        : Error(what), report_(std::move(report)) {}
    const ValidationReport& report() const noexcept { return report_; }

private:
    ValidationReport report_;
};

/// Reads, decodes and validates; throws IoError or InvalidBeliefError.
Belief load_belief(const std::filesystem::path& path);
void save_belief(const std::filesystem::path& path, const Belief& belief);

/// Round-trips through the on-disk form so in-memory state matches the persisted one.
Belief canonicalize(const Belief& belief);

using AnyNode = std::variant<DefinitionNode, AssumptionNode, EvidenceNode, ClaimNode,
                             CounterpositionNode, UncertaintyNode>;

NodeId node_id_of(const AnyNode& node);

/// Field names accepted for a kind, in canonical output order.
const std::vector<std::string>& node_fields(NodeKind kind);

ordered_json encode_node(const Belief& belief, NodeId id);
ordered_json encode_node(const AnyNode& node);

/// Decodes one node of a known kind; problems are appended to `report`.
std::optional<AnyNode> decode_node(NodeKind kind, const json& object, ValidationReport& report);

/// Inserts or replaces a node in the collection matching its kind.
void put_node(Belief& belief, AnyNode node);
std::optional<AnyNode> get_node(const Belief& belief, NodeId id);

// Encoders for small value types reused by other modules.
ordered_json encode_ids(const std::vector<NodeId>& ids);
bool decode_ids(const json& value, std::vector<NodeId>& out, std::string& error);

} // namespace chal
