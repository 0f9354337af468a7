#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace chal {

enum class NodeKind : std::uint8_t {
    Definition,
    Assumption,
    Evidence,
    Claim,
    Counterposition,
    Uncertainty,
};

inline constexpr std::array<NodeKind, 6> kAllKinds{
    NodeKind::Definition, NodeKind::Assumption,      NodeKind::Evidence,
    NodeKind::Claim,      NodeKind::Counterposition, NodeKind::Uncertainty,
};

/// Prefix letter used in rendered identifiers (D, A, E, C, X, U).
char kind_prefix(NodeKind kind) noexcept;

/// Lower-case kind name ("definition", ...), used in patches.
std::string_view kind_name(NodeKind kind) noexcept;

/// Name of the belief collection holding the kind ("definitions", "evidence", ...).
std::string_view collection_name(NodeKind kind) noexcept;

std::optional<NodeKind> kind_from_prefix(char prefix) noexcept;
std::optional<NodeKind> kind_from_name(std::string_view name) noexcept;

/// Definitions, assumptions, evidence and claims carry strengths; X and U do not.
constexpr bool is_strength_bearing(NodeKind kind) noexcept {
    return kind == NodeKind::Definition || kind == NodeKind::Assumption ||
           kind == NodeKind::Evidence || kind == NodeKind::Claim;
}

struct NodeId {
    NodeKind kind = NodeKind::Definition;
    int index = 1;

    /// Rendered form: prefix letter followed by the unpadded index.
    std::string str() const;

    /// Accepts only the canonical rendering ("C12"; not "C012", "c12" or "C0").
    static std::optional<NodeId> parse(std::string_view text) noexcept;

    auto operator<=>(const NodeId&) const = default;
};

inline NodeId make_id(NodeKind kind, int index) { return NodeId{kind, index}; }

/// Convenience for tests and fixtures; throws std::invalid_argument on bad input.
NodeId node_id(std::string_view text);

} // namespace chal
