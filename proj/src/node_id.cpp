#include "chal/node_id.hpp"

#include <charconv>
#include <stdexcept>

namespace chal {

namespace {

struct KindInfo {
    NodeKind kind;
    char prefix;
    std::string_view name;
    std::string_view collection;
};

constexpr std::array<KindInfo, 6> kKinds{{
    {NodeKind::Definition, 'D', "definition", "definitions"},
    {NodeKind::Assumption, 'A', "assumption", "assumptions"},
    {NodeKind::Evidence, 'E', "evidence", "evidence"},
    {NodeKind::Claim, 'C', "claim", "claims"},
    {NodeKind::Counterposition, 'X', "counterposition", "counterpositions"},
    {NodeKind::Uncertainty, 'U', "uncertainty", "uncertainties"},
}};

const KindInfo& info(NodeKind kind) noexcept { return kKinds[static_cast<std::size_t>(kind)]; }

} // namespace

char kind_prefix(NodeKind kind) noexcept { return info(kind).prefix; }
std::string_view kind_name(NodeKind kind) noexcept { return info(kind).name; }
std::string_view collection_name(NodeKind kind) noexcept { return info(kind).collection; }

std::optional<NodeKind> kind_from_prefix(char prefix) noexcept {
    for (const auto& k : kKinds)
        if (k.prefix == prefix) return k.kind;
    return std::nullopt;
}

std::optional<NodeKind> kind_from_name(std::string_view name) noexcept {
    for (const auto& k : kKinds)
        if (k.name == name) return k.kind;
    return std::nullopt;
}

std::string NodeId::str() const { return std::string(1, kind_prefix(kind)) + std::to_string(index); }

std::optional<NodeId> NodeId::parse(std::string_view text) noexcept {
    if (text.size() < 2 || text.size() > 10) return std::nullopt;
    auto kind = kind_from_prefix(text[0]);
    if (!kind) return std::nullopt;
    std::string_view digits = text.substr(1);
    if (digits[0] == '0') return std::nullopt;
    int value = 0;
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), value);
    if (ec != std::errc{} || ptr != digits.data() + digits.size() || value <= 0) return std::nullopt;
    return NodeId{*kind, value};
}

NodeId node_id(std::string_view text) {
    auto id = NodeId::parse(text);
    if (!id) throw std::invalid_argument("not a node id: " + std::string(text));
    return *id;
}

} // namespace chal
