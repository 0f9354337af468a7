#pragma once

#include "chal/belief.hpp"
#include "chal/strength.hpp"
#include "chal/validation.hpp"

#include <json.hpp>

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace chal {

enum class PatchOp { Add, Update };

/// Atomic add/update on one node. Payloads use the on-disk field names.
struct Patch {
    PatchOp op = PatchOp::Update;
    NodeKind target_kind = NodeKind::Claim;
    std::optional<NodeId> node_id;  // required for update, ignored for add
    nlohmann::json payload = nlohmann::json::object();

    bool operator==(const Patch&) const = default;

    static Patch add(NodeKind kind, nlohmann::json payload);
    static Patch update(NodeId id, nlohmann::json payload);
};

nlohmann::ordered_json to_json(const Patch& patch);

/// Returns nullopt and fills `error` when the object is not a patch.
std::optional<Patch> patch_from_json(const nlohmann::json& value, std::string* error = nullptr);

struct PatchDisposition {
    std::size_t index = 0;
    bool applied = false;
    std::string reason;                 // skip reason
    std::optional<NodeId> assigned_id;  // for adds
    std::vector<std::string> notes;     // e.g. stripped strength increase

    bool operator==(const PatchDisposition&) const = default;
};

struct PatchBatchResult {
    Belief belief_out;
    std::vector<std::size_t> applied;
    std::vector<std::pair<std::size_t, std::string>> skipped;
    bool rolled_back = false;
    ChangeLog changelog;
    std::vector<NodeId> mooted;
    std::vector<PatchDisposition> dispositions;
    ValidationReport final_report;  // populated when the batch rolled back
};

PatchBatchResult apply_patches(const Belief& belief, std::span<const Patch> patches,
                               bool phase2_strength_filter, const StrengthParams& params);

/// Marks every counterposition whose targets are all retracted as moot.
std::pair<Belief, std::vector<NodeId>> mark_moot_counterpositions(const Belief& belief);

/// True when the patch lowers an existing node's strength or retracts it, judged against `before`.
bool is_weakening(const Patch& patch, const Belief& before);

/// Id a weakening patch touches, if it is one.
std::optional<NodeId> weakened_node(const Patch& patch, const Belief& before);

nlohmann::ordered_json to_json(const PatchDisposition& disposition);

} // namespace chal
