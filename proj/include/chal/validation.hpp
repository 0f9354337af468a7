#pragma once

#include "chal/belief.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace chal {

/// One rule violation. `node` is a rendered id, "thesis" or "document".
struct Violation {
    std::string node;
    std::string rule;
    std::string message;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;
    std::vector<Violation> warnings;  // auto-repaired or advisory findings

    bool ok() const noexcept { return violations.empty(); }
    bool has_rule(std::string_view rule) const;
    bool has(std::string_view node, std::string_view rule) const;
    std::vector<std::string> rules() const;

    /// Sorts and deduplicates both lists into canonical order.
    void normalize();
    void merge(const ValidationReport& other);

    /// One line per violation: "<node>: <rule>: <message>".
    std::string to_text() const;
};

/// Checks every structural and referential rule of a belief document. Pure; never throws.
ValidationReport validate_belief(const Belief& belief);

/// Human-readable statement of a rule, used in diagnostics and corrective prompts.
std::string_view rule_text(std::string_view rule);

} // namespace chal
