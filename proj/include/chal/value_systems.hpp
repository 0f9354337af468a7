#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace chal {

struct PersonaSpec {
    std::string key;
    std::string display_name;
    std::string core_commitment;
    std::string prompt_text;
};

struct LogicSystemSpec {
    std::string key;
    std::string display_name;
    std::string description;
    std::string prompt_text;
    bool is_default = false;
};

struct EthicsSystemSpec {
    std::string key;
    std::string display_name;
    std::string description;
    std::string prompt_text;
};

/// One band of a calibration scale. A band with lower == upper is a single point;
/// otherwise it covers (lower, upper].
struct ScaleBand {
    double lower = 0.0;
    double upper = 0.0;
    std::string range;  // as printed, e.g. "0.3–0.5"
    std::string label;
    std::string interpretation;

    bool singleton() const noexcept { return lower == upper; }
    bool contains(double value) const noexcept;
};

struct CalibrationScale {
    std::string name;
    std::vector<ScaleBand> bands;

    /// Throws RegistryError("scale gap ...") unless the bands cover [0,1].
    void check_coverage() const;

    /// Band containing the value; point bands win over the interval that also holds them.
    /// Throws std::out_of_range outside [0,1].
    const ScaleBand& band_for(double value) const;

    std::string render() const;
};

struct CalibrationScales {
    CalibrationScale strength;
    CalibrationScale logic;
    CalibrationScale ethics;
};

inline constexpr std::array<std::string_view, 12> kPersonaKeys{
    "empiricist",      "rationalist", "skeptic",     "pragmatist",    "bayesian",        "constructivist",
    "phenomenologist", "nihilist",    "panpsychist", "simulationist", "supernaturalist", "synthesist",
};
inline constexpr std::array<std::string_view, 8> kLogicSystemKeys{
    "none_pure_ethics", "classical_informal_bayesian", "classical_formal_deductive", "bayesian",
    "dialectical",      "informal_critical",           "fuzzy_multivalued",          "paraconsistent",
};
inline constexpr std::array<std::string_view, 6> kEthicsSystemKeys{
    "none_pure_logic", "utilitarian", "deontological", "virtue", "care", "balanced_rule_utilitarian",
};

class Registries {
public:
    std::map<std::string, PersonaSpec> personas;
    std::map<std::string, LogicSystemSpec> logic_systems;
    std::map<std::string, EthicsSystemSpec> ethics_systems;
    CalibrationScales scales;
    std::map<std::string, std::string> prompts;  // prompt templates by file stem

    // Lookups throw RegistryError naming the missing key.
    const PersonaSpec& persona(std::string_view key) const;
    const LogicSystemSpec& logic_system(std::string_view key) const;
    const EthicsSystemSpec& ethics_system(std::string_view key) const;
    const std::string& prompt(std::string_view name) const;
    std::string default_logic_system() const;
};

/// Resource directory: $CHAL_RESOURCES when set, else the directory bundled at build time.
std::filesystem::path default_resource_dir();

/// Loads and checks all registries. Throws RegistryError on a missing file or key,
/// malformed content, or a scale that does not cover [0,1].
Registries load_registry(const std::filesystem::path& resource_dir);

/// Cached registry from default_resource_dir().
const Registries& bundled_registry();

/// Label of the strength band containing s (0.5 -> "Threshold"). Throws std::out_of_range outside [0,1].
std::string label_strength(double s, const CalibrationScale& scale);
std::string label_strength(double s);

} // namespace chal
