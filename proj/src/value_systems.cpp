#include "chal/value_systems.hpp"

#include "chal/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <sstream>
#include <stdexcept>

namespace chal {

namespace {

using nlohmann::json;

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RegistryError("missing resource file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const std::filesystem::path& path) {
    try {
        return json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw RegistryError("malformed resource file " + path.string() + ": " + e.what());
    }
}

std::string field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key) || !obj.at(key).is_string())
        throw RegistryError(where + ": missing string field \"" + key + "\"");
    return obj.at(key).get<std::string>();
}

const json& list(const json& doc, const char* key, const std::filesystem::path& path) {
    if (!doc.is_object() || !doc.contains(key) || !doc.at(key).is_array())
        throw RegistryError(path.string() + ": expected a list \"" + key + "\"");
    return doc.at(key);
}

template <class Map, class Keys>
void require_keys(const Map& map, const Keys& keys, const char* what) {
    for (auto key : keys)
        if (!map.count(std::string(key)))
            throw RegistryError(std::string("incomplete ") + what + " set: missing \"" + std::string(key) + "\"");
}

CalibrationScale load_scale(const json& doc, const char* key, const std::filesystem::path& path) {
    CalibrationScale scale;
    scale.name = key;
    for (const auto& b : list(doc, key, path)) {
        std::string where = path.string() + " " + key;
        if (!b.is_object() || !b.contains("min") || !b.contains("max") || !b["min"].is_number() || !b["max"].is_number())
            throw RegistryError(where + ": band requires numeric \"min\" and \"max\"");
        ScaleBand band;
        band.lower = b["min"].get<double>();
        band.upper = b["max"].get<double>();
        if (band.lower > band.upper) throw RegistryError(where + ": band with min above max");
        band.range = field(b, "range", where);
        band.label = field(b, "label", where);
        band.interpretation = field(b, "interpretation", where);
        scale.bands.push_back(std::move(band));
    }
    scale.check_coverage();
    return scale;
}

} // namespace

bool ScaleBand::contains(double value) const noexcept {
    return singleton() ? value == lower : (value > lower && value <= upper);
}

void CalibrationScale::check_coverage() const {
    std::vector<const ScaleBand*> spans;
    bool zero_point = false;
    for (const auto& b : bands) {
        if (b.singleton()) zero_point |= (b.lower == 0.0);
        else spans.push_back(&b);
    }
    std::sort(spans.begin(), spans.end(), [](const ScaleBand* a, const ScaleBand* b) { return a->lower < b->lower; });
    double reached = 0.0;
    for (const auto* b : spans) {
        if (b->lower != reached)
            throw RegistryError("scale gap in " + name + ": nothing covers (" + std::to_string(reached) + ", " +
                                std::to_string(b->lower) + "]");
        reached = b->upper;
    }
    if (reached != 1.0) throw RegistryError("scale gap in " + name + ": bands stop at " + std::to_string(reached));
    if (!zero_point) throw RegistryError("scale gap in " + name + ": no band holds 0");
}

const ScaleBand& CalibrationScale::band_for(double value) const {
    if (!(value >= 0.0 && value <= 1.0)) throw std::out_of_range("scale value outside [0,1]");
    for (const auto& b : bands)
        if (b.singleton() && b.contains(value)) return b;
    for (const auto& b : bands)
        if (b.contains(value)) return b;
    throw std::out_of_range("no band of " + name + " holds the value");
}

std::string CalibrationScale::render() const {
    std::string out;
    for (const auto& b : bands) out += "  " + b.range + "  " + b.label + ": " + b.interpretation + "\n";
    return out;
}

const PersonaSpec& Registries::persona(std::string_view key) const {
    auto it = personas.find(std::string(key));
    if (it == personas.end()) throw RegistryError("unknown persona \"" + std::string(key) + "\"");
    return it->second;
}

const LogicSystemSpec& Registries::logic_system(std::string_view key) const {
    auto it = logic_systems.find(std::string(key));
    if (it == logic_systems.end()) throw RegistryError("unknown logic system \"" + std::string(key) + "\"");
    return it->second;
}

const EthicsSystemSpec& Registries::ethics_system(std::string_view key) const {
    auto it = ethics_systems.find(std::string(key));
    if (it == ethics_systems.end()) throw RegistryError("unknown ethics system \"" + std::string(key) + "\"");
    return it->second;
}

const std::string& Registries::prompt(std::string_view name) const {
    auto it = prompts.find(std::string(name));
    if (it == prompts.end()) throw RegistryError("missing prompt template \"" + std::string(name) + "\"");
    return it->second;
}

std::string Registries::default_logic_system() const {
    for (const auto& [key, spec] : logic_systems)
        if (spec.is_default) return key;
    return "classical_informal_bayesian";
}

std::filesystem::path default_resource_dir() {
    if (const char* env = std::getenv("CHAL_RESOURCES"); env != nullptr && *env != '\0') return env;
    return CHAL_RESOURCE_DIR;
}

Registries load_registry(const std::filesystem::path& dir) {
    Registries r;

    auto personas_path = dir / "personas.json";
    const json personas_doc = read_json(personas_path);
    for (const auto& p : list(personas_doc, "personas", personas_path)) {
        PersonaSpec s{field(p, "key", personas_path.string()), field(p, "display_name", personas_path.string()),
                      field(p, "core_commitment", personas_path.string()), field(p, "prompt_text", personas_path.string())};
        auto key = s.key;
        r.personas[key] = std::move(s);
    }
    require_keys(r.personas, kPersonaKeys, "persona");

    auto logic_path = dir / "logic_systems.json";
    json logic = read_json(logic_path);
    std::string default_key = logic.is_object() && logic.contains("default") && logic["default"].is_string()
                                  ? logic["default"].get<std::string>()
                                  : std::string();
    for (const auto& l : list(logic, "logic_systems", logic_path)) {
        LogicSystemSpec s{field(l, "key", logic_path.string()), field(l, "display_name", logic_path.string()),
                          field(l, "description", logic_path.string()), field(l, "prompt_text", logic_path.string()),
                          false};
        s.is_default = s.key == default_key;
        auto key = s.key;
        r.logic_systems[key] = std::move(s);
    }
    require_keys(r.logic_systems, kLogicSystemKeys, "logic system");
    if (!r.logic_systems.count(default_key)) throw RegistryError(logic_path.string() + ": default logic system is not defined");

    auto ethics_path = dir / "ethics_systems.json";
    const json ethics = read_json(ethics_path);
    for (const auto& e : list(ethics, "ethics_systems", ethics_path)) {
        EthicsSystemSpec s{field(e, "key", ethics_path.string()), field(e, "display_name", ethics_path.string()),
                           field(e, "description", ethics_path.string()), field(e, "prompt_text", ethics_path.string())};
        auto key = s.key;
        r.ethics_systems[key] = std::move(s);
    }
    require_keys(r.ethics_systems, kEthicsSystemKeys, "ethics system");

    auto scales_path = dir / "scales.json";
    json scales = read_json(scales_path);
    r.scales.strength = load_scale(scales, "strength_scale", scales_path);
    r.scales.logic = load_scale(scales, "logic_scale", scales_path);
    r.scales.ethics = load_scale(scales, "ethics_scale", scales_path);

    auto prompt_dir = dir / "prompts";
    if (std::filesystem::is_directory(prompt_dir)) {
        std::vector<std::filesystem::path> files;
        for (const auto& entry : std::filesystem::directory_iterator(prompt_dir))
            if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) r.prompts[f.stem().string()] = read_text(f);
    }
    return r;
}

const Registries& bundled_registry() {
    static std::once_flag once;
    static Registries cached;
    std::call_once(once, [] { cached = load_registry(default_resource_dir()); });
    return cached;
}

std::string label_strength(double s, const CalibrationScale& scale) { return scale.band_for(s).label; }

std::string label_strength(double s) { return label_strength(s, bundled_registry().scales.strength); }

} // namespace chal
