// chal: run and inspect dialectical belief-revision debates.
//
// Exit status: 0 success, 1 validation failure (report on stdout), 2 configuration or I/O error.

#include "chal/analytics.hpp"
#include "chal/belief_io.hpp"
#include "chal/error.hpp"
#include "chal/graph.hpp"
#include "chal/pipeline.hpp"
#include "chal/protocol.hpp"
#include "chal/strength.hpp"
#include "chal/validation.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kConfigError = 2;

struct Options {
    bool json_out = false;
    std::string config;
    std::string out;
    int parallelism = 0;
    std::optional<std::uint64_t> seed;
    std::string encoder;
    int dimension = 0;
    std::string path;
    double low_threshold = 0.5;
};

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw chal::IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ojson violations_json(const std::vector<chal::Violation>& list) {
    ojson a = ojson::array();
    for (const auto& v : list) a.push_back({{"node", v.node}, {"rule", v.rule}, {"message", v.message}});
    return a;
}

ojson summary_json(const chal::DebateArtifacts& a) {
    ojson o;
    o["output_dir"] = a.config.output_dir.string();
    o["rounds_completed"] = a.completed_rounds;
    o["exchanges"] = a.transcript.size();
    o["degraded_events"] = a.events.size();
    ojson finals = ojson::object();
    for (const auto& [agent, snaps] : a.snapshots) finals[agent] = snaps.back().thesis.strength;
    o["final_thesis_strength"] = std::move(finals);
    return o;
}

void print_summary(const chal::DebateArtifacts& a, bool as_json) {
    if (as_json) {
        std::cout << summary_json(a).dump(2) << "\n";
        return;
    }
    std::cout << fmt::format("rounds completed: {}\nexchanges: {}\ndegraded events: {}\n", a.completed_rounds,
                             a.transcript.size(), a.events.size());
    for (const auto& [agent, snaps] : a.snapshots)
        std::cout << fmt::format("{}: thesis strength {:.4f}\n", agent, snaps.back().thesis.strength);
    std::cout << "artifacts: " << a.config.output_dir.string() << "\n";
}

int cmd_run(const Options& o) {
    auto config = chal::DebateConfig::load(o.config);
    if (!o.out.empty()) config.output_dir = fs::absolute(o.out);
    if (o.parallelism > 0) config.parallelism = o.parallelism;
    if (o.seed) config.seed = *o.seed;
    if (!o.encoder.empty()) config.embedding.encoder = o.encoder;
    config.validate();
    print_summary(chal::run_debate(config), o.json_out);
    return kOk;
}

int cmd_resume(const Options& o) {
    print_summary(chal::resume_debate(o.path), o.json_out);
    return kOk;
}

int report_invalid(const chal::ValidationReport& report, bool as_json) {
    if (as_json) {
        ojson out;
        out["valid"] = false;
        out["violations"] = violations_json(report.violations);
        out["warnings"] = violations_json(report.warnings);
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "invalid\n" << report.to_text();
    }
    return kInvalid;
}

int cmd_validate(const Options& o) {
    auto result = chal::parse_belief(read_text(o.path));
    if (!result.ok()) return report_invalid(result.report, o.json_out);
    if (o.json_out) {
        ojson out;
        out["valid"] = true;
        out["violations"] = ojson::array();
        out["warnings"] = violations_json(result.report.warnings);
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << "valid\n";
        for (const auto& w : result.report.warnings)
            std::cout << fmt::format("warning: {}: {}: {}\n", w.node, w.rule, w.message);
    }
    return kOk;
}

int cmd_inspect(const Options& o) {
    auto result = chal::parse_belief(read_text(o.path));
    if (!result.ok()) return report_invalid(result.report, o.json_out);
    const chal::Belief& b = result.belief;
    chal::StrengthParams params;
    params.p = b.breadth_exponent;
    auto graph = chal::build_graph(b);
    auto orphans = chal::find_orphans(graph, b);
    auto vulnerabilities = chal::vulnerability_report(b, o.low_threshold);
    auto analysis = chal::position_analysis(b, params);
    if (o.json_out) {
        ojson out;
        out["graph"] = chal::to_json(graph);
        out["orphans"] = chal::encode_ids(orphans);
        out["vulnerabilities"] = chal::to_json(vulnerabilities);
        out["position_analysis"] = chal::to_json(analysis);
        std::cout << out.dump(2) << "\n";
        return kOk;
    }
    std::cout << "strength edges:\n";
    for (const auto& e : graph.strength_edges) std::cout << "  " << e.from.str() << " -> " << e.to.str() << "\n";
    std::cout << "challenge edges:\n";
    for (const auto& e : graph.challenge_edges) std::cout << "  " << e.from.str() << " -> " << e.to.str() << "\n";
    std::cout << "orphans:";
    for (auto id : orphans) std::cout << " " << id.str();
    std::cout << "\nvulnerabilities:\n" << chal::to_json(vulnerabilities).dump(2) << "\n";
    std::cout << chal::render_position_analysis(analysis);
    return kOk;
}

// Recomputes every verdict from its recorded component scores.
int cmd_score(const Options& o) {
    fs::path transcript = o.path;
    fs::path config_path = o.config.empty() ? transcript.parent_path() / "config.snapshot" : fs::path(o.config);
    auto config = chal::DebateConfig::from_json(json::parse(read_text(config_path)), config_path.parent_path());

    std::vector<chal::Exchange> exchanges;
    std::istringstream lines(read_text(transcript));
    std::string line;
    while (std::getline(lines, line)) {
        if (line.empty()) continue;
        try {
            exchanges.push_back(chal::exchange_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw chal::IoError("malformed transcript line: " + std::string(e.what()));
        }
    }

    ojson rows = ojson::array();
    int mismatches = 0;
    for (const auto& ex : exchanges) {
        auto v = chal::adjudicate(ex.verdict.scores, ex.verdict.reasoning, config.adjudicator, ex.rebuttal.action,
                                  config.concession_forces_critique);
        bool match = v.kind == ex.verdict.kind;
        mismatches += match ? 0 : 1;
        rows.push_back({{"challenge_id", ex.challenge.id},
                        {"recorded", chal::to_string(ex.verdict.kind)},
                        {"recomputed", chal::to_string(v.kind)},
                        {"match", match}});
    }
    ojson aps = ojson::object();
    for (const auto& m : config.council) {
        auto value = chal::aps(exchanges, m.id, std::nullopt, config.aps_table);
        aps[m.id] = value ? ojson(*value) : ojson(nullptr);
    }
    if (o.json_out) {
        ojson out;
        out["exchanges"] = std::move(rows);
        out["mismatches"] = mismatches;
        out["aps"] = std::move(aps);
        std::cout << out.dump(2) << "\n";
    } else {
        for (const auto& r : rows)
            std::cout << fmt::format("{} {} {}\n", r["challenge_id"].get<std::string>(), r["recomputed"].get<std::string>(),
                                     r["match"].get<bool>() ? "ok" : "MISMATCH (recorded " + r["recorded"].get<std::string>() + ")");
        for (const auto& [agent, value] : aps.items())
            std::cout << fmt::format("aps {}: {}\n", agent, value.is_null() ? "no data" : fmt::format("{:.4f}", value.get<double>()));
        std::cout << fmt::format("{} exchanges, {} mismatches\n", rows.size(), mismatches);
    }
    return mismatches == 0 ? kOk : kInvalid;
}

int cmd_embed(const Options& o) {
    auto artifacts = chal::load_artifacts(o.path);
    std::string spec = o.encoder.empty() ? artifacts.config.embedding.encoder : o.encoder;
    int dimension = o.dimension > 0 ? o.dimension : artifacts.config.embedding.dimension;
    auto encoder = chal::make_encoder(spec, static_cast<std::size_t>(dimension));
    fs::path out_dir = o.out.empty() ? fs::path(o.path) : fs::path(o.out);
    chal::export_metrics(artifacts, out_dir, *encoder, artifacts.config.embedding.count_divisor);
    std::size_t width = chal::embedding_dimension(encoder->dimension());
    if (o.json_out) {
        ojson out;
        out["embeddings"] = (out_dir / "embeddings.csv").string();
        out["dimension"] = width;
        std::cout << out.dump(2) << "\n";
    } else {
        std::cout << fmt::format("wrote {} ({} columns per row)\n", (out_dir / "embeddings.csv").string(), width);
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"chal: multi-agent dialectical belief revision"};
    app.require_subcommand(1);
    Options o;
    app.add_flag("--json", o.json_out, "Machine-readable output");

    auto* run = app.add_subcommand("run", "Run a debate from a config file");
    run->add_option("--config", o.config, "Debate config (JSON)")->required();
    run->add_option("--out", o.out, "Output directory (overrides the config)");
    run->add_option("--parallelism", o.parallelism, "Concurrent backend calls per stage");
    run->add_option("--seed", o.seed, "Run seed");
    run->add_option("--encoder", o.encoder, "Embedding encoder: hashing or command:<program>");

    auto* resume = app.add_subcommand("resume", "Continue a partial run");
    resume->add_option("dir", o.path, "Artifact directory")->required();

    auto* validate = app.add_subcommand("validate", "Validate a belief document");
    validate->add_option("belief", o.path, "Belief document")->required();

    auto* inspect = app.add_subcommand("inspect", "Graph, orphans, vulnerabilities and position analysis");
    inspect->add_option("belief", o.path, "Belief document")->required();
    inspect->add_option("--low-threshold", o.low_threshold, "Weak-node threshold for the vulnerability report");

    auto* score = app.add_subcommand("score", "Recompute verdicts and APS from a transcript");
    score->add_option("transcript", o.path, "transcript.jsonl")->required();
    score->add_option("--config", o.config, "Config with adjudicator params (default: config.snapshot beside it)");

    auto* embed = app.add_subcommand("embed", "Export belief embeddings for a run");
    embed->add_option("dir", o.path, "Artifact directory")->required();
    embed->add_option("--encoder", o.encoder, "hashing or command:<program>");
    embed->add_option("--dimension", o.dimension, "Encoder output dimension");
    embed->add_option("--out", o.out, "Directory for the exported tables");

    for (auto* sub : {run, resume, validate, inspect, score, embed})
        sub->add_flag("--json", o.json_out, "Machine-readable output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }

    try {
        if (*run) return cmd_run(o);
        if (*resume) return cmd_resume(o);
        if (*validate) return cmd_validate(o);
        if (*inspect) return cmd_inspect(o);
        if (*score) return cmd_score(o);
        if (*embed) return cmd_embed(o);
    } catch (const chal::InvalidBeliefError& e) {
        std::cout << e.what() << "\n";
        return kInvalid;
    } catch (const std::exception& e) {
        if (o.json_out) std::cout << ojson{{"error", e.what()}}.dump(2) << "\n";
        else std::cerr << "error: " << e.what() << "\n";
        return kConfigError;
    }
    return kConfigError;
}
