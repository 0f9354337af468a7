#include "chal/llm.hpp"

#include "chal/belief_io.hpp"
#include "chal/error.hpp"
#include "chal/graph.hpp"

#include <httplib.h>
#include <spdlog/spdlog.h>

#include <cstdlib>

namespace chal {

namespace {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

struct SplitUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;
};

SplitUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw BackendError("endpoint must be an absolute URL: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, "/"};
    return {url.substr(0, path_start), url.substr(path_start)};
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
    for (auto pos = text.find(from); pos != std::string::npos; pos = text.find(from, pos + to.size()))
        text.replace(pos, from.size(), to);
    return text;
}

std::string dump_block(const ojson& value) { return value.dump(2); }

void add_belief(std::vector<PromptBlock>& blocks, const Belief& belief, const std::string& label) {
    for (auto& b : belief_blocks(belief, label)) blocks.push_back(std::move(b));
}

} // namespace

std::string_view to_string(ProviderFamily family) noexcept {
    switch (family) {
    case ProviderFamily::OpenAI: return "openai";
    case ProviderFamily::Anthropic: return "anthropic";
    case ProviderFamily::Gemini: return "gemini";
    }
    return "?";
}

ChatProviderConfig ChatProviderConfig::from_json(const json& v) {
    if (!v.is_object()) throw ConfigError("provider config must be an object");
    ChatProviderConfig c;
    auto str = [&](const char* key, std::string& out, bool required) {
        if (!v.contains(key)) {
            if (required) throw ConfigError(std::string("provider config requires \"") + key + "\"");
            return;
        }
        if (!v[key].is_string()) throw ConfigError(std::string("provider \"") + key + "\" must be a string");
        out = v[key].get<std::string>();
    };
    std::string family = "openai";
    str("family", family, false);
    if (family == "openai") c.family = ProviderFamily::OpenAI;
    else if (family == "anthropic") c.family = ProviderFamily::Anthropic;
    else if (family == "gemini") c.family = ProviderFamily::Gemini;
    else throw ConfigError("unknown provider family \"" + family + "\"");
    str("endpoint", c.endpoint, true);
    str("model", c.model, true);
    str("credential_env", c.credential_env, false);
    if (v.contains("timeout_seconds")) {
        if (!v["timeout_seconds"].is_number_integer() || v["timeout_seconds"].get<int>() <= 0)
            throw ConfigError("provider \"timeout_seconds\" must be a positive integer");
        c.timeout_seconds = v["timeout_seconds"].get<int>();
    }
    if (v.contains("max_retries")) {
        if (!v["max_retries"].is_number_integer() || v["max_retries"].get<int>() < 0)
            throw ConfigError("provider \"max_retries\" must be a non-negative integer");
        c.max_retries = v["max_retries"].get<int>();
    }
    if (v.contains("options")) {
        if (!v["options"].is_object()) throw ConfigError("provider \"options\" must be an object");
        c.options = v["options"];
    }
    return c;
}

ojson ChatProviderConfig::to_json() const {
    ojson o;
    o["family"] = std::string(to_string(family));
    o["endpoint"] = endpoint;
    o["model"] = model;
    o["credential_env"] = credential_env;
    o["timeout_seconds"] = timeout_seconds;
    o["max_retries"] = max_retries;
    o["options"] = options;
    return o;
}

const ProviderShape& provider_shape(ProviderFamily family) {
    static const ProviderShape openai{"Authorization", "Bearer ", {}, "/choices/0/message/content"};
    static const ProviderShape anthropic{"x-api-key", "", {{"anthropic-version", "2023-06-01"}}, "/content/0/text"};
    static const ProviderShape gemini{"x-goog-api-key", "", {}, "/candidates/0/content/parts/0/text"};
    switch (family) {
    case ProviderFamily::OpenAI: return openai;
    case ProviderFamily::Anthropic: return anthropic;
    case ProviderFamily::Gemini: return gemini;
    }
    return openai;
}

json build_request_body(const ChatProviderConfig& config, const std::vector<ChatMessage>& messages) {
    json body = json::object();
    switch (config.family) {
    case ProviderFamily::OpenAI: {
        body["model"] = config.model;
        body["messages"] = json::array();
        for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
        break;
    }
    case ProviderFamily::Anthropic: {
        body["model"] = config.model;
        body["max_tokens"] = 8192;
        std::string system;
        body["messages"] = json::array();
        for (const auto& m : messages) {
            if (m.role == "system") system += (system.empty() ? "" : "\n") + m.content;
            else body["messages"].push_back({{"role", m.role}, {"content", m.content}});
        }
        if (!system.empty()) body["system"] = system;
        break;
    }
    case ProviderFamily::Gemini: {
        std::string system;
        body["contents"] = json::array();
        for (const auto& m : messages) {
            if (m.role == "system") {
                system += (system.empty() ? "" : "\n") + m.content;
                continue;
            }
            body["contents"].push_back(
                {{"role", m.role == "assistant" ? "model" : "user"}, {"parts", json::array({{{"text", m.content}}})}});
        }
        if (!system.empty()) body["systemInstruction"] = {{"parts", json::array({{{"text", system}}})}};
        break;
    }
    }
    for (const auto& [k, val] : config.options.items()) body[k] = val;
    return body;
}

std::string extract_reply(ProviderFamily family, const json& response) {
    json::json_pointer ptr(provider_shape(family).reply_pointer);
    if (!response.contains(ptr) || !response.at(ptr).is_string())
        throw BackendError("provider reply has no text at " + provider_shape(family).reply_pointer);
    return response.at(ptr).get<std::string>();
}

std::vector<std::pair<std::string, std::string>> redact_headers(
    const std::vector<std::pair<std::string, std::string>>& headers, const ProviderShape& shape) {
    auto out = headers;
    for (auto& [name, value] : out)
        if (name == shape.auth_header) value = "***";
    return out;
}

HttpChatProvider::HttpChatProvider(ChatProviderConfig config) : config_(std::move(config)) {}

std::string HttpChatProvider::complete(const std::vector<ChatMessage>& messages) {
    const auto& shape = provider_shape(config_.family);
    std::vector<std::pair<std::string, std::string>> headers;
    if (!config_.credential_env.empty()) {
        const char* secret = std::getenv(config_.credential_env.c_str());
        if (!secret) throw BackendError("credential variable " + config_.credential_env + " is not set");
        headers.emplace_back(shape.auth_header, shape.auth_prefix + secret);
    }
    for (const auto& h : shape.extra_headers) headers.push_back(h);

    auto url = split_url(replace_all(config_.endpoint, "{model}", config_.model));
    std::string body = build_request_body(config_, messages).dump();
    if (spdlog::should_log(spdlog::level::debug)) {
        std::string shown;
        for (const auto& [k, v] : redact_headers(headers, shape)) shown += k + ": " + v + "; ";
        spdlog::debug("POST {}{} headers [{}] body {}", url.origin, url.path, shown, body);
    }

    httplib::Client client(url.origin);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    client.set_write_timeout(config_.timeout_seconds, 0);
    httplib::Headers hdrs;
    for (const auto& [k, v] : headers) hdrs.emplace(k, v);

    auto res = client.Post(url.path, hdrs, body, "application/json");
    if (!res) throw BackendError("request to " + url.origin + " failed: " + httplib::to_string(res.error()));
    spdlog::debug("reply {} {}", res->status, res->body);
    if (res->status < 200 || res->status >= 300)
        throw BackendError("provider returned HTTP " + std::to_string(res->status));
    auto parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) throw BackendError("provider reply is not JSON");
    return extract_reply(config_.family, parsed);
}

LlmBackend::LlmBackend(std::shared_ptr<ChatProvider> provider, const Registries& registries, int max_retries,
                       std::size_t token_budget)
    : provider_(std::move(provider)), registries_(registries), max_retries_(max_retries), token_budget_(token_budget) {}

json LlmBackend::ask(const PromptContext& context, OutputShape shape) {
    PromptDocument doc = assemble_prompt(context, registries_, token_budget_);
    if (doc.over_budget) spdlog::warn("{} prompt exceeds the token budget", to_string(context.stage));
    std::vector<ChatMessage> messages{{"system", doc.system}, {"user", doc.user}};

    std::string last_problem;
    for (int attempt = 0; attempt <= max_retries_; ++attempt) {
        std::string reply;
        try {
            reply = provider_->complete(messages);
        } catch (const BackendError& e) {
            last_problem = e.what();
            continue;
        }
        auto parsed = parse_structured_output(reply, shape);
        if (parsed.ok()) return std::move(*parsed.value);
        std::string diagnostics;
        for (const auto& d : parsed.diagnostics) diagnostics += "- " + d + "\n";
        last_problem = diagnostics;
        messages.push_back({"assistant", reply});
        messages.push_back({"user", substitute(registries_.prompt("corrective"), {{"diagnostics", diagnostics}})});
    }
    throw BackendError(std::string(to_string(context.stage)) + " output rejected after " +
                       std::to_string(max_retries_ + 1) + " attempts: " + last_problem);
}

json LlmBackend::generate_opening(const OpeningRequest& r) {
    PromptContext ctx;
    ctx.stage = PromptStage::Opening;
    ctx.persona = r.persona;
    ctx.vars = {{"topic", r.topic}};
    return ask(ctx, OutputShape::Belief);
}

std::vector<ChallengeDraft> LlmBackend::generate_challenges(const ChallengeRequest& r) {
    PromptContext ctx;
    ctx.stage = PromptStage::Challenge;
    ctx.persona = r.persona;
    ctx.vars = {{"round", std::to_string(r.round)}, {"max_challenges", std::to_string(r.max_challenges)},
                {"topic", r.topic}};
    ctx.blocks.push_back({"topic", r.topic, 0});
    add_belief(ctx.blocks, r.own, "your belief document");
    add_belief(ctx.blocks, r.opponent, "opponent belief document");
    ctx.blocks.push_back({"opponent vulnerability report", dump_block(to_json(r.vulnerabilities)), 0});
    if (!r.prior.empty()) {
        ojson prior = ojson::array();
        for (const auto& ex : r.prior)
            prior.push_back({{"round", ex.round}, {"text", ex.challenge.text}, {"verdict", to_string(ex.verdict.kind)}});
        ctx.blocks.push_back({"challenges already raised", dump_block(prior), 0});
    }
    auto v = ask(ctx, OutputShape::Challenges);
    std::vector<ChallengeDraft> out;
    for (const auto& item : v["challenges"]) out.push_back(challenge_draft_from_json(item));
    return out;
}

std::vector<Rebuttal> LlmBackend::generate_rebuttals(const RebuttalRequest& r) {
    PromptContext ctx;
    ctx.stage = PromptStage::Rebuttal;
    ctx.persona = r.persona;
    ctx.vars = {{"round", std::to_string(r.round)}, {"topic", r.topic}};
    add_belief(ctx.blocks, r.own, "your belief document");
    ojson challenges = ojson::array();
    for (const auto& c : r.challenges) challenges.push_back(to_json(c));
    ctx.blocks.push_back({"challenges received", dump_block(challenges), 0});
    auto v = ask(ctx, OutputShape::Rebuttals);
    std::vector<Rebuttal> out;
    for (const auto& item : v["rebuttals"]) out.push_back(rebuttal_from_json(item));
    return out;
}

std::vector<Patch> LlmBackend::revise_phase1(const Phase1Request& r) {
    PromptContext ctx;
    ctx.stage = PromptStage::Phase1;
    ctx.persona = r.persona;
    ctx.vars = {{"round", std::to_string(r.round)}, {"topic", r.topic}};
    add_belief(ctx.blocks, r.belief, "your belief document");
    ojson exchanges = ojson::array();
    for (const auto& ex : r.exchanges) exchanges.push_back(to_json(ex));
    ctx.blocks.push_back({"adjudicated exchanges", dump_block(exchanges), 0});
    ctx.blocks.push_back({"obligations", dump_block(to_json(r.obligations)), 0});
    if (r.previous) ctx.blocks.push_back({"unmet obligations from your last attempt", r.previous->to_text(), 0});
    auto v = ask(ctx, OutputShape::Patches);
    std::vector<Patch> out;
    for (const auto& item : v["patches"]) out.push_back(*patch_from_json(item));
    return out;
}

Phase2Response LlmBackend::revise_phase2(const Phase2Request& r) {
    PromptContext ctx;
    ctx.stage = PromptStage::Phase2;
    ctx.persona = r.persona;
    ctx.vars = {{"round", std::to_string(r.round)}, {"topic", r.topic}};
    add_belief(ctx.blocks, r.belief, "your belief document");
    ctx.blocks.push_back({"obligation compliance", r.compliance.to_text(), 0});
    ctx.analysis = r.analysis;
    return phase2_response_from_json(ask(ctx, OutputShape::Phase2));
}

ScoreResponse LlmBackend::score_pair(const ScoreRequest& r) {
    // The adjudicator sees roles only, never agent ids or personas.
    PromptContext ctx;
    ctx.stage = PromptStage::Adjudicate;
    ctx.logic_system = r.params.logic_system;
    ctx.ethics_system = r.params.ethics_system;
    ctx.vars = {{"round", std::to_string(r.round)}};
    ojson challenge;
    challenge["text"] = r.challenge.text;
    challenge["targets"] = encode_ids(r.challenge.targets);
    challenge["attack_type"] = to_string(r.challenge.attack_type);
    challenge["attack_strategy"] = r.challenge.attack_strategy;
    ojson rebuttal;
    rebuttal["action"] = to_string(r.rebuttal.action);
    rebuttal["text"] = r.rebuttal.text;
    ctx.blocks.push_back({"Challenger's challenge", dump_block(challenge), 0});
    ctx.blocks.push_back({"Defender's rebuttal", dump_block(rebuttal), 0});
    ctx.blocks.push_back({"Challenger's belief excerpt", dump_block(r.challenger_excerpt), 0});
    ctx.blocks.push_back({"Defender's belief excerpt", dump_block(r.defender_excerpt), 0});
    return score_response_from_json(ask(ctx, OutputShape::Scores));
}

} // namespace chal
