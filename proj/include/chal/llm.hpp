#pragma once

#include "chal/agent.hpp"
#include "chal/prompt.hpp"
#include "chal/value_systems.hpp"

#include <json.hpp>

#include <memory>
#include <string>
#include <vector>

namespace chal {

enum class ProviderFamily { OpenAI, Anthropic, Gemini };

std::string_view to_string(ProviderFamily family) noexcept;

/// Connection settings for one chat-completion endpoint. The credential is referenced by
/// environment variable name and never stored or serialized.
struct ChatProviderConfig {
    ProviderFamily family = ProviderFamily::OpenAI;
    std::string endpoint;  // full URL; "{model}" is replaced by the model name
    std::string model;
    std::string credential_env;
    int timeout_seconds = 120;
    int max_retries = 3;  // corrective retries after malformed output
    nlohmann::json options = nlohmann::json::object();  // merged into the request body

    /// Throws ConfigError.
    static ChatProviderConfig from_json(const nlohmann::json& value);
    nlohmann::ordered_json to_json() const;
};

struct ChatMessage {
    std::string role;  // system, user or assistant
    std::string content;
};

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    /// One request; throws BackendError on transport or protocol failure.
    virtual std::string complete(const std::vector<ChatMessage>& messages) = 0;
};

/// How a provider family lays out requests and replies.
struct ProviderShape {
    std::string auth_header;
    std::string auth_prefix;
    std::vector<std::pair<std::string, std::string>> extra_headers;
    std::string reply_pointer;  // JSON pointer to the reply text
};

const ProviderShape& provider_shape(ProviderFamily family);

nlohmann::json build_request_body(const ChatProviderConfig& config, const std::vector<ChatMessage>& messages);

/// Reply text at the family's pointer; throws BackendError when absent.
std::string extract_reply(ProviderFamily family, const nlohmann::json& response);

/// Header list with credential values replaced by "***", for logging.
std::vector<std::pair<std::string, std::string>> redact_headers(
    const std::vector<std::pair<std::string, std::string>>& headers, const ProviderShape& shape);

class HttpChatProvider final : public ChatProvider {
public:
    explicit HttpChatProvider(ChatProviderConfig config);
    std::string complete(const std::vector<ChatMessage>& messages) override;

private:
    ChatProviderConfig config_;
};

/// Both backend contracts over a chat provider: prompts are assembled from the registries,
/// replies parsed by shape, and malformed replies answered with a corrective prompt up to
/// max_retries times.
class LlmBackend final : public CouncilBackend, public AdjudicatorBackend {
public:
    LlmBackend(std::shared_ptr<ChatProvider> provider, const Registries& registries, int max_retries,
               std::size_t token_budget);

    nlohmann::json generate_opening(const OpeningRequest& request) override;
    std::vector<ChallengeDraft> generate_challenges(const ChallengeRequest& request) override;
    std::vector<Rebuttal> generate_rebuttals(const RebuttalRequest& request) override;
    std::vector<Patch> revise_phase1(const Phase1Request& request) override;
    Phase2Response revise_phase2(const Phase2Request& request) override;
    ScoreResponse score_pair(const ScoreRequest& request) override;

    /// Sends the prompt and returns the first reply of the requested shape.
    nlohmann::json ask(const PromptContext& context, OutputShape shape);

private:
    std::shared_ptr<ChatProvider> provider_;
    const Registries& registries_;
    int max_retries_;
    std::size_t token_budget_;
};

} // namespace chal
