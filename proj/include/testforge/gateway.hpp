#pragma once

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

namespace testforge {

enum class ChatRole { System, User };
enum class ResponseFormat { Text, JsonObject };

struct ChatMessage {
    ChatRole role = ChatRole::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model_id = "gpt-4-0125-preview";
    double temperature = 0.2;
    ResponseFormat response_format = ResponseFormat::Text;
    std::vector<ChatMessage> messages;

    bool operator==(const ChatRequest&) const = default;
};

struct TokenUsage {
    long prompt = 0;
    long completion = 0;

    long total() const { return prompt + completion; }
    bool operator==(const TokenUsage&) const = default;
};

struct ChatResponse {
    std::string text;
    TokenUsage token_usage;
    std::chrono::milliseconds latency{0};
};

// Pure function of (model_id, temperature, response_format, messages); keys
// the content-addressed fixture store.
std::string request_digest(const ChatRequest& request);

// Canonical JSON form of a request (digest input, recordings, transcripts).
nlohmann::json chat_request_to_json(const ChatRequest& request);
ChatRequest chat_request_from_json(const nlohmann::json& j);

// Per-session accounting of token usage, grouped by caller-supplied label
// (e.g. "prompt1", "prompt2"). Internally synchronized.
class TokenLedger {
public:
    struct Entry {
        std::string label;
        TokenUsage usage;
    };
    struct Summary {
        long calls = 0;
        long prompt_tokens = 0;
        long completion_tokens = 0;
        long total_tokens = 0;
        double mean_total = 0.0;
    };

    void add(const std::string& label, TokenUsage usage);
    Summary summary(const std::string& label = "") const;  // empty label = everything
    std::vector<Entry> entries() const;
    // Estimated cost in USD given per-1k-token prices.
    double estimated_cost(double usd_per_1k_prompt, double usd_per_1k_completion) const;

private:
    mutable std::mutex mutex_;
    std::vector<Entry> entries_;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual ChatResponse complete(const ChatRequest& request) = 0;
    virtual std::string name() const = 0;
};

// Validates preconditions, dispatches to the provider, and records usage.
ChatResponse complete_chat(const ChatRequest& request, Provider& provider, TokenLedger& ledger,
                           const std::string& ledger_label);

// -- Replay / record ---------------------------------------------------------

// Serves recorded responses from <fixture_dir>/<digest>.json. Throws
// FixtureMiss when no recording exists for the request digest.
class ReplayProvider : public Provider {
public:
    explicit ReplayProvider(std::string fixture_dir);
    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "replay"; }

private:
    std::string fixture_dir_;
};

// Writes one recording per request digest.
void record_fixture(const std::string& fixture_dir, const ChatRequest& request,
                    const ChatResponse& response);
std::string fixture_path(const std::string& fixture_dir, const std::string& digest);

// Delegates to an inner provider and records every exchange.
class RecordingProvider : public Provider {
public:
    RecordingProvider(std::shared_ptr<Provider> inner, std::string fixture_dir);
    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "record"; }

private:
    std::shared_ptr<Provider> inner_;
    std::string fixture_dir_;
};

// -- Live --------------------------------------------------------------------

struct HttpResult {
    int status = 0;
    std::string body;
};

// Posts a JSON body and returns status + body. Injectable so transport
// behaviour is testable without a network.
using HttpTransport =
    std::function<HttpResult(const std::string& url, const std::string& api_key,
                             const std::string& json_body)>;

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{500};  // doubles per attempt
};

class LiveProvider : public Provider {
public:
    // api_key must be non-empty; CLI-level construction reads it from the
    // TESTFORGE_API_KEY environment variable and raises AuthMissing.
    LiveProvider(std::string api_key, std::string endpoint_url, RetryPolicy retry = {},
                 HttpTransport transport = nullptr);
    ChatResponse complete(const ChatRequest& request) override;
    std::string name() const override { return "live"; }

private:
    std::string api_key_;
    std::string endpoint_url_;
    RetryPolicy retry_;
    HttpTransport transport_;
};

inline constexpr const char* kApiKeyEnvVar = "TESTFORGE_API_KEY";
// When set (to any non-empty value) every live HTTP call throws
// NetworkForbidden; replay runs use it to prove they are offline.
inline constexpr const char* kForbidNetworkEnvVar = "TESTFORGE_FORBID_NETWORK";

// Reads kApiKeyEnvVar and builds a live provider; throws AuthMissing when the
// variable is unset or empty.
std::shared_ptr<Provider> make_live_provider_from_env(const std::string& endpoint_url,
                                                      RetryPolicy retry = {});

}  // namespace testforge
