#include "testforge/gateway.hpp"

#include <cstdlib>
#include <filesystem>
#include <thread>

#include <json.hpp>

#include "testforge/errors.hpp"
#include "testforge/http_transport.hpp"
#include "testforge/json_util.hpp"
#include "testforge/sha256.hpp"
#include "testforge/text.hpp"

namespace testforge {

namespace {

using nlohmann::json;

const char* role_name(ChatRole role) { return role == ChatRole::System ? "system" : "user"; }

ChatRole role_from_string(const std::string& s) {
    if (s == "system") return ChatRole::System;
    if (s == "user") return ChatRole::User;
    throw SchemaMismatch("unknown chat role: " + s);
}

const char* format_name(ResponseFormat f) {
    return f == ResponseFormat::JsonObject ? "json_object" : "text";
}

ResponseFormat format_from_string(const std::string& s) {
    if (s == "json_object") return ResponseFormat::JsonObject;
    if (s == "text") return ResponseFormat::Text;
    throw SchemaMismatch("unknown response format: " + s);
}

void validate_request(const ChatRequest& r) {
    bool has_user = false;
    for (const auto& m : r.messages)
        if (m.role == ChatRole::User) has_user = true;
    if (!has_user) throw SchemaMismatch("chat request needs at least one user message");
    if (r.temperature < 0.0 || r.temperature > 2.0)
        throw SchemaMismatch("temperature out of range [0,2]");
}

bool network_forbidden() {
    const char* v = std::getenv(kForbidNetworkEnvVar);
    return v != nullptr && *v != '\0';
}

}  // namespace

nlohmann::json chat_request_to_json(const ChatRequest& r) {
    json messages = json::array();
    for (const auto& m : r.messages)
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    return json{{"model_id", r.model_id},
                {"temperature", r.temperature},
                {"response_format", format_name(r.response_format)},
                {"messages", messages}};
}

ChatRequest chat_request_from_json(const nlohmann::json& j) {
    ChatRequest r;
    r.model_id = j.at("model_id").get<std::string>();
    r.temperature = j.at("temperature").get<double>();
    r.response_format = format_from_string(j.at("response_format").get<std::string>());
    for (const auto& m : j.at("messages"))
        r.messages.push_back(
            {role_from_string(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
    return r;
}

std::string request_digest(const ChatRequest& request) {
    // nlohmann serializes object keys sorted, so dump() is canonical.
    return sha256_hex(chat_request_to_json(request).dump());
}

void TokenLedger::add(const std::string& label, TokenUsage usage) {
    std::lock_guard<std::mutex> lock(mutex_);
    entries_.push_back({label, usage});
}

TokenLedger::Summary TokenLedger::summary(const std::string& label) const {
    std::lock_guard<std::mutex> lock(mutex_);
    Summary s;
    for (const auto& e : entries_) {
        if (!label.empty() && e.label != label) continue;
        ++s.calls;
        s.prompt_tokens += e.usage.prompt;
        s.completion_tokens += e.usage.completion;
        s.total_tokens += e.usage.total();
    }
    if (s.calls > 0) s.mean_total = double(s.total_tokens) / double(s.calls);
    return s;
}

std::vector<TokenLedger::Entry> TokenLedger::entries() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return entries_;
}

double TokenLedger::estimated_cost(double usd_per_1k_prompt, double usd_per_1k_completion) const {
    Summary s = summary();
    return s.prompt_tokens / 1000.0 * usd_per_1k_prompt +
           s.completion_tokens / 1000.0 * usd_per_1k_completion;
}

ChatResponse complete_chat(const ChatRequest& request, Provider& provider, TokenLedger& ledger,
                           const std::string& ledger_label) {
    validate_request(request);
    ChatResponse response = provider.complete(request);
    ledger.add(ledger_label, response.token_usage);
    return response;
}

// -- Replay / record ---------------------------------------------------------

std::string fixture_path(const std::string& fixture_dir, const std::string& digest) {
    return (std::filesystem::path(fixture_dir) / (digest + ".json")).string();
}

ReplayProvider::ReplayProvider(std::string fixture_dir) : fixture_dir_(std::move(fixture_dir)) {}

ChatResponse ReplayProvider::complete(const ChatRequest& request) {
    std::string digest = request_digest(request);
    std::string path = fixture_path(fixture_dir_, digest);
    if (!std::filesystem::exists(path))
        throw FixtureMiss("no recording for request digest " + digest + " in " + fixture_dir_);
    json doc;
    try {
        doc = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw FixtureMiss("corrupt recording " + path + ": " + e.what());
    }
    ChatResponse r;
    r.text = doc.at("response").at("text").get<std::string>();
    r.token_usage.prompt = doc.at("response").at("prompt_tokens").get<long>();
    r.token_usage.completion = doc.at("response").at("completion_tokens").get<long>();
    r.latency = std::chrono::milliseconds(doc.at("response").value("latency_ms", 0));
    return r;
}

void record_fixture(const std::string& fixture_dir, const ChatRequest& request,
                    const ChatResponse& response) {
    std::error_code ec;
    std::filesystem::create_directories(fixture_dir, ec);
    if (ec) throw IoError("cannot create fixture dir " + fixture_dir + ": " + ec.message());
    std::string digest = request_digest(request);
    json doc{{"digest", digest},
             {"request", chat_request_to_json(request)},
             {"response",
              {{"text", response.text},
               {"prompt_tokens", response.token_usage.prompt},
               {"completion_tokens", response.token_usage.completion},
               {"total_tokens", response.token_usage.total()},
               {"latency_ms", response.latency.count()}}}};
    write_file_atomic(fixture_path(fixture_dir, digest), doc.dump(2) + "\n");
}

RecordingProvider::RecordingProvider(std::shared_ptr<Provider> inner, std::string fixture_dir)
    : inner_(std::move(inner)), fixture_dir_(std::move(fixture_dir)) {}

ChatResponse RecordingProvider::complete(const ChatRequest& request) {
    ChatResponse response = inner_->complete(request);
    record_fixture(fixture_dir_, request, response);
    return response;
}

// -- Live --------------------------------------------------------------------

namespace {

json live_body(const ChatRequest& r) {
    json messages = json::array();
    for (const auto& m : r.messages)
        messages.push_back({{"role", role_name(m.role)}, {"content", m.content}});
    json body{{"model", r.model_id}, {"temperature", r.temperature}, {"messages", messages}};
    if (r.response_format == ResponseFormat::JsonObject)
        body["response_format"] = {{"type", "json_object"}};
    return body;
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status < 600); }

}  // namespace

LiveProvider::LiveProvider(std::string api_key, std::string endpoint_url, RetryPolicy retry,
                           HttpTransport transport)
    : api_key_(std::move(api_key)),
      endpoint_url_(std::move(endpoint_url)),
      retry_(retry),
      transport_(std::move(transport)) {
    if (api_key_.empty()) throw AuthMissing("live provider requires a non-empty API key");
}

ChatResponse LiveProvider::complete(const ChatRequest& request) {
    if (network_forbidden())
        throw NetworkForbidden("live chat-completion call blocked: " +
                               std::string(kForbidNetworkEnvVar) + " is set");
    HttpTransport transport = transport_ ? transport_ : default_http_transport();
    std::string body = live_body(request).dump();

    std::string last_error;
    for (int attempt = 1; attempt <= retry_.max_attempts; ++attempt) {
        if (attempt > 1) {
            auto delay = retry_.backoff_base * (1 << (attempt - 2));
            std::this_thread::sleep_for(delay);
        }
        HttpResult result;
        auto start = std::chrono::steady_clock::now();
        try {
            result = transport(endpoint_url_, api_key_, body);
        } catch (const Error&) {
            throw;
        } catch (const std::exception& e) {
            last_error = e.what();
            continue;  // network-level failure, retry
        }
        auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - start);
        if (transient_status(result.status)) {
            last_error = "HTTP " + std::to_string(result.status) + ": " + result.body;
            continue;
        }
        if (result.status != 200)
            throw TransportError("chat completion failed with HTTP " +
                                 std::to_string(result.status) + ": " + result.body);
        try {
            json doc = json::parse(result.body);
            ChatResponse response;
            response.text = doc.at("choices").at(0).at("message").at("content").get<std::string>();
            response.token_usage.prompt = doc.at("usage").at("prompt_tokens").get<long>();
            response.token_usage.completion = doc.at("usage").at("completion_tokens").get<long>();
            response.latency = elapsed;
            return response;
        } catch (const json::exception& e) {
            throw TransportError(std::string("unexpected chat completion payload: ") + e.what());
        }
    }
    throw RateLimited("chat completion still failing after " +
                      std::to_string(retry_.max_attempts) + " attempts: " + last_error);
}

std::shared_ptr<Provider> make_live_provider_from_env(const std::string& endpoint_url,
                                                      RetryPolicy retry) {
    const char* key = std::getenv(kApiKeyEnvVar);
    if (key == nullptr || *key == '\0')
        throw AuthMissing(std::string("environment variable ") + kApiKeyEnvVar + " is not set");
    return std::make_shared<LiveProvider>(key, endpoint_url, retry);
}

}  // namespace testforge
