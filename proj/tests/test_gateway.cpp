#include <doctest.h>

#include <cstdlib>
#include <set>
#include <thread>

#include "test_util.hpp"
#include "testforge/errors.hpp"
#include "testforge/gateway.hpp"

using namespace testforge;

TEST_SUITE_BEGIN("gateway");

namespace {

ChatRequest sample_request() {
    ChatRequest r;
    r.response_format = ResponseFormat::JsonObject;
    r.messages = {{ChatRole::System, "You are a tester."},
                  {ChatRole::User, "Summarize problem X."}};
    return r;
}

ChatResponse sample_response(const std::string& text = "{\"ok\": true}") {
    ChatResponse resp;
    resp.text = text;
    resp.token_usage = {120, 30};
    return resp;
}

}  // namespace

TEST_CASE("digest is a pure function of every request field") {
    ChatRequest a = sample_request();
    ChatRequest b = sample_request();
    CHECK(request_digest(a) == request_digest(b));

    b.temperature = 0.3;
    CHECK(request_digest(a) != request_digest(b));

    b = sample_request();
    b.model_id = "other-model";
    CHECK(request_digest(a) != request_digest(b));

    b = sample_request();
    b.response_format = ResponseFormat::Text;
    CHECK(request_digest(a) != request_digest(b));

    b = sample_request();
    b.messages[1].content += "!";
    CHECK(request_digest(a) != request_digest(b));
}

TEST_CASE("record then replay returns the identical response") {
    tftest::TempDir store("fixtures");
    ChatRequest request = sample_request();
    ChatResponse response = sample_response("the recorded text\nwith lines");
    record_fixture(store.path(), request, response);

    ReplayProvider replay(store.path());
    TokenLedger ledger;
    ChatResponse got = complete_chat(request, replay, ledger, "prompt1");
    CHECK(got.text == response.text);
    CHECK(got.token_usage.prompt == 120);
    CHECK(got.token_usage.completion == 30);
    CHECK(got.token_usage.total() == 150);
    CHECK(ledger.summary("prompt1").calls == 1);
    CHECK(ledger.summary("prompt1").total_tokens == 150);
}

TEST_CASE("changed temperature misses the fixture store") {
    tftest::TempDir store("fixtures-miss");
    ChatRequest request = sample_request();
    record_fixture(store.path(), request, sample_response());

    ChatRequest hotter = request;
    hotter.temperature = 0.9;
    ReplayProvider replay(store.path());
    CHECK_THROWS_AS(replay.complete(hotter), FixtureMiss);
}

TEST_CASE("distinct requests get distinct digests across a fixture corpus") {
    std::vector<ChatRequest> corpus;
    for (int i = 0; i < 50; ++i) {
        ChatRequest r = sample_request();
        r.messages[1].content = "variant " + std::to_string(i);
        corpus.push_back(r);
    }
    std::set<std::string> digests;
    for (const auto& r : corpus) digests.insert(request_digest(r));
    CHECK(digests.size() == corpus.size());
}

TEST_CASE("recording provider wraps an inner provider") {
    struct Scripted : Provider {
        ChatResponse complete(const ChatRequest&) override { return {"scripted", {5, 7}, {}}; }
        std::string name() const override { return "scripted"; }
    };
    tftest::TempDir store("fixtures-rec");
    RecordingProvider recorder(std::make_shared<Scripted>(), store.path());
    ChatRequest request = sample_request();
    ChatResponse live = recorder.complete(request);
    CHECK(live.text == "scripted");

    ReplayProvider replay(store.path());
    ChatResponse replayed = replay.complete(request);
    CHECK(replayed.text == "scripted");
    CHECK(replayed.token_usage.prompt == 5);
    CHECK(replayed.token_usage.completion == 7);
}

TEST_CASE("live provider without api key raises AuthMissing") {
    unsetenv(kApiKeyEnvVar);
    CHECK_THROWS_AS(make_live_provider_from_env("https://example.invalid/v1/chat"), AuthMissing);
    CHECK_THROWS_AS(LiveProvider("", "https://example.invalid/v1/chat"), AuthMissing);
}

TEST_CASE("transient failures are retried, then surfaced") {
    int calls = 0;
    HttpTransport flaky = [&](const std::string&, const std::string&,
                              const std::string&) -> HttpResult {
        ++calls;
        if (calls < 3) return {429, "slow down"};
        return {200, R"({"choices":[{"message":{"content":"hello"}}],
                        "usage":{"prompt_tokens":11,"completion_tokens":3}})"};
    };
    RetryPolicy fast{3, std::chrono::milliseconds(0)};
    LiveProvider provider("key", "https://api.example/v1/chat", fast, flaky);
    ChatResponse response = provider.complete(sample_request());
    CHECK(calls == 3);
    CHECK(response.text == "hello");
    CHECK(response.token_usage.prompt == 11);

    calls = 0;
    HttpTransport always429 = [&](const std::string&, const std::string&,
                                  const std::string&) -> HttpResult {
        ++calls;
        return {429, "slow down"};
    };
    LiveProvider hopeless("key", "https://api.example/v1/chat", fast, always429);
    CHECK_THROWS_AS(hopeless.complete(sample_request()), RateLimited);
    CHECK(calls == 3);
}

TEST_CASE("non-transient HTTP errors are not retried") {
    int calls = 0;
    HttpTransport denied = [&](const std::string&, const std::string&,
                               const std::string&) -> HttpResult {
        ++calls;
        return {401, "bad key"};
    };
    LiveProvider provider("key", "https://api.example/v1/chat",
                          {3, std::chrono::milliseconds(0)}, denied);
    CHECK_THROWS_AS(provider.complete(sample_request()), TransportError);
    CHECK(calls == 1);
}

TEST_CASE("forbid-network guard blocks live calls even with a transport") {
    setenv(kForbidNetworkEnvVar, "1", 1);
    HttpTransport never = [](const std::string&, const std::string&,
                             const std::string&) -> HttpResult {
        FAIL("transport must not be reached");
        return {200, ""};
    };
    LiveProvider provider("key", "https://api.example/v1/chat",
                          {3, std::chrono::milliseconds(0)}, never);
    CHECK_THROWS_AS(provider.complete(sample_request()), NetworkForbidden);
    unsetenv(kForbidNetworkEnvVar);
}

TEST_CASE("requests without a user message are rejected") {
    ChatRequest r;
    r.messages = {{ChatRole::System, "only system"}};
    struct Never : Provider {
        ChatResponse complete(const ChatRequest&) override { return {}; }
        std::string name() const override { return "never"; }
    } never;
    TokenLedger ledger;
    CHECK_THROWS_AS(complete_chat(r, never, ledger, "x"), SchemaMismatch);

    ChatRequest hot = sample_request();
    hot.temperature = 2.5;
    CHECK_THROWS_AS(complete_chat(hot, never, ledger, "x"), SchemaMismatch);
}

TEST_CASE("token ledger is safe under concurrent writers") {
    TokenLedger ledger;
    std::vector<std::thread> writers;
    for (int w = 0; w < 4; ++w) {
        writers.emplace_back([&ledger, w] {
            for (int i = 0; i < 250; ++i)
                ledger.add(w % 2 ? "prompt1" : "prompt2", {10, 1});
        });
    }
    for (auto& t : writers) t.join();
    CHECK(ledger.summary().calls == 1000);
    CHECK(ledger.summary().total_tokens == 11000);
}

TEST_CASE("token ledger aggregates by label") {
    TokenLedger ledger;
    ledger.add("prompt1", {900, 20});
    ledger.add("prompt1", {950, 26});
    ledger.add("prompt2", {1400, 80});
    auto p1 = ledger.summary("prompt1");
    CHECK(p1.calls == 2);
    CHECK(p1.total_tokens == 900 + 20 + 950 + 26);
    CHECK(p1.mean_total == doctest::Approx((920.0 + 976.0) / 2.0));
    auto all = ledger.summary();
    CHECK(all.calls == 3);
    CHECK(all.prompt_tokens == 3250);
    // 3250 prompt @ $0.01/1k + 126 completion @ $0.03/1k
    CHECK(ledger.estimated_cost(0.01, 0.03) == doctest::Approx(0.03250 + 0.00378));
}

TEST_SUITE_END();
