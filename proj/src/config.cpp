#include "testforge/config.hpp"

#include <thread>

#include <json.hpp>

#include "testforge/errors.hpp"
#include "testforge/text.hpp"

namespace testforge {

namespace {

using nlohmann::json;

std::chrono::milliseconds ms(const json& j, const char* key,
                             std::chrono::milliseconds fallback) {
    if (!j.contains(key)) return fallback;
    return std::chrono::milliseconds(j.at(key).get<long>());
}

}  // namespace

Config config_from_json_text(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }

    Config c;
    c.workers = std::max(1u, std::thread::hardware_concurrency());
    try {
        c.work_root = doc.value("work_root", c.work_root);
        if (doc.contains("toolchain")) {
            const json& t = doc.at("toolchain");
            c.toolchain.command = t.value("command", c.toolchain.command);
            if (t.contains("flags")) c.toolchain.flags = t.at("flags").get<std::vector<std::string>>();
            if (t.contains("libs")) c.toolchain.libs = t.at("libs").get<std::vector<std::string>>();
            c.toolchain.compile_timeout = ms(t, "compile_timeout_ms", c.toolchain.compile_timeout);
        }
        if (doc.contains("interpreter")) {
            const json& t = doc.at("interpreter");
            if (t.contains("command"))
                c.interpreter.command = t.at("command").get<std::vector<std::string>>();
            c.interpreter.timeout = ms(t, "timeout_ms", c.interpreter.timeout);
        }
        c.llm.model_id = doc.value("model_id", c.llm.model_id);
        c.llm.temperature = doc.value("temperature", c.llm.temperature);
        if (doc.contains("limits")) {
            const json& t = doc.at("limits");
            c.run_limits.wall_timeout = ms(t, "run_timeout_ms", c.run_limits.wall_timeout);
            if (t.contains("memory_mb"))
                c.run_limits.memory_bytes = t.at("memory_mb").get<size_t>() * 1024 * 1024;
            if (t.contains("output_cap_kb"))
                c.run_limits.output_cap_bytes = t.at("output_cap_kb").get<size_t>() * 1024;
        }
        if (doc.contains("comparison_policy"))
            c.policy = comparison_policy_from_string(doc.at("comparison_policy").get<std::string>());
        c.workers = doc.value("workers", c.workers);
        if (doc.contains("seeds"))
            c.seeds = doc.at("seeds").get<std::map<std::string, uint32_t>>();
        c.per_test_seeds = doc.value("per_test_seeds", c.per_test_seeds);
        c.fixture_store = doc.value("fixture_store", c.fixture_store);
        c.prompts_dir = doc.value("prompts_dir", c.prompts_dir);
        c.api_endpoint = doc.value("api_endpoint", c.api_endpoint);
        if (doc.contains("retry")) {
            const json& t = doc.at("retry");
            c.retry.max_attempts = t.value("max_attempts", c.retry.max_attempts);
            c.retry.backoff_base = ms(t, "backoff_base_ms", c.retry.backoff_base);
        }
        if (doc.contains("csv_columns")) {
            const json& t = doc.at("csv_columns");
            c.csv_schema.code_column = t.value("code", c.csv_schema.code_column);
            c.csv_schema.student_id_column = t.value("student_id", c.csv_schema.student_id_column);
            c.csv_schema.submitted_at_column =
                t.value("submitted_at", c.csv_schema.submitted_at_column);
            c.csv_schema.correct_column = t.value("correct", c.csv_schema.correct_column);
        }
        c.usd_per_1k_prompt_tokens =
            doc.value("usd_per_1k_prompt_tokens", c.usd_per_1k_prompt_tokens);
        c.usd_per_1k_completion_tokens =
            doc.value("usd_per_1k_completion_tokens", c.usd_per_1k_completion_tokens);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    validate_config(c);
    return c;
}

Config load_config(const std::string& path) { return config_from_json_text(read_file(path)); }

void validate_config(const Config& c) {
    if (c.workers < 1) throw ConfigError("workers must be >= 1");
    if (c.llm.temperature < 0.0 || c.llm.temperature > 2.0)
        throw ConfigError("temperature must be in [0,2]");
    if (c.run_limits.wall_timeout.count() <= 0 || c.toolchain.compile_timeout.count() <= 0 ||
        c.interpreter.timeout.count() <= 0)
        throw ConfigError("timeouts must be positive");
    if (c.retry.max_attempts < 1) throw ConfigError("retry attempts must be >= 1");
    if (c.interpreter.command.empty()) throw ConfigError("interpreter command must not be empty");
}

}  // namespace testforge
