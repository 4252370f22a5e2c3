#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "testforge/gateway.hpp"
#include "testforge/ingest.hpp"
#include "testforge/model.hpp"
#include "testforge/prompts.hpp"
#include "testforge/runner.hpp"
#include "testforge/suite_builder.hpp"

namespace testforge {

struct Config {
    std::string work_root = ".testforge-work";
    Toolchain toolchain;
    InterpreterConfig interpreter;
    LlmSettings llm;
    ProcessLimits run_limits;
    ComparisonPolicy policy = ComparisonPolicy::TrimTrailing;
    int workers = 2;
    std::map<std::string, uint32_t> seeds;  // per-problem overrides
    bool per_test_seeds = false;
    std::string fixture_store = "fixtures/llm";
    std::string prompts_dir = "prompts";
    std::string api_endpoint = "https://api.openai.com/v1/chat/completions";
    RetryPolicy retry;
    CsvSchema csv_schema;
    // gpt-4-0125-preview list prices, for the cost estimate in summaries
    double usd_per_1k_prompt_tokens = 0.01;
    double usd_per_1k_completion_tokens = 0.03;

    RunLimits run() const {
        RunLimits limits;
        limits.process = run_limits;
        limits.toolchain = toolchain;
        limits.work_root = work_root;
        return limits;
    }
    MaterializeConfig materialize(uint32_t problem_seed) const {
        MaterializeConfig m;
        m.limits = run();
        m.problem_seed = problem_seed;
        m.per_test_seeds = per_test_seeds;
        return m;
    }
};

// Loads and validates a JSON config document; missing keys keep defaults.
Config load_config(const std::string& path);
Config config_from_json_text(const std::string& json_text);
void validate_config(const Config& config);

}  // namespace testforge
