#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "testforge/errors.hpp"
#include "testforge/gateway.hpp"
#include "testforge/model.hpp"
#include "testforge/runner.hpp"

namespace testforge {

// Prompt wording ships as data files, not code; see prompts/ in the repo.
struct PromptTemplates {
    std::string detailed_system;
    std::string detailed_user;
    std::string extra_code_section;
    std::string testgen_full_system;
    std::string testgen_full_user;
    std::string testgen_function_system;
    std::string testgen_function_user;
    std::string retry_detailed;
    std::string retry_testgen_full;
    std::string retry_testgen_function;
};

PromptTemplates load_prompt_templates(const std::string& directory);

// Structured problem summary produced by the first prompt.
struct DetailedStatement {
    std::string scenario;
    std::string inputs;
    std::string outputs;
    std::string example;  // may be empty
    std::string limits;

    nlohmann::json to_json() const;
    static DetailedStatement from_json(const nlohmann::json& j);
    std::string pretty() const { return to_json().dump(2); }

    bool operator==(const DetailedStatement&) const = default;
};

struct LlmSettings {
    std::string model_id = "gpt-4-0125-preview";
    double temperature = 0.2;
};

// What the test-generation prompt promises about the harness side.
struct HarnessContract {
    std::string template_text;  // shown to the model for function problems
    MarkerConvention markers;
    int random_iterations = 100;
};

enum class ArtifactKind { GeneratorScript, TestScript };

struct GenerationArtifact {
    ArtifactKind kind = ArtifactKind::GeneratorScript;
    std::string source_text;
    TokenUsage token_usage;  // across prompts and retries
};

struct GenerationResult {
    GenerationArtifact artifact;
    DetailedStatement detailed;
    nlohmann::json transcript;  // every request/response of the session
};

// Carries the full session transcript for debugging.
class GenerationFailed : public Error {
public:
    GenerationFailed(const std::string& message, nlohmann::json transcript)
        : Error("GenerationFailed", message), transcript_(std::move(transcript)) {}
    const nlohmann::json& transcript() const { return transcript_; }

private:
    nlohmann::json transcript_;
};


ChatRequest build_detailed_statement_prompt(const Problem& problem,
                                            const PromptTemplates& templates,
                                            const LlmSettings& settings);

// Parses the Prompt-1 response. Code fences are stripped first; the five keys
// are matched case-insensitively. Throws NotJson or MissingSection.
DetailedStatement parse_detailed_statement(const std::string& response_text);

ChatRequest build_testgen_prompt(const Problem& problem, const DetailedStatement& detailed,
                                 const HarnessContract& contract,
                                 const PromptTemplates& templates, const LlmSettings& settings);

// First fenced code block of a response, if any (language tag ignored).
std::optional<std::string> extract_code_block(const std::string& response_text);

// Validated test-generation source for the problem kind; throws on malformed
// responses (no code block / no marker pairs).
std::string validate_testgen_response(ProblemKind kind, const std::string& response_text,
                                      const MarkerConvention& markers);

// Runs Prompt 1 then Prompt 2, with one corrective retry per prompt on
// semantic parse failures. Token usage for every call lands in the ledger
// under "prompt1" / "prompt2".
GenerationResult generate_suite_source(const Problem& problem, Provider& provider,
                                       const PromptTemplates& templates,
                                       const LlmSettings& settings,
                                       const HarnessContract& contract, TokenLedger& ledger);

HarnessContract make_harness_contract(const Problem& problem);

}  // namespace testforge
