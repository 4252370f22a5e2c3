#include "testforge/prompts.hpp"

#include <filesystem>

#include "testforge/suite_builder.hpp"
#include "testforge/text.hpp"

namespace testforge {

namespace {

using nlohmann::json;

std::string render(std::string text,
                   const std::vector<std::pair<std::string, std::string>>& slots) {
    for (const auto& [key, value] : slots) text = replace_all(std::move(text), "{{" + key + "}}", value);
    return text;
}

std::string strip_code_fences(const std::string& text) {
    std::string t = trim(text);
    if (!starts_with(t, "```")) return t;
    size_t first_newline = t.find('\n');
    if (first_newline == std::string::npos) return t;
    size_t closing = t.rfind("```");
    if (closing <= first_newline) return t;
    return trim(t.substr(first_newline + 1, closing - first_newline - 1));
}

}  // namespace

PromptTemplates load_prompt_templates(const std::string& directory) {
    std::filesystem::path dir(directory);
    auto load = [&](const char* name) { return read_file((dir / name).string()); };
    PromptTemplates t;
    t.detailed_system = load("detailed_system.txt");
    t.detailed_user = load("detailed_user.txt");
    t.extra_code_section = load("extra_code_section.txt");
    t.testgen_full_system = load("testgen_full_system.txt");
    t.testgen_full_user = load("testgen_full_user.txt");
    t.testgen_function_system = load("testgen_function_system.txt");
    t.testgen_function_user = load("testgen_function_user.txt");
    t.retry_detailed = load("retry_detailed.txt");
    t.retry_testgen_full = load("retry_testgen_full.txt");
    t.retry_testgen_function = load("retry_testgen_function.txt");
    return t;
}

json DetailedStatement::to_json() const {
    // Explicit ordered construction keeps the canonical key order.
    json j;
    j["Scenario"] = scenario;
    j["Inputs"] = inputs;
    j["Outputs"] = outputs;
    j["Example"] = example;
    j["Limits"] = limits;
    return j;
}

DetailedStatement DetailedStatement::from_json(const json& j) {
    DetailedStatement d;
    d.scenario = j.at("Scenario").get<std::string>();
    d.inputs = j.at("Inputs").get<std::string>();
    d.outputs = j.at("Outputs").get<std::string>();
    d.example = j.at("Example").get<std::string>();
    d.limits = j.at("Limits").get<std::string>();
    return d;
}

ChatRequest build_detailed_statement_prompt(const Problem& problem,
                                            const PromptTemplates& templates,
                                            const LlmSettings& settings) {
    if (problem.excluded)
        throw SchemaMismatch("problem " + problem.id + " is excluded: " + problem.excluded_reason);

    std::string extra_section;
    if (problem.extra_code && !trim(*problem.extra_code).empty())
        extra_section = render(templates.extra_code_section, {{"extra_code", *problem.extra_code}});

    ChatRequest request;
    request.model_id = settings.model_id;
    request.temperature = settings.temperature;
    request.response_format = ResponseFormat::JsonObject;
    request.messages.push_back({ChatRole::System, templates.detailed_system});
    request.messages.push_back(
        {ChatRole::User, render(templates.detailed_user,
                                {{"statement", problem.statement_text},
                                 {"reference_solution", problem.reference_solution},
                                 {"extra_code_section", extra_section}})});
    return request;
}

DetailedStatement parse_detailed_statement(const std::string& response_text) {
    std::string body = strip_code_fences(response_text);
    json doc;
    try {
        doc = json::parse(body);
    } catch (const json::exception& e) {
        throw NotJson(std::string("response is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw NotJson("response JSON is not an object");

    // Accept capitalization drift from the model.
    std::map<std::string, json> by_lower;
    for (auto it = doc.begin(); it != doc.end(); ++it) by_lower[lowercase(it.key())] = it.value();

    auto section = [&](const char* key) -> std::string {
        auto it = by_lower.find(lowercase(key));
        if (it == by_lower.end()) throw MissingSection(key);
        if (it->second.is_string()) return it->second.get<std::string>();
        return it->second.dump(2);  // model nested the section; keep it readable
    };

    DetailedStatement d;
    d.scenario = section("Scenario");
    d.inputs = section("Inputs");
    d.outputs = section("Outputs");
    d.example = section("Example");
    d.limits = section("Limits");
    for (const char* key : {"Scenario", "Inputs", "Outputs", "Limits"}) {
        auto it = by_lower.find(lowercase(key));
        if (it->second.is_string() && trim(it->second.get<std::string>()).empty())
            throw MissingSection(key);
    }
    return d;
}

HarnessContract make_harness_contract(const Problem& problem) {
    HarnessContract contract;
    if (problem.kind == ProblemKind::FunctionImplementation)
        contract.template_text = prompt_harness_template(problem.extra_code);
    return contract;
}

ChatRequest build_testgen_prompt(const Problem& problem, const DetailedStatement& detailed,
                                 const HarnessContract& contract,
                                 const PromptTemplates& templates, const LlmSettings& settings) {
    ChatRequest request;
    request.model_id = settings.model_id;
    request.temperature = settings.temperature;
    request.response_format = ResponseFormat::Text;
    if (problem.kind == ProblemKind::FullProgram) {
        request.messages.push_back({ChatRole::System, templates.testgen_full_system});
        request.messages.push_back(
            {ChatRole::User, render(templates.testgen_full_user,
                                    {{"detailed_statement", detailed.pretty()},
                                     {"reference_solution", problem.reference_solution}})});
    } else {
        request.messages.push_back({ChatRole::System, templates.testgen_function_system});
        request.messages.push_back(
            {ChatRole::User, render(templates.testgen_function_user,
                                    {{"detailed_statement", detailed.pretty()},
                                     {"reference_solution", problem.reference_solution},
                                     {"harness_template", contract.template_text}})});
    }
    return request;
}

std::optional<std::string> extract_code_block(const std::string& response_text) {
    std::vector<std::string> lines = split_lines(response_text);
    std::optional<size_t> open_line;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (!starts_with(trim(lines[i]), "```")) continue;
        if (!open_line) {
            open_line = i;
            continue;
        }
        std::string block;
        for (size_t k = *open_line + 1; k < i; ++k) {
            block += lines[k];
            block.push_back('\n');
        }
        return block;
    }
    return std::nullopt;
}

std::string validate_testgen_response(ProblemKind kind, const std::string& response_text,
                                      const MarkerConvention& markers) {
    if (kind == ProblemKind::FullProgram) {
        auto block = extract_code_block(response_text);
        if (!block) throw ParseError("response contains no fenced code block");
        if (trim(*block).empty()) throw ParseError("fenced code block is empty");
        return *block;
    }
    std::string script = extract_code_block(response_text).value_or(response_text);
    parse_test_script(script, markers);  // throws ParseError when markers are broken
    return script;
}

namespace {

json transcript_entry(const std::string& label, const ChatRequest& request,
                      const ChatResponse& response) {
    return json{{"label", label},
                {"request", chat_request_to_json(request)},
                {"response_text", response.text},
                {"prompt_tokens", response.token_usage.prompt},
                {"completion_tokens", response.token_usage.completion}};
}

ChatRequest with_retry_message(ChatRequest request, const std::string& retry_template,
                               const std::string& failure) {
    request.messages.push_back(
        {ChatRole::User, render(retry_template, {{"failure", failure}})});
    return request;
}

}  // namespace

GenerationResult generate_suite_source(const Problem& problem, Provider& provider,
                                       const PromptTemplates& templates,
                                       const LlmSettings& settings,
                                       const HarnessContract& contract, TokenLedger& ledger) {
    json transcript = json::array();
    TokenUsage total_usage;

    auto call = [&](const ChatRequest& request, const char* label) {
        ChatResponse response = complete_chat(request, provider, ledger, label);
        total_usage.prompt += response.token_usage.prompt;
        total_usage.completion += response.token_usage.completion;
        transcript.push_back(transcript_entry(label, request, response));
        return response;
    };

    // Prompt 1: detailed problem statement, one corrective retry.
    ChatRequest req1 = build_detailed_statement_prompt(problem, templates, settings);
    ChatResponse resp1 = call(req1, "prompt1");
    DetailedStatement detailed;
    try {
        detailed = parse_detailed_statement(resp1.text);
    } catch (const Error& first_failure) {
        ChatRequest retry = with_retry_message(req1, templates.retry_detailed, first_failure.what());
        ChatResponse resp = call(retry, "prompt1");
        try {
            detailed = parse_detailed_statement(resp.text);
        } catch (const Error& second_failure) {
            throw GenerationFailed("detailed statement still malformed after retry: " +
                                       std::string(second_failure.what()),
                                   transcript);
        }
    }

    // Prompt 2: test generation, one corrective retry.
    ChatRequest req2 = build_testgen_prompt(problem, detailed, contract, templates, settings);
    ChatResponse resp2 = call(req2, "prompt2");
    std::string source;
    try {
        source = validate_testgen_response(problem.kind, resp2.text, contract.markers);
    } catch (const Error& first_failure) {
        const std::string& retry_template = problem.kind == ProblemKind::FullProgram
                                                ? templates.retry_testgen_full
                                                : templates.retry_testgen_function;
        ChatRequest retry = with_retry_message(req2, retry_template, first_failure.what());
        ChatResponse resp = call(retry, "prompt2");
        try {
            source = validate_testgen_response(problem.kind, resp.text, contract.markers);
        } catch (const Error& second_failure) {
            throw GenerationFailed("test generation response still malformed after retry: " +
                                       std::string(second_failure.what()),
                                   transcript);
        }
    }

    GenerationResult result;
    result.artifact.kind = problem.kind == ProblemKind::FullProgram ? ArtifactKind::GeneratorScript
                                                                    : ArtifactKind::TestScript;
    result.artifact.source_text = source;
    result.artifact.token_usage = total_usage;
    result.detailed = detailed;
    result.transcript = std::move(transcript);
    return result;
}

}  // namespace testforge
