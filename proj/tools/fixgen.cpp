// Synthesizes the offline replay fixtures for the bundled example problems.
// The recordings are keyed by request digest, so whenever the prompt
// templates (or the prompt builders) change, rerun it with --export,
// --canned, --prompts and --out (defaults match the repo layout) and commit
// the regenerated store. Responses come from fixtures/canned/,
// one directory per problem with detailed.json (Prompt 1) and testgen.txt
// (Prompt 2).

#include <cstdio>
#include <filesystem>
#include <string>

#include <CLI11.hpp>

#include "testforge/gateway.hpp"
#include "testforge/ingest.hpp"
#include "testforge/prompts.hpp"
#include "testforge/text.hpp"

namespace tf = testforge;

namespace {

// Rough but deterministic stand-in for the provider's token accounting.
long approx_tokens(const std::string& text) {
    return static_cast<long>(text.size() / 4) + 1;
}

long approx_request_tokens(const tf::ChatRequest& request) {
    long total = 0;
    for (const auto& m : request.messages) total += approx_tokens(m.content);
    return total;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthesize replay fixtures for the bundled example problems"};
    std::string export_path = "fixtures/moodle/course_export.xml";
    std::string canned_dir = "fixtures/canned";
    std::string prompts_dir = "prompts";
    std::string out_dir = "fixtures/llm";
    std::string model_id = "gpt-4-0125-preview";
    double temperature = 0.2;
    app.add_option("--export", export_path, "Moodle XML quiz export");
    app.add_option("--canned", canned_dir, "canned response directory");
    app.add_option("--prompts", prompts_dir, "prompt template directory");
    app.add_option("--out", out_dir, "fixture store to write");
    app.add_option("--model", model_id, "model id baked into the requests");
    app.add_option("--temperature", temperature, "temperature baked into the requests");
    CLI11_PARSE(app, argc, argv);

    try {
        tf::PromptTemplates templates = tf::load_prompt_templates(prompts_dir);
        tf::LlmSettings settings{model_id, temperature};
        tf::MoodleParseResult parsed = tf::parse_moodle_xml(tf::read_file(export_path));

        int written = 0;
        for (const auto& problem : parsed.problems) {
            std::filesystem::path canned = std::filesystem::path(canned_dir) / problem.id;
            if (!std::filesystem::exists(canned / "detailed.json")) continue;

            std::string detailed_text = tf::read_file((canned / "detailed.json").string());
            std::string testgen_text = tf::read_file((canned / "testgen.txt").string());

            tf::ChatRequest req1 =
                tf::build_detailed_statement_prompt(problem, templates, settings);
            tf::ChatResponse resp1;
            resp1.text = detailed_text;
            resp1.token_usage = {approx_request_tokens(req1), approx_tokens(detailed_text)};
            tf::record_fixture(out_dir, req1, resp1);

            tf::DetailedStatement detailed = tf::parse_detailed_statement(detailed_text);
            tf::HarnessContract contract = tf::make_harness_contract(problem);
            tf::ChatRequest req2 =
                tf::build_testgen_prompt(problem, detailed, contract, templates, settings);
            tf::ChatResponse resp2;
            resp2.text = testgen_text;
            resp2.token_usage = {approx_request_tokens(req2), approx_tokens(testgen_text)};
            tf::record_fixture(out_dir, req2, resp2);

            std::printf("%s: recorded prompt1 %s and prompt2 %s\n", problem.id.c_str(),
                        tf::request_digest(req1).substr(0, 12).c_str(),
                        tf::request_digest(req2).substr(0, 12).c_str());
            written += 2;
        }
        std::printf("%d recordings written to %s\n", written, out_dir.c_str());
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "fixgen failed: %s\n", e.what());
        return 1;
    }
}
