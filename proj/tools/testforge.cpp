// testforge: generate, run, and evaluate autograder test suites for CS1-level
// C problems. Subcommands mirror the pipeline stages; see README.md.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "testforge/bundle.hpp"
#include "testforge/config.hpp"
#include "testforge/errors.hpp"
#include "testforge/evaluator.hpp"
#include "testforge/gateway.hpp"
#include "testforge/grader.hpp"
#include "testforge/pipeline.hpp"
#include "testforge/prompts.hpp"
#include "testforge/text.hpp"

namespace tf = testforge;
using nlohmann::json;

namespace {

struct CommonOptions {
    std::string config_path;
    bool replay = false;
    bool record = false;
    bool force = false;
};

tf::Config load_config_or_default(const std::string& path) {
    if (!path.empty()) return tf::load_config(path);
    return tf::config_from_json_text("{}");
}

tf::ProviderMode provider_mode(const CommonOptions& opts) {
    if (opts.replay && opts.record) throw tf::UsageError("--replay and --record are exclusive");
    if (opts.replay) return tf::ProviderMode::Replay;
    if (opts.record) return tf::ProviderMode::Record;
    return tf::ProviderMode::Live;
}

void print_token_summary(const tf::TokenLedger& ledger, const tf::Config& config) {
    auto p1 = ledger.summary("prompt1");
    auto p2 = ledger.summary("prompt2");
    auto all = ledger.summary();
    if (all.calls == 0) return;
    std::fprintf(stderr,
                 "tokens: prompt1 %ld calls / %ld tokens, prompt2 %ld calls / %ld tokens, "
                 "total %ld (est. $%.4f)\n",
                 p1.calls, p1.total_tokens, p2.calls, p2.total_tokens, all.total_tokens,
                 ledger.estimated_cost(config.usd_per_1k_prompt_tokens,
                                       config.usd_per_1k_completion_tokens));
}

std::string clip(const std::string& text, size_t limit = 1200) {
    std::string shown = tf::sanitize_for_display(text);
    if (shown.size() <= limit) return shown;
    return shown.substr(0, limit) + "\n... (" + std::to_string(text.size()) + " bytes total)";
}

// Failing-test diff for one side of a mismatch, recomputed on demand.
void print_failing_tests(const tf::Bundle& bundle, const tf::Submission& submission,
                         tf::SuiteKind kind, const tf::Config& config) {
    const tf::TestSuite* suite = bundle.suite_for(kind);
    if (suite == nullptr) return;
    auto outputs = tf::run_suite(submission.code, *suite, bundle.problem, config.run());
    if (std::holds_alternative<tf::CompileFailure>(outputs)) {
        std::printf("  [%s] does not compile\n", tf::to_string(kind));
        return;
    }
    const auto& outs = std::get<std::vector<tf::TestOutput>>(outputs);
    auto active = suite->active_tests();
    for (size_t i = 0; i < active.size() && i < outs.size(); ++i) {
        const tf::Test* test = active[i];
        if (!test->expected_output) continue;
        if (tf::compare_output(outs[i], *test->expected_output, config.policy)) continue;
        std::printf("  [%s] test %d FAILED (origin %s)\n", tf::to_string(kind), test->index,
                    tf::to_string(test->origin));
        std::printf("  payload:\n%s\n", clip(test->payload).c_str());
        std::printf("  expected:\n%s\n", clip(*test->expected_output).c_str());
        std::printf("  actual:\n%s\n\n",
                    outs[i].produced ? clip(outs[i].text).c_str() : "(no output: crash/timeout)");
    }
}

int cmd_review(const std::string& bundle_dir, bool list_only, int submission_index,
               const std::string& cause, const std::string& validity, const std::string& note,
               bool interactive, const tf::Config& config) {
    tf::Bundle bundle = tf::load_bundle(bundle_dir);
    tf::Evaluation evaluation = tf::load_evaluation(bundle_dir);

    auto pending = [&] {
        std::vector<const tf::QuadrantRecord*> out;
        for (const auto& r : evaluation.records)
            if (r.needs_review()) out.push_back(&r);
        return out;
    };

    auto annotate_one = [&](int index, const std::string& cause_s, const std::string& validity_s,
                            const std::string& note_s) {
        tf::LedgerEntry entry;
        entry.problem_id = bundle.problem.id;
        entry.submission_index = index;
        entry.annotation.cause = tf::mismatch_cause_from_string(cause_s);
        entry.annotation.resolved_validity = tf::validity_from_string(validity_s);
        entry.annotation.note = note_s;
        entry.annotation.timestamp = tf::now_iso8601_utc();
        const char* user = std::getenv("USER");
        entry.annotation.annotator = user ? user : "unknown";
        tf::append_ledger_entry(tf::annotation_ledger_path(bundle_dir), entry);
    };

    if (submission_index >= 0) {
        if (cause.empty() || validity.empty())
            throw tf::UsageError("--submission needs --cause and --validity");
        annotate_one(submission_index, cause, validity, note);
        tf::stage_evaluate(bundle_dir, config, /*force=*/true);
        std::printf("annotated submission %d\n", submission_index);
        return 0;
    }

    auto records = pending();
    if (records.empty()) {
        std::printf("no records need review\n");
        return 0;
    }
    for (const auto* r : records) {
        std::printf("submission %d (student %s): llm=%d instructor=%d quadrant=%s\n",
                    r->submission_index, r->student_id.c_str(), r->llm_grade, r->instructor_grade,
                    tf::to_string(r->quadrant));
        if (static_cast<size_t>(r->submission_index) < bundle.submissions.size()) {
            const tf::Submission& submission = bundle.submissions[r->submission_index];
            if (r->llm_grade == 0) print_failing_tests(bundle, submission, tf::SuiteKind::Llm, config);
            if (r->instructor_grade == 0)
                print_failing_tests(bundle, submission, tf::SuiteKind::Instructor, config);
        }
        if (interactive) {
            std::printf("cause (llm/instructor/other), or skip: ");
            std::fflush(stdout);
            std::string c, v, n;
            if (!std::getline(std::cin, c)) break;
            c = tf::trim(c);
            if (c == "skip" || c.empty()) continue;
            if (c == "llm") c = "llm_mismatch";
            else if (c == "instructor") c = "instructor_mismatch";
            else if (c == "other") c = "other_mismatch";
            std::printf("resolved validity (valid/invalid): ");
            std::fflush(stdout);
            if (!std::getline(std::cin, v)) break;
            std::printf("note: ");
            std::fflush(stdout);
            if (!std::getline(std::cin, n)) n = "";
            annotate_one(r->submission_index, c, tf::trim(v), n);
        }
    }
    if (interactive) tf::stage_evaluate(bundle_dir, config, /*force=*/true);
    if (list_only || interactive) return 0;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM-backed autograder test suite toolchain"};
    app.require_subcommand(1);

    CommonOptions common;
    app.add_option("--config", common.config_path, "JSON config file");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse Moodle XML + submissions CSV into bundles");
    std::string xml_path, out_dir;
    std::vector<std::string> submission_specs;
    ingest->add_option("--xml", xml_path, "Moodle XML quiz export")->required();
    ingest->add_option("--submissions", submission_specs,
                       "per-problem CSV as <problem_id>=<csv path> (repeatable)");
    ingest->add_option("--out", out_dir, "output directory for bundles")->required();

    // regen-instructor
    auto* regen = app.add_subcommand("regen-instructor",
                                     "regenerate instructor expected outputs from the reference");
    std::string bundle_dir;
    regen->add_option("--bundle", bundle_dir, "bundle directory")->required();
    regen->add_flag("--force", common.force, "rerun even when up to date");

    // gen-suite
    auto* gen = app.add_subcommand("gen-suite", "generate the LLM test suite (two-prompt pipeline)");
    std::string fixture_store_override;
    gen->add_option("--bundle", bundle_dir, "bundle directory")->required();
    gen->add_flag("--replay", common.replay, "serve recorded responses (offline)");
    gen->add_flag("--record", common.record, "call the live API and record responses");
    gen->add_option("--fixtures", fixture_store_override, "fixture store directory override");
    gen->add_flag("--force", common.force, "rerun even when up to date");

    // grade
    auto* grade = app.add_subcommand("grade", "grade the submission corpus against a suite");
    std::string suite_name = "both";
    grade->add_option("--bundle", bundle_dir, "bundle directory")->required();
    grade->add_option("--suite", suite_name, "llm | instructor | both (default)");
    grade->add_flag("--force", common.force, "rerun even when up to date");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "build grade quadrants and validity decisions");
    evaluate->add_option("--bundle", bundle_dir, "bundle directory")->required();
    evaluate->add_flag("--force", common.force, "rerun even when up to date");

    // review
    auto* review = app.add_subcommand("review", "inspect and annotate mismatching records");
    bool list_only = false, interactive = false;
    int submission_index = -1;
    std::string cause, validity, note;
    review->add_option("--bundle", bundle_dir, "bundle directory")->required();
    review->add_flag("--list", list_only, "list records that need review");
    review->add_flag("--interactive", interactive, "prompt for each pending record");
    review->add_option("--submission", submission_index, "submission index to annotate");
    review->add_option("--cause", cause, "llm_mismatch | instructor_mismatch | other_mismatch");
    review->add_option("--validity", validity, "valid | invalid");
    review->add_option("--note", note, "free-form note");

    // report
    auto* report = app.add_subcommand("report", "emit the evaluation report");
    std::string format = "markdown", out_path;
    bool allow_partial = false;
    std::vector<std::string> report_bundles;
    report->add_option("--bundle", report_bundles, "bundle directory (repeatable)")->required();
    report->add_option("--format", format, "json | csv | markdown (default)");
    report->add_option("--out", out_path, "write to file instead of stdout");
    report->add_flag("--allow-partial", allow_partial, "skip unresolved mismatches");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "run every stage for one bundle");
    pipeline->add_option("--problem,--bundle", bundle_dir, "bundle directory")->required();
    pipeline->add_flag("--replay", common.replay, "serve recorded responses (offline)");
    pipeline->add_flag("--record", common.record, "call the live API and record responses");
    pipeline->add_flag("--force", common.force, "rerun all stages");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    std::string stage = "startup";
    try {
        tf::Config config = load_config_or_default(common.config_path);
        if (!fixture_store_override.empty()) config.fixture_store = fixture_store_override;
        tf::TokenLedger ledger;

        if (ingest->parsed()) {
            stage = "ingest";
            tf::IngestOptions options;
            options.xml_path = xml_path;
            options.out_dir = out_dir;
            for (const auto& spec : submission_specs) {
                size_t eq = spec.find('=');
                if (eq == std::string::npos)
                    throw tf::UsageError("--submissions expects <problem_id>=<csv path>");
                options.submissions_csv[spec.substr(0, eq)] = spec.substr(eq + 1);
            }
            tf::IngestSummary summary = tf::stage_ingest(options, config);
            for (const auto& w : summary.warnings)
                std::fprintf(stderr, "warning: %s: %s\n", w.problem_id.c_str(), w.message.c_str());
            for (const auto& e : summary.row_errors)
                std::fprintf(stderr, "warning: submissions row %zu: %s\n", e.row, e.message.c_str());
            for (const auto& dir : summary.bundle_dirs) std::printf("%s\n", dir.c_str());
        } else if (regen->parsed()) {
            stage = "regen-instructor";
            bool ran = tf::stage_regen_instructor(bundle_dir, config, common.force);
            std::printf("%s\n", ran ? "done" : "up-to-date");
        } else if (gen->parsed()) {
            stage = "gen-suite";
            bool ran =
                tf::stage_gen_suite(bundle_dir, config, provider_mode(common), ledger, common.force);
            print_token_summary(ledger, config);
            std::printf("%s\n", ran ? "done" : "up-to-date");
        } else if (grade->parsed()) {
            stage = "grade";
            bool ran = false;
            if (suite_name == "llm" || suite_name == "both")
                ran |= tf::stage_grade(bundle_dir, config, tf::SuiteKind::Llm, common.force);
            if (suite_name == "instructor" || suite_name == "both")
                ran |= tf::stage_grade(bundle_dir, config, tf::SuiteKind::Instructor, common.force);
            if (suite_name != "llm" && suite_name != "instructor" && suite_name != "both")
                throw tf::UsageError("--suite must be llm, instructor or both");
            std::printf("%s\n", ran ? "done" : "up-to-date");
        } else if (evaluate->parsed()) {
            stage = "evaluate";
            bool ran = tf::stage_evaluate(bundle_dir, config, common.force);
            std::printf("%s\n", ran ? "done" : "up-to-date");
        } else if (review->parsed()) {
            stage = "review";
            return cmd_review(bundle_dir, list_only, submission_index, cause, validity, note,
                              interactive, config);
        } else if (report->parsed()) {
            stage = "report";
            tf::Evaluation evaluation;
            for (const auto& dir : report_bundles) {
                tf::Evaluation one = tf::load_evaluation(dir);
                evaluation.records.insert(evaluation.records.end(), one.records.begin(),
                                          one.records.end());
            }
            tf::ReportFormat fmt;
            if (format == "json") fmt = tf::ReportFormat::Json;
            else if (format == "csv") fmt = tf::ReportFormat::Csv;
            else if (format == "markdown") fmt = tf::ReportFormat::Markdown;
            else throw tf::UsageError("--format must be json, csv or markdown");
            std::string rendered = tf::emit_report(evaluation, fmt, allow_partial);
            if (out_path.empty()) std::fwrite(rendered.data(), 1, rendered.size(), stdout);
            else tf::write_file(out_path, rendered);
        } else if (pipeline->parsed()) {
            stage = "pipeline";
            tf::run_pipeline(bundle_dir, config, provider_mode(common), ledger, common.force);
            print_token_summary(ledger, config);
        }
        return 0;
    } catch (const tf::UsageError& e) {
        json summary{{"error", e.kind()}, {"message", e.what()}, {"stage", stage}};
        std::fprintf(stderr, "%s\n", summary.dump().c_str());
        return 2;
    } catch (const tf::Error& e) {
        json summary{{"error", e.kind()}, {"message", e.what()}, {"stage", stage}};
        std::fprintf(stderr, "%s\n", summary.dump().c_str());
        return 1;
    } catch (const std::exception& e) {
        json summary{{"error", "Internal"}, {"message", e.what()}, {"stage", stage}};
        std::fprintf(stderr, "%s\n", summary.dump().c_str());
        return 1;
    }
}
