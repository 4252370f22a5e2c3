#include "testforge/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <random>

#include <json.hpp>

#include "testforge/errors.hpp"
#include "testforge/grader.hpp"
#include "testforge/prompts.hpp"
#include "testforge/sha256.hpp"
#include "testforge/suite_builder.hpp"
#include "testforge/text.hpp"

namespace testforge {

namespace {

using nlohmann::json;

std::string digest_of(std::initializer_list<std::string> parts) {
    std::string all;
    for (const auto& p : parts) {
        all += std::to_string(p.size());
        all += ':';
        all += p;
    }
    return sha256_hex(all);
}

std::string problem_fingerprint(const Problem& p) {
    json tests = json::array();
    for (const auto& t : p.instructor_tests)
        tests.push_back({{"p", t.payload}, {"e", t.expected_output}});
    return json{{"id", p.id},
                {"kind", to_string(p.kind)},
                {"ref", p.reference_solution},
                {"extra", p.extra_code ? json(*p.extra_code) : json(nullptr)},
                {"tests", tests}}
        .dump();
}

std::string run_fingerprint(const Config& c) {
    json flags = c.toolchain.flags;
    json libs = c.toolchain.libs;
    return json{{"cc", c.toolchain.command},
                {"flags", flags},
                {"libs", libs},
                {"run_timeout_ms", c.run_limits.wall_timeout.count()},
                {"memory", c.run_limits.memory_bytes},
                {"cap", c.run_limits.output_cap_bytes},
                {"policy", to_string(c.policy)}}
        .dump();
}

std::string prompts_fingerprint(const PromptTemplates& t) {
    return digest_of({t.detailed_system, t.detailed_user, t.extra_code_section,
                      t.testgen_full_system, t.testgen_full_user, t.testgen_function_system,
                      t.testgen_function_user, t.retry_detailed, t.retry_testgen_full,
                      t.retry_testgen_function});
}

std::string suite_fingerprint(const TestSuite& s) {
    json tests = json::array();
    for (const auto& t : s.tests)
        tests.push_back({{"p", t.payload},
                         {"e", t.expected_output ? json(*t.expected_output) : json(nullptr)},
                         {"r", t.rejected}});
    return json{{"kind", to_string(s.kind)}, {"sep", s.separator}, {"seed", s.seed},
                {"tests", tests}}
        .dump();
}

std::string submissions_fingerprint(const std::vector<Submission>& subs) {
    std::string all;
    for (const auto& s : subs) {
        all += s.student_id;
        all += '\x1f';
        all += s.code;
        all += '\x1e';
    }
    return sha256_hex(all);
}

}  // namespace

IngestSummary stage_ingest(const IngestOptions& options, const Config& config) {
    IngestSummary summary;
    std::string xml_text = read_file(options.xml_path);
    MoodleParseResult parsed = parse_moodle_xml(xml_text);
    summary.warnings = parsed.warnings;

    for (auto& problem : parsed.problems) {
        Bundle bundle;
        bundle.problem = problem;
        std::string ingest_digest = digest_of({xml_text});

        auto it = options.submissions_csv.find(problem.id);
        if (it != options.submissions_csv.end()) {
            std::string csv_text = read_file(it->second);
            SubmissionParseResult subs =
                parse_submissions_csv(csv_text, problem.id, config.csv_schema);
            for (auto& err : subs.row_errors) summary.row_errors.push_back(err);
            bundle.submissions = std::move(subs.batch.submissions);
            ingest_digest = digest_of({xml_text, csv_text});
        }
        bundle.stage_state["ingest"] = ingest_digest;

        std::string dir =
            (std::filesystem::path(options.out_dir) / problem.id).string();
        save_bundle(bundle, dir);
        summary.bundle_dirs.push_back(dir);
    }
    return summary;
}

uint32_t resolve_problem_seed(const Bundle& bundle, const Config& config) {
    if (bundle.seed) return *bundle.seed;
    auto it = config.seeds.find(bundle.problem.id);
    if (it != config.seeds.end()) return it->second;
    std::random_device rd;
    return rd();
}

bool stage_regen_instructor(const std::string& bundle_dir, const Config& config, bool force) {
    Bundle bundle = load_bundle(bundle_dir);
    if (bundle.problem.excluded)
        throw UsageError("problem " + bundle.problem.id +
                         " is excluded: " + bundle.problem.excluded_reason);
    uint32_t seed = resolve_problem_seed(bundle, config);
    std::string digest = digest_of(
        {problem_fingerprint(bundle.problem), run_fingerprint(config), std::to_string(seed)});
    auto it = bundle.stage_state.find("regen-instructor");
    if (!force && it != bundle.stage_state.end() && it->second == digest &&
        bundle.instructor_suite)
        return false;

    bundle.seed = seed;
    bundle.instructor_suite =
        regenerate_instructor_outputs(bundle.problem, config.materialize(seed));
    bundle.stage_state["regen-instructor"] = digest;
    save_bundle(bundle, bundle_dir);
    return true;
}

std::shared_ptr<Provider> make_provider(ProviderMode mode, const Config& config) {
    switch (mode) {
        case ProviderMode::Replay:
            return std::make_shared<ReplayProvider>(config.fixture_store);
        case ProviderMode::Record:
            return std::make_shared<RecordingProvider>(
                make_live_provider_from_env(config.api_endpoint, config.retry),
                config.fixture_store);
        case ProviderMode::Live:
            return make_live_provider_from_env(config.api_endpoint, config.retry);
    }
    throw UsageError("unknown provider mode");
}

bool stage_gen_suite(const std::string& bundle_dir, const Config& config, ProviderMode mode,
                     TokenLedger& ledger, bool force) {
    Bundle bundle = load_bundle(bundle_dir);
    if (bundle.problem.excluded)
        throw UsageError("problem " + bundle.problem.id +
                         " is excluded: " + bundle.problem.excluded_reason);

    PromptTemplates templates = load_prompt_templates(config.prompts_dir);
    uint32_t seed = resolve_problem_seed(bundle, config);
    std::string digest =
        digest_of({problem_fingerprint(bundle.problem), prompts_fingerprint(templates),
                   run_fingerprint(config), config.llm.model_id,
                   std::to_string(config.llm.temperature), std::to_string(seed)});
    auto it = bundle.stage_state.find("gen-suite");
    if (!force && it != bundle.stage_state.end() && it->second == digest && bundle.llm_suite)
        return false;

    std::shared_ptr<Provider> provider = make_provider(mode, config);
    HarnessContract contract = make_harness_contract(bundle.problem);

    GenerationResult generated;
    try {
        generated =
            generate_suite_source(bundle.problem, *provider, templates, config.llm, contract, ledger);
    } catch (const GenerationFailed& e) {
        std::string dir = (std::filesystem::path(config.work_root) / "transcripts").string();
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        std::string path =
            (std::filesystem::path(dir) / (bundle.problem.id + ".json")).string();
        if (!ec) write_file(path, e.transcript().dump(2) + "\n");
        throw GenerationFailed(std::string(e.what()) + " (transcript: " + path + ")",
                               e.transcript());
    }

    bundle.seed = seed;
    bundle.llm_suite = build_llm_suite(bundle.problem, generated.artifact.source_text,
                                       contract.markers, config.interpreter,
                                       config.materialize(seed));
    bundle.stage_state["gen-suite"] = digest;
    save_bundle(bundle, bundle_dir);
    return true;
}

bool stage_grade(const std::string& bundle_dir, const Config& config, SuiteKind suite_kind,
                 bool force) {
    Bundle bundle = load_bundle(bundle_dir);
    const TestSuite* suite = bundle.suite_for(suite_kind);
    if (suite == nullptr)
        throw UsageError(std::string("bundle has no ") + to_string(suite_kind) +
                         " suite yet; run the earlier stages first");

    std::string stage_key = std::string("grade-") + to_string(suite_kind);
    std::string digest =
        digest_of({suite_fingerprint(*suite), submissions_fingerprint(bundle.submissions),
                   run_fingerprint(config)});
    auto it = bundle.stage_state.find(stage_key);
    if (!force && it != bundle.stage_state.end() && it->second == digest &&
        bundle.grades_for(suite_kind))
        return false;

    GradeSet set;
    set.suite = suite_kind;
    set.records = grade_batch(bundle.submissions, *suite, bundle.problem, config.run(),
                              config.policy, config.workers);
    bundle.set_grades(std::move(set));
    bundle.stage_state[stage_key] = digest;
    save_bundle(bundle, bundle_dir);
    return true;
}

Evaluation load_evaluation(const std::string& bundle_dir) {
    std::string text = read_file(evaluation_path(bundle_dir));
    try {
        return evaluation_from_json(json::parse(text));
    } catch (const json::exception& e) {
        throw SchemaMismatch(std::string("malformed evaluation document: ") + e.what());
    }
}

void save_evaluation(const std::string& bundle_dir, const Evaluation& evaluation) {
    write_file_atomic(evaluation_path(bundle_dir), evaluation_to_json(evaluation).dump(2) + "\n");
}

bool stage_evaluate(const std::string& bundle_dir, const Config&, bool force) {
    Bundle bundle = load_bundle(bundle_dir);
    const GradeSet* llm = bundle.grades_for(SuiteKind::Llm);
    const GradeSet* instructor = bundle.grades_for(SuiteKind::Instructor);
    if (llm == nullptr || instructor == nullptr)
        throw UsageError("bundle needs grades for both suites before evaluation");

    std::vector<LedgerEntry> ledger_entries = read_ledger(annotation_ledger_path(bundle_dir));
    std::string ledger_fingerprint;
    for (const auto& e : ledger_entries)
        ledger_fingerprint += e.problem_id + ":" + std::to_string(e.submission_index) + ":" +
                              to_string(e.annotation.cause) + ";";
    std::string digest = digest_of({suite_fingerprint(*bundle.suite_for(SuiteKind::Llm)),
                                    submissions_fingerprint(bundle.submissions),
                                    grade_records_to_csv(llm->records),
                                    grade_records_to_csv(instructor->records),
                                    ledger_fingerprint});
    auto it = bundle.stage_state.find("evaluate");
    if (!force && it != bundle.stage_state.end() && it->second == digest &&
        std::filesystem::exists(evaluation_path(bundle_dir)))
        return false;

    Evaluation evaluation;
    evaluation.records =
        build_quadrant_records(bundle.problem.id, llm->records, instructor->records);
    apply_ledger(evaluation.records, ledger_entries);
    save_evaluation(bundle_dir, evaluation);

    bundle.stage_state["evaluate"] = digest;
    save_bundle(bundle, bundle_dir);
    return true;
}

void run_pipeline(const std::string& bundle_dir, const Config& config, ProviderMode mode,
                  TokenLedger& ledger, bool force) {
    struct StageRun {
        const char* name;
        bool ran;
    };
    std::vector<StageRun> stages;
    stages.push_back({"regen-instructor", stage_regen_instructor(bundle_dir, config, force)});
    stages.push_back({"gen-suite", stage_gen_suite(bundle_dir, config, mode, ledger, force)});
    stages.push_back({"grade-llm", stage_grade(bundle_dir, config, SuiteKind::Llm, force)});
    stages.push_back(
        {"grade-instructor", stage_grade(bundle_dir, config, SuiteKind::Instructor, force)});
    stages.push_back({"evaluate", stage_evaluate(bundle_dir, config, force)});
    for (const auto& s : stages)
        std::fprintf(stderr, "%s: %s\n", s.name, s.ran ? "done" : "up-to-date");
}

}  // namespace testforge
