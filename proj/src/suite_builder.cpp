#include "testforge/suite_builder.hpp"

#include <cctype>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <random>

#include <json.hpp>

#include "testforge/errors.hpp"
#include "testforge/text.hpp"

namespace testforge {

namespace {

using nlohmann::json;

}  // namespace

std::vector<std::string> run_generator_script(const std::string& script_text,
                                              const InterpreterConfig& interpreter,
                                              const std::string& work_root) {
    ScratchDir scratch(work_root);
    std::string script_path = (std::filesystem::path(scratch.path()) / "generate.py").string();
    write_file(script_path, script_text);

    std::vector<std::string> argv = interpreter.command;
    argv.push_back("generate.py");
    ProcessLimits limits;
    limits.wall_timeout = interpreter.timeout;
    limits.memory_bytes = 0;
    limits.output_cap_bytes = 64ull * 1024 * 1024;

    RunResult run;
    try {
        run = run_process(argv, scratch.path(), "", limits);
    } catch (const ToolchainMissing& e) {
        throw InterpreterMissing(std::string("generator interpreter unavailable: ") + e.what());
    }
    if (!run.clean_exit())
        throw GeneratorFailure("generator script " + run.describe() + "\nstderr:\n" +
                               run.stderr_bytes);

    json doc;
    try {
        doc = json::parse(run.stdout_bytes);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("generator output is not valid JSON: ") + e.what());
    }
    if (!doc.is_array()) throw SchemaError("generator output is not a JSON array");
    std::vector<std::string> payloads;
    payloads.reserve(doc.size());
    for (size_t i = 0; i < doc.size(); ++i) {
        const json& entry = doc[i];
        if (!entry.is_object() || entry.size() != 1 || !entry.contains("input"))
            throw SchemaError("generator array element " + std::to_string(i) +
                              " must be an object with exactly the key \"input\"");
        if (!entry.at("input").is_string())
            throw SchemaError("generator array element " + std::to_string(i) +
                              " has a non-string \"input\"");
        payloads.push_back(entry.at("input").get<std::string>());
    }
    return payloads;
}

namespace {

// Looks for "<prefix><integer><suffix>" anywhere in the line.
std::optional<int> find_marker(const std::string& line, const std::string& prefix,
                               const std::string& suffix) {
    size_t pos = 0;
    while ((pos = line.find(prefix, pos)) != std::string::npos) {
        size_t digits = pos + prefix.size();
        size_t d = digits;
        while (d < line.size() && std::isdigit(static_cast<unsigned char>(line[d]))) ++d;
        if (d > digits && line.compare(d, suffix.size(), suffix) == 0)
            return std::stoi(line.substr(digits, d - digits));
        ++pos;
    }
    return std::nullopt;
}

}  // namespace

std::vector<std::string> parse_test_script(const std::string& script_text,
                                           const MarkerConvention& markers) {
    std::vector<std::string> payloads;
    int open_test = 0;        // 0 = outside any test
    size_t payload_start = 0; // byte offset just past the BEGIN line

    size_t line_start = 0;
    int line_no = 0;
    const size_t n = script_text.size();
    while (line_start <= n) {
        size_t line_end = script_text.find('\n', line_start);
        bool has_newline = line_end != std::string::npos;
        if (!has_newline) line_end = n;
        ++line_no;
        std::string line = script_text.substr(line_start, line_end - line_start);

        auto begin_marker = find_marker(line, markers.begin_prefix, markers.begin_suffix);
        auto end_marker = find_marker(line, markers.end_prefix, markers.end_suffix);
        if (begin_marker && end_marker) {
            throw ParseError("line " + std::to_string(line_no) +
                             ": begin and end markers on the same line");
        } else if (begin_marker) {
            if (open_test != 0)
                throw ParseError("line " + std::to_string(line_no) + ": test " +
                                 std::to_string(*begin_marker) + " begins while test " +
                                 std::to_string(open_test) + " is still open");
            int expected = static_cast<int>(payloads.size()) + 1;
            if (*begin_marker != expected)
                throw ParseError("line " + std::to_string(line_no) + ": expected test " +
                                 std::to_string(expected) + ", found test " +
                                 std::to_string(*begin_marker));
            open_test = *begin_marker;
            payload_start = has_newline ? line_end + 1 : n;
        } else if (end_marker) {
            if (open_test == 0)
                throw ParseError("line " + std::to_string(line_no) + ": end marker for test " +
                                 std::to_string(*end_marker) + " without a begin marker");
            if (*end_marker != open_test)
                throw ParseError("line " + std::to_string(line_no) + ": end marker for test " +
                                 std::to_string(*end_marker) + " while test " +
                                 std::to_string(open_test) + " is open");
            payloads.push_back(script_text.substr(payload_start, line_start - payload_start));
            open_test = 0;
        }

        if (!has_newline) break;
        line_start = line_end + 1;
    }
    if (open_test != 0)
        throw ParseError("test " + std::to_string(open_test) + " is never closed");
    if (payloads.empty()) throw ParseError("script contains no marked tests");
    return payloads;
}

TestOrigin classify_payload_origin(const std::string& payload) {
    auto has_word = [&](const char* word) {
        size_t len = strlen(word);
        size_t pos = 0;
        while ((pos = payload.find(word, pos)) != std::string::npos) {
            bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(payload[pos - 1]));
            bool right_ok = pos + len >= payload.size() ||
                            (!std::isalnum(static_cast<unsigned char>(payload[pos + len])) &&
                             payload[pos + len] != '_');
            if (left_ok && right_ok) return true;
            ++pos;
        }
        return false;
    };
    bool loops = has_word("for") || has_word("while");
    bool hundred = payload.find("100") != std::string::npos;
    return loops && hundred ? TestOrigin::Random : TestOrigin::EdgeCase;
}

std::string make_separator(uint32_t nonce) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "#<ab@%08u#@>#", nonce % 100000000u);
    return buf;
}

namespace {

bool any_output_contains(const TestSuite& suite, const std::string& token) {
    for (const auto& t : suite.tests)
        if (!t.rejected && t.expected_output && t.expected_output->find(token) != std::string::npos)
            return true;
    return false;
}

void reject_test(Test& test, const std::string& reason) {
    test.rejected = true;
    test.rejected_reason = reason;
    test.expected_output.reset();
}

// Indexes of tests still in the running.
std::vector<size_t> active_indexes(const TestSuite& suite) {
    std::vector<size_t> out;
    for (size_t i = 0; i < suite.tests.size(); ++i)
        if (!suite.tests[i].rejected) out.push_back(i);
    return out;
}

void materialize_full_program(TestSuite& suite, const Problem& problem,
                              const MaterializeConfig& config) {
    ScratchDir scratch(config.limits.work_root);
    auto compiled = compile_c(problem.reference_solution, scratch.path(), config.limits.toolchain);
    if (std::holds_alternative<CompileFailure>(compiled))
        throw ReferenceCompileError("reference solution does not compile:\n" +
                                    std::get<CompileFailure>(compiled).diagnostics);
    const std::string& binary = std::get<std::string>(compiled);
    for (auto& test : suite.tests) {
        if (test.rejected) continue;
        RunResult run = run_process({binary}, scratch.path(), test.payload, config.limits.process);
        if (run.clean_exit() && !run.output_truncated) {
            test.expected_output = run.stdout_bytes;
        } else {
            std::string what = run.output_truncated ? "exceeded the output limit" : run.describe();
            reject_test(test, "reference solution " + what);
        }
    }
}

void materialize_function(TestSuite& suite, const Problem& problem,
                          const MaterializeConfig& config, std::mt19937& nonce_rng) {
    HarnessSpec spec;
    spec.suite_kind = suite.kind;
    spec.seed = suite.seed;
    spec.per_test_seeds = config.per_test_seeds;

    for (int pass = 0;; ++pass) {
        if (pass > static_cast<int>(suite.tests.size()) + 64)
            throw HarnessError("suite materialization is not converging");
        std::vector<size_t> active = active_indexes(suite);
        if (active.empty()) return;

        spec.separator = suite.separator;
        ScratchDir scratch(config.limits.work_root);
        if (suite.kind == SuiteKind::Llm)
            write_file((std::filesystem::path(scratch.path()) / "solution.c").string(),
                       problem.reference_solution);
        std::string harness = assemble_function_harness(problem.reference_solution, suite,
                                                        problem.extra_code, spec);
        auto compiled = compile_c(harness, scratch.path(), config.limits.toolchain);
        if (std::holds_alternative<CompileFailure>(compiled)) {
            // Find out whether the reference itself or one of the generated
            // tests breaks the build.
            TestSuite empty_suite = suite;
            for (auto& t : empty_suite.tests) t.rejected = true;
            std::string bare =
                assemble_function_harness(problem.reference_solution, empty_suite,
                                          problem.extra_code, spec);
            auto bare_compiled = compile_c(bare, scratch.path(), config.limits.toolchain);
            if (std::holds_alternative<CompileFailure>(bare_compiled))
                throw ReferenceCompileError("reference solution does not compile:\n" +
                                            std::get<CompileFailure>(bare_compiled).diagnostics);
            bool rejected_any = false;
            for (size_t idx : active) {
                TestSuite single = suite;
                for (size_t k = 0; k < single.tests.size(); ++k)
                    single.tests[k].rejected = k != idx;
                std::string one = assemble_function_harness(problem.reference_solution, single,
                                                            problem.extra_code, spec);
                auto one_compiled = compile_c(one, scratch.path(), config.limits.toolchain);
                if (std::holds_alternative<CompileFailure>(one_compiled)) {
                    reject_test(suite.tests[idx],
                                "test does not compile against the reference solution:\n" +
                                    std::get<CompileFailure>(one_compiled).diagnostics);
                    rejected_any = true;
                }
            }
            if (!rejected_any)
                throw HarnessError("combined harness does not compile but every test compiles "
                                   "individually:\n" +
                                   std::get<CompileFailure>(compiled).diagnostics);
            continue;
        }

        RunResult run = run_process({std::get<std::string>(compiled)}, scratch.path(), "",
                                    config.limits.process);
        std::vector<std::string> segments = split_output(run.stdout_bytes, suite.separator);

        if (run.clean_exit() && !run.output_truncated) {
            if (segments.size() == active.size()) {
                for (size_t i = 0; i < active.size(); ++i)
                    suite.tests[active[i]].expected_output = segments[i];
                return;
            }
            if (segments.size() > active.size()) {
                // A test prints the separator itself: pick a fresh nonce.
                suite.separator = make_separator(nonce_rng());
                continue;
            }
            // Fewer segments than tests on a clean exit: something ended the
            // process early (e.g. exit() inside a scope).
            size_t victim = active[std::min(segments.size(), active.size()) - 1];
            reject_test(suite.tests[victim],
                        "reference solution terminated early during this test");
            continue;
        }

        // Crash or timeout: the failing scope is the one after the last
        // flushed separator.
        std::string what = run.output_truncated ? "exceeded the output limit" : run.describe();
        size_t victim_pos = std::min(segments.size(), active.size()) - 1;
        reject_test(suite.tests[active[victim_pos]],
                    "reference solution " + what + " during this test");
    }
}

}  // namespace

TestSuite materialize_expected_outputs(TestSuite suite, const Problem& problem,
                                       const MaterializeConfig& config) {
    std::mt19937 nonce_rng(config.problem_seed);
    if (suite.separator.empty()) suite.separator = make_separator(nonce_rng());
    if (suite.kind == SuiteKind::Llm) suite.seed = config.problem_seed;

    if (problem.kind == ProblemKind::FullProgram) {
        materialize_full_program(suite, problem, config);
    } else {
        materialize_function(suite, problem, config, nonce_rng);
    }

    // Invariant: the separator token appears in no expected output. For the
    // function path the split already guarantees it; drawing a fresh nonce is
    // enough because outputs do not depend on the separator.
    while (any_output_contains(suite, suite.separator))
        suite.separator = make_separator(nonce_rng());
    return suite;
}

TestSuite regenerate_instructor_outputs(const Problem& problem, const MaterializeConfig& config) {
    TestSuite suite;
    suite.problem_id = problem.id;
    suite.kind = SuiteKind::Instructor;
    int index = 0;
    for (const auto& t : problem.instructor_tests) {
        Test test;
        test.index = index++;
        test.payload = t.payload;
        test.origin = TestOrigin::Instructor;
        test.audit_expected_output = t.expected_output;
        suite.tests.push_back(std::move(test));
    }
    if (suite.tests.empty()) {
        std::fprintf(stderr, "warning: problem %s has no instructor tests\n", problem.id.c_str());
        std::mt19937 nonce_rng(config.problem_seed);
        suite.separator = make_separator(nonce_rng());
        return suite;
    }
    return materialize_expected_outputs(std::move(suite), problem, config);
}

TestSuite build_llm_suite(const Problem& problem, const std::string& generation_source,
                          const MarkerConvention& markers, const InterpreterConfig& interpreter,
                          const MaterializeConfig& config) {
    TestSuite suite;
    suite.problem_id = problem.id;
    suite.kind = SuiteKind::Llm;

    std::vector<std::string> payloads;
    std::vector<TestOrigin> origins;
    if (problem.kind == ProblemKind::FullProgram) {
        payloads = run_generator_script(generation_source, interpreter, config.limits.work_root);
        // The prompt asks for edge-cases first, then 100 random tests.
        size_t random_tail = payloads.size() > 100 ? 100 : 0;
        for (size_t i = 0; i < payloads.size(); ++i)
            origins.push_back(i >= payloads.size() - random_tail ? TestOrigin::Random
                                                                 : TestOrigin::EdgeCase);
    } else {
        payloads = parse_test_script(generation_source, markers);
        for (const auto& p : payloads) origins.push_back(classify_payload_origin(p));
    }

    for (size_t i = 0; i < payloads.size(); ++i) {
        Test test;
        test.index = static_cast<int>(i);
        test.payload = payloads[i];
        test.origin = origins[i];
        suite.tests.push_back(std::move(test));
    }
    return materialize_expected_outputs(std::move(suite), problem, config);
}

}  // namespace testforge
