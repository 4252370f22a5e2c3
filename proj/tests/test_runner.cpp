#include <doctest.h>

#include <random>
#include <thread>

#include "test_util.hpp"
#include "testforge/errors.hpp"
#include "testforge/runner.hpp"
#include "testforge/text.hpp"

using namespace testforge;

TEST_SUITE_BEGIN("runner");

namespace {

const char* kSeparator = "#<ab@17943918#@>#";

ProcessLimits quick_limits(int timeout_ms = 5000) {
    ProcessLimits limits;
    limits.wall_timeout = std::chrono::milliseconds(timeout_ms);
    return limits;
}

TestSuite make_function_suite(std::vector<std::string> payloads, SuiteKind kind,
                              uint32_t seed = 0) {
    TestSuite suite;
    suite.problem_id = "t";
    suite.kind = kind;
    suite.seed = seed;
    suite.separator = kSeparator;
    int index = 0;
    for (auto& p : payloads) {
        Test t;
        t.index = index++;
        t.payload = std::move(p);
        t.expected_output = "";  // filled by callers that grade
        suite.tests.push_back(std::move(t));
    }
    return suite;
}

}  // namespace

TEST_CASE("compile and run hello world") {
    tftest::TempDir dir("cc");
    auto compiled = compile_c(
        "#include <stdio.h>\nint main(void) { printf(\"hello\\n\"); return 0; }\n", dir.path(),
        Toolchain{});
    REQUIRE(std::holds_alternative<std::string>(compiled));
    RunResult run = run_process({std::get<std::string>(compiled)}, dir.path(), "", quick_limits());
    CHECK(run.clean_exit());
    CHECK(run.stdout_bytes == "hello\n");
}

TEST_CASE("missing semicolon yields diagnostics") {
    tftest::TempDir dir("cc-bad");
    auto compiled =
        compile_c("int main(void) { int x = 1\n return x; }\n", dir.path(), Toolchain{});
    REQUIRE(std::holds_alternative<CompileFailure>(compiled));
    CHECK(std::get<CompileFailure>(compiled).diagnostics.find("error") != std::string::npos);
}

TEST_CASE("math library links") {
    tftest::TempDir dir("cc-m");
    auto compiled = compile_c(
        "#include <stdio.h>\n#include <math.h>\n"
        "int main(void) { double r; scanf(\"%lf\", &r); "
        "printf(\"%.2f\\n\", M_PI * pow(r, 2)); return 0; }\n",
        dir.path(), Toolchain{});
    REQUIRE(std::holds_alternative<std::string>(compiled));
    RunResult run =
        run_process({std::get<std::string>(compiled)}, dir.path(), "2\n", quick_limits());
    CHECK(run.clean_exit());
    CHECK(run.stdout_bytes == "12.57\n");
}

TEST_CASE("missing toolchain raises ToolchainMissing") {
    tftest::TempDir dir("cc-missing");
    Toolchain missing;
    missing.command = "definitely-not-a-compiler-binary";
    CHECK_THROWS_AS(compile_c("int main(void){return 0;}", dir.path(), missing),
                    ToolchainMissing);
}

TEST_CASE("stdin is fed exactly once and stdout captured") {
    tftest::TempDir dir("echo");
    auto compiled = compile_c(
        "#include <stdio.h>\nint main(void) { int n; scanf(\"%d\", &n); "
        "printf(\"%d x 2 = %d\\n\", n, n * 2); return 0; }\n",
        dir.path(), Toolchain{});
    REQUIRE(std::holds_alternative<std::string>(compiled));
    RunResult run =
        run_process({std::get<std::string>(compiled)}, dir.path(), "7\n", quick_limits());
    CHECK(run.stdout_bytes == "7 x 2 = 14\n");
}

TEST_CASE("infinite loop times out at the configured limit") {
    tftest::TempDir dir("loop");
    auto compiled = compile_c("int main(void) { for(;;){} }\n", dir.path(), Toolchain{});
    REQUIRE(std::holds_alternative<std::string>(compiled));
    RunResult run =
        run_process({std::get<std::string>(compiled)}, dir.path(), "", quick_limits(300));
    CHECK(run.status == RunResult::Status::TimedOut);
    CHECK(run.wall_time.count() < 5000);
}

TEST_CASE("output beyond the cap is truncated and flagged") {
    tftest::TempDir dir("spam");
    auto compiled = compile_c(
        "#include <stdio.h>\nint main(void) { for(;;) printf(\"spam spam spam\\n\"); }\n",
        dir.path(), Toolchain{});
    REQUIRE(std::holds_alternative<std::string>(compiled));
    ProcessLimits limits = quick_limits(5000);
    limits.output_cap_bytes = 64 * 1024;
    RunResult run = run_process({std::get<std::string>(compiled)}, dir.path(), "", limits);
    CHECK(run.output_truncated);
    CHECK(run.stdout_bytes.size() <= limits.output_cap_bytes);
    CHECK(run.stdout_bytes.substr(0, 4) == "spam");
}

TEST_CASE("crash is reported as a signal with partial stdout kept") {
    tftest::TempDir dir("crash");
    auto compiled = compile_c(
        "#include <stdio.h>\nint main(void) { printf(\"before\\n\"); fflush(stdout); "
        "int *p = 0; *p = 1; return 0; }\n",
        dir.path(), Toolchain{});
    REQUIRE(std::holds_alternative<std::string>(compiled));
    RunResult run = run_process({std::get<std::string>(compiled)}, dir.path(), "", quick_limits());
    CHECK(run.status == RunResult::Status::Signaled);
    CHECK(run.stdout_bytes == "before\n");
}

TEST_CASE("split reproduces the published six-test stream") {
    std::string raw =
        "The words differ by just one character#<ab@17943918#@>#\n"
        "a: 0\n"
        "b: 1\n"
        "c: 1\n"
        "#<ab@17943918#@>#\n"
        "The words do not differ by just one character#<ab@17943918#@>#\n"
        "a: 1\n"
        "b: 0\n"
        "c: 1\n"
        "#<ab@17943918#@>#\n"
        "The words do not differ by just one character#<ab@17943918#@>#\n"
        "The words differ by just one character";
    auto outputs = split_output(raw, kSeparator);
    REQUIRE(outputs.size() == 6);
    CHECK(outputs[0] == "The words differ by just one character");
    CHECK(outputs[1] == "a: 0\nb: 1\nc: 1");
    CHECK(outputs[2] == "The words do not differ by just one character");
    CHECK(outputs[3] == "a: 1\nb: 0\nc: 1");
    CHECK(outputs[4] == "The words do not differ by just one character");
    CHECK(outputs[5] == "The words differ by just one character");
}

TEST_CASE("split without separator returns the whole input") {
    auto outputs = split_output("no separators\nanywhere", kSeparator);
    REQUIRE(outputs.size() == 1);
    CHECK(outputs[0] == "no separators\nanywhere");
}

TEST_CASE("join then split restores the output list") {
    std::mt19937 rng(123);
    const char alphabet[] = "ab\ncd \t01";
    for (int round = 0; round < 2000; ++round) {
        std::vector<std::string> outputs(1 + rng() % 5);
        for (auto& o : outputs) {
            size_t len = rng() % 12;
            for (size_t i = 0; i < len; ++i) o.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
        }
        CAPTURE(join_outputs(outputs, kSeparator));
        CHECK(split_output(join_outputs(outputs, kSeparator), kSeparator) == outputs);
    }
}

TEST_CASE("instructor harness embeds the solution inline with scopes and separators") {
    TestSuite suite = make_function_suite(
        {"printf(\"one\");", "printf(\"two\");", "printf(\"three\");", "printf(\"four\");",
         "printf(\"five\");", "printf(\"six\");"},
        SuiteKind::Instructor);
    HarnessSpec spec;
    spec.suite_kind = SuiteKind::Instructor;
    spec.separator = suite.separator;
    std::string source = assemble_function_harness("void helper(void) {}\n", suite, std::nullopt, spec);

    CHECK(source.find("void helper(void)") != std::string::npos);
    CHECK(source.find("solution.c") == std::string::npos);
    CHECK(source.find("srand(") == std::string::npos);
    // 6 scopes, 5 separator prints
    size_t scopes = 0, separators = 0;
    for (size_t pos = 0; (pos = source.find("    {\n", pos)) != std::string::npos; pos += 5)
        ++scopes;
    for (size_t pos = 0; (pos = source.find(kSeparator, pos)) != std::string::npos; pos += 5)
        ++separators;
    CHECK(scopes == 6);
    CHECK(separators == 5);
}

TEST_CASE("llm harness includes solution.c and seeds every scope") {
    TestSuite suite = make_function_suite({"a();", "b();", "c();"}, SuiteKind::Llm, 761177235);
    HarnessSpec spec;
    spec.suite_kind = SuiteKind::Llm;
    spec.seed = 761177235;
    spec.separator = suite.separator;
    std::string source =
        assemble_function_harness("ignored for llm", suite, std::string("#define N 1\n"), spec);

    CHECK(source.find("#include \"solution.c\"") != std::string::npos);
    CHECK(source.find("ignored for llm") == std::string::npos);
    CHECK(source.find("#define N 1") != std::string::npos);
    CHECK(source.find("#include <time.h>") != std::string::npos);
    CHECK(source.find("#include <limits.h>") != std::string::npos);
    size_t seeds = 0;
    for (size_t pos = 0; (pos = source.find("srand(761177235u);", pos)) != std::string::npos;
         pos += 5)
        ++seeds;
    CHECK(seeds == 3);
}

TEST_CASE("zero-test harness compiles and prints nothing") {
    tftest::TempDir dir("harness0");
    TestSuite suite = make_function_suite({}, SuiteKind::Instructor);
    HarnessSpec spec;
    spec.suite_kind = SuiteKind::Instructor;
    spec.separator = suite.separator;
    std::string source = assemble_function_harness("int unused(void) { return 0; }\n", suite,
                                                   std::nullopt, spec);
    auto compiled = compile_c(source, dir.path(), Toolchain{});
    REQUIRE(std::holds_alternative<std::string>(compiled));
    RunResult run = run_process({std::get<std::string>(compiled)}, dir.path(), "", quick_limits());
    CHECK(run.clean_exit());
    CHECK(run.stdout_bytes.empty());
}

namespace {

Problem function_problem() {
    Problem p;
    p.id = "double-fn";
    p.kind = ProblemKind::FunctionImplementation;
    p.reference_solution = "int DoubleIt(int n) { return n * 2; }\n";
    return p;
}

TestSuite graded_suite() {
    TestSuite suite = make_function_suite({"printf(\"%d\\n\", DoubleIt(2));",
                                           "printf(\"%d\\n\", DoubleIt(-3));",
                                           "printf(\"%d\\n\", DoubleIt(0));"},
                                          SuiteKind::Instructor);
    // boundary newlines before separators belong to the separator line; the
    // final segment keeps its own trailing newline
    suite.tests[0].expected_output = "4";
    suite.tests[1].expected_output = "-6";
    suite.tests[2].expected_output = "0\n";
    return suite;
}

RunLimits test_run_limits() {
    RunLimits limits;
    limits.process = quick_limits();
    return limits;
}

}  // namespace

TEST_CASE("run_suite matches expected outputs for the reference solution") {
    tftest::TempDir work("suite-ref");
    RunLimits limits = test_run_limits();
    limits.work_root = work.path();
    Problem p = function_problem();
    TestSuite suite = graded_suite();
    auto result = run_suite(p.reference_solution, suite, p, limits);
    REQUIRE(std::holds_alternative<std::vector<TestOutput>>(result));
    const auto& outputs = std::get<std::vector<TestOutput>>(result);
    REQUIRE(outputs.size() == 3);
    CHECK(outputs[0] == TestOutput::of("4"));
    CHECK(outputs[1] == TestOutput::of("-6"));
    CHECK(outputs[2] == TestOutput::of("0\n"));
}

TEST_CASE("mid-harness crash marks later tests as no-output") {
    tftest::TempDir work("suite-crash");
    RunLimits limits = test_run_limits();
    limits.work_root = work.path();
    Problem p = function_problem();
    TestSuite suite = make_function_suite(
        {"printf(\"%d\\n\", DoubleIt(1));",
         "int *bad = 0; printf(\"%d\\n\", DoubleIt(*bad));",  // out-of-bounds style crash
         "printf(\"%d\\n\", DoubleIt(3));"},
        SuiteKind::Instructor);
    auto result = run_suite(p.reference_solution, suite, p, limits);
    REQUIRE(std::holds_alternative<std::vector<TestOutput>>(result));
    const auto& outputs = std::get<std::vector<TestOutput>>(result);
    REQUIRE(outputs.size() == 3);
    CHECK(outputs[0] == TestOutput::of("2"));
    CHECK_FALSE(outputs[2].produced);
}

TEST_CASE("run_suite output length always equals the active test count") {
    tftest::TempDir work("suite-exit");
    RunLimits limits = test_run_limits();
    limits.work_root = work.path();
    Problem p = function_problem();
    // exit() in the first scope starves the rest
    TestSuite suite = make_function_suite(
        {"exit(0);", "printf(\"%d\\n\", DoubleIt(2));", "printf(\"%d\\n\", DoubleIt(3));"},
        SuiteKind::Instructor);
    auto result = run_suite(p.reference_solution, suite, p, limits);
    REQUIRE(std::holds_alternative<std::vector<TestOutput>>(result));
    CHECK(std::get<std::vector<TestOutput>>(result).size() == 3);
}

TEST_CASE("compile failure of the solution is reported, not thrown") {
    tftest::TempDir work("suite-cc");
    RunLimits limits = test_run_limits();
    limits.work_root = work.path();
    Problem p = function_problem();
    TestSuite suite = graded_suite();
    auto result = run_suite("int DoubleIt(int n) { return n * 2 }\n", suite, p, limits);
    REQUIRE(std::holds_alternative<CompileFailure>(result));
    CHECK(std::get<CompileFailure>(result).diagnostics.find("error") != std::string::npos);
}

TEST_CASE("fixed seed makes llm suite runs byte-identical") {
    tftest::TempDir work("suite-seed");
    RunLimits limits = test_run_limits();
    limits.work_root = work.path();
    Problem p = function_problem();
    TestSuite suite = make_function_suite(
        {"for (int i = 0; i < 5; i++) { printf(\"%d \", DoubleIt(rand() % 100)); } printf(\"\\n\");"},
        SuiteKind::Llm, 761177235);
    suite.tests[0].expected_output = "";

    auto first = run_suite(p.reference_solution, suite, p, limits);
    auto second = run_suite(p.reference_solution, suite, p, limits);
    REQUIRE(std::holds_alternative<std::vector<TestOutput>>(first));
    REQUIRE(std::holds_alternative<std::vector<TestOutput>>(second));
    CHECK(std::get<std::vector<TestOutput>>(first) == std::get<std::vector<TestOutput>>(second));
    CHECK_FALSE(std::get<std::vector<TestOutput>>(first)[0].text.empty());
}

TEST_CASE("concurrent runs in distinct scratch dirs do not interfere") {
    tftest::TempDir work("suite-par");
    RunLimits limits = test_run_limits();
    limits.work_root = work.path();
    Problem p = function_problem();
    TestSuite suite = graded_suite();

    std::vector<std::vector<TestOutput>> results(8);
    std::vector<std::thread> threads;
    for (int i = 0; i < 8; ++i) {
        threads.emplace_back([&, i] {
            auto r = run_suite(p.reference_solution, suite, p, limits);
            results[i] = std::get<std::vector<TestOutput>>(r);
        });
    }
    for (auto& t : threads) t.join();
    for (int i = 1; i < 8; ++i) CHECK(results[i] == results[0]);
}

TEST_CASE("per-test seed mixing is stable and spread") {
    CHECK(per_test_seed(761177235, 0) == per_test_seed(761177235, 0));
    CHECK(per_test_seed(761177235, 0) != per_test_seed(761177235, 1));
    CHECK(per_test_seed(1, 5) != per_test_seed(2, 5));
}

TEST_SUITE_END();
