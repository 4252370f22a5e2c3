#include <doctest.h>

#include "test_util.hpp"
#include "testforge/bundle.hpp"
#include "testforge/errors.hpp"
#include "testforge/text.hpp"

using namespace testforge;

TEST_SUITE_BEGIN("bundle");

namespace {

Bundle sample_bundle() {
    Bundle b;
    b.problem.id = "p-sample";
    b.problem.kind = ProblemKind::FunctionImplementation;
    b.problem.statement_text = "Compute things.";
    b.problem.reference_solution = "int f(void) { return 1; }\n";
    b.problem.extra_code = "#define N 4\n";
    b.problem.instructor_tests = {{"printf(\"%d\", f());", "1"}};

    b.submissions = {{"s1", "2023-01-01 09:00:00", "int f(void) { return 1; }", 1},
                     {"s2", "2023-01-01 09:30:00", "int f(void) { return 2; }", 0}};

    TestSuite instructor;
    instructor.problem_id = b.problem.id;
    instructor.kind = SuiteKind::Instructor;
    instructor.separator = "#<ab@00000042#@>#";
    instructor.tests = {{0, "printf(\"%d\", f());", "1", TestOrigin::Instructor, false, "", "1"}};
    b.instructor_suite = instructor;

    TestSuite llm;
    llm.problem_id = b.problem.id;
    llm.kind = SuiteKind::Llm;
    llm.seed = 761177235;
    llm.separator = "#<ab@00000042#@>#";
    llm.tests = {{0, "printf(\"%d\", f());", "1", TestOrigin::EdgeCase, false, "", std::nullopt},
                 {1, "crash();", std::nullopt, TestOrigin::EdgeCase, true,
                  "reference solution terminated by signal 11", std::nullopt}};
    b.llm_suite = llm;

    GradeSet grades;
    grades.suite = SuiteKind::Llm;
    grades.records = {{0, "s1", SuiteKind::Llm, 1, {true}, ""},
                      {1, "s2", SuiteKind::Llm, 0, {false}, ""}};
    b.grades.push_back(grades);

    b.seed = 761177235;
    b.stage_state["ingest"] = "abc123";
    return b;
}

}  // namespace

TEST_CASE("save then load round-trips the full bundle state") {
    tftest::TempDir dir("bundle");
    Bundle original = sample_bundle();
    save_bundle(original, dir.path());
    Bundle loaded = load_bundle(dir.path());
    CHECK(loaded == original);
}

TEST_CASE("rejection flags and reasons survive the round trip") {
    tftest::TempDir dir("bundle-rej");
    Bundle original = sample_bundle();
    save_bundle(original, dir.path());
    Bundle loaded = load_bundle(dir.path());
    REQUIRE(loaded.llm_suite);
    REQUIRE(loaded.llm_suite->tests.size() == 2);
    CHECK(loaded.llm_suite->tests[1].rejected);
    CHECK(loaded.llm_suite->tests[1].rejected_reason ==
          "reference solution terminated by signal 11");
    CHECK_FALSE(loaded.llm_suite->tests[1].expected_output.has_value());
}

TEST_CASE("non-UTF-8 output bytes survive the round trip") {
    tftest::TempDir dir("bundle-bytes");
    Bundle original = sample_bundle();
    original.llm_suite->tests[0].expected_output = std::string("ok\xff\xfe\x01raw", 9);
    save_bundle(original, dir.path());
    Bundle loaded = load_bundle(dir.path());
    CHECK(loaded == original);
}

TEST_CASE("truncated document fails loudly, never partially") {
    tftest::TempDir dir("bundle-trunc");
    Bundle original = sample_bundle();
    save_bundle(original, dir.path());
    std::string text = read_file(bundle_document_path(dir.path()));
    write_file(bundle_document_path(dir.path()), text.substr(0, text.size() / 2));
    CHECK_THROWS_AS(load_bundle(dir.path()), VersionMismatch);
}

TEST_CASE("unknown schema version is rejected") {
    tftest::TempDir dir("bundle-ver");
    Bundle original = sample_bundle();
    save_bundle(original, dir.path());
    std::string text = read_file(bundle_document_path(dir.path()));
    text = replace_all(text, "\"schema_version\": 1", "\"schema_version\": 99");
    write_file(bundle_document_path(dir.path()), text);
    CHECK_THROWS_AS(load_bundle(dir.path()), VersionMismatch);
}

TEST_SUITE_END();
