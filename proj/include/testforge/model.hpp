#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace testforge {

enum class ProblemKind { FullProgram, FunctionImplementation };

// One exported test from the LMS. For full-program problems the payload is
// stdin text; for function-implementation problems it is a C code block that
// calls the function under test.
struct InstructorTest {
    std::string payload;
    std::string expected_output;  // as exported; may be stale until regeneration

    bool operator==(const InstructorTest&) const = default;
};

struct Problem {
    std::string id;
    ProblemKind kind = ProblemKind::FullProgram;
    std::string statement_text;  // image elements stripped
    std::string reference_solution;
    std::optional<std::string> extra_code;
    std::vector<InstructorTest> instructor_tests;
    bool excluded = false;
    std::string excluded_reason;

    bool operator==(const Problem&) const = default;
};

struct Submission {
    std::string student_id;   // anonymized
    std::string submitted_at; // export timestamp, kept verbatim
    std::string code;
    int recorded_correct = 0; // 0 or 1, as exported

    bool operator==(const Submission&) const = default;
};

struct SubmissionBatch {
    std::string problem_id;
    std::vector<Submission> submissions;

    bool operator==(const SubmissionBatch&) const = default;
};

enum class TestOrigin { EdgeCase, Random, Instructor };

struct Test {
    int index = 0;
    std::string payload;
    std::optional<std::string> expected_output;  // unset until materialized
    TestOrigin origin = TestOrigin::Instructor;
    bool rejected = false;
    std::string rejected_reason;
    // Original exported expected output, retained for audit after
    // regeneration. Never used for grading.
    std::optional<std::string> audit_expected_output;

    bool operator==(const Test&) const = default;
};

enum class SuiteKind { Instructor, Llm };

struct TestSuite {
    std::string problem_id;
    SuiteKind kind = SuiteKind::Instructor;
    std::vector<Test> tests;
    // Fixed per-problem seed used by LLM suites of function problems to make
    // rand() deterministic across runs and across solutions.
    uint32_t seed = 0;
    std::string separator;

    // Tests that survive rejection and carry a materialized expected output.
    std::vector<const Test*> active_tests() const {
        std::vector<const Test*> out;
        for (const auto& t : tests)
            if (!t.rejected) out.push_back(&t);
        return out;
    }

    bool operator==(const TestSuite&) const = default;
};

enum class ComparisonPolicy { Exact, TrimTrailing };

struct GradeRecord {
    int submission_index = 0;
    std::string student_id;
    SuiteKind suite = SuiteKind::Instructor;
    int grade = 0;                // 1 passed all, 0 failed at least one, -1 no compile
    std::vector<bool> per_test;   // empty when grade == -1
    std::string diagnostics;      // compiler output for -1 records

    bool operator==(const GradeRecord&) const = default;
};

const char* to_string(ProblemKind kind);
const char* to_string(SuiteKind kind);
const char* to_string(TestOrigin origin);
const char* to_string(ComparisonPolicy policy);

ProblemKind problem_kind_from_string(const std::string& s);
SuiteKind suite_kind_from_string(const std::string& s);
TestOrigin test_origin_from_string(const std::string& s);
ComparisonPolicy comparison_policy_from_string(const std::string& s);

}  // namespace testforge
