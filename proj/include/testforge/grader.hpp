#pragma once

#include <string>
#include <variant>
#include <vector>

#include "testforge/model.hpp"
#include "testforge/runner.hpp"

namespace testforge {

// True when the actual output counts as matching the expected one under the
// policy. A no-output marker never matches.
bool compare_output(const TestOutput& actual, const std::string& expected,
                    ComparisonPolicy policy);
bool compare_output(const std::string& actual, const std::string& expected,
                    ComparisonPolicy policy);

// outputs must align positionally with the suite's non-rejected tests, or a
// CompileFailure takes their place (grade -1).
GradeRecord grade_solution(const std::variant<std::vector<TestOutput>, CompileFailure>& outputs,
                           const TestSuite& suite, ComparisonPolicy policy);

// Compiles and runs every submission against the suite on a bounded worker
// pool. Results are in submission order and independent of worker count.
std::vector<GradeRecord> grade_batch(const std::vector<Submission>& submissions,
                                     const TestSuite& suite, const Problem& problem,
                                     const RunLimits& limits, ComparisonPolicy policy,
                                     int worker_count);

// "student_id,suite,grade,failed_tests" with failed test indices ';'-joined.
std::string grade_records_to_csv(const std::vector<GradeRecord>& records);

}  // namespace testforge
