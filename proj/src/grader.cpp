#include "testforge/grader.hpp"

#include <atomic>
#include <thread>

#include "testforge/errors.hpp"
#include "testforge/text.hpp"

namespace testforge {

bool compare_output(const std::string& actual, const std::string& expected,
                    ComparisonPolicy policy) {
    if (policy == ComparisonPolicy::Exact) return actual == expected;
    return strip_trailing_whitespace(actual) == strip_trailing_whitespace(expected);
}

bool compare_output(const TestOutput& actual, const std::string& expected,
                    ComparisonPolicy policy) {
    if (!actual.produced) return false;
    return compare_output(actual.text, expected, policy);
}

GradeRecord grade_solution(const std::variant<std::vector<TestOutput>, CompileFailure>& outputs,
                           const TestSuite& suite, ComparisonPolicy policy) {
    GradeRecord record;
    record.suite = suite.kind;
    if (std::holds_alternative<CompileFailure>(outputs)) {
        record.grade = -1;
        record.diagnostics = std::get<CompileFailure>(outputs).diagnostics;
        return record;
    }

    const auto& outs = std::get<std::vector<TestOutput>>(outputs);
    std::vector<const Test*> active = suite.active_tests();
    if (outs.size() != active.size())
        throw LengthMismatch("expected " + std::to_string(active.size()) + " outputs, got " +
                             std::to_string(outs.size()));
    bool all_passed = true;
    record.per_test.reserve(active.size());
    for (size_t i = 0; i < active.size(); ++i) {
        if (!active[i]->expected_output)
            throw LengthMismatch("test " + std::to_string(active[i]->index) +
                                 " has no expected output; suite not finalized");
        bool ok = compare_output(outs[i], *active[i]->expected_output, policy);
        record.per_test.push_back(ok);
        all_passed = all_passed && ok;
    }
    record.grade = all_passed ? 1 : 0;
    return record;
}

std::vector<GradeRecord> grade_batch(const std::vector<Submission>& submissions,
                                     const TestSuite& suite, const Problem& problem,
                                     const RunLimits& limits, ComparisonPolicy policy,
                                     int worker_count) {
    std::vector<GradeRecord> records(submissions.size());
    if (submissions.empty()) return records;
    worker_count = std::max(1, worker_count);

    std::atomic<size_t> next{0};
    auto work = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= submissions.size()) return;
            GradeRecord record;
            try {
                auto outputs = run_suite(submissions[i].code, suite, problem, limits);
                record = grade_solution(outputs, suite, policy);
            } catch (const Error& e) {
                // Never abort the batch: score the submission as failing and
                // keep the error for the operator.
                record.suite = suite.kind;
                record.grade = 0;
                record.per_test.assign(suite.active_tests().size(), false);
                record.diagnostics = std::string(e.kind()) + ": " + e.what();
            }
            record.submission_index = static_cast<int>(i);
            record.student_id = submissions[i].student_id;
            records[i] = std::move(record);
        }
    };

    std::vector<std::thread> workers;
    int spawn = std::min<size_t>(worker_count, submissions.size());
    workers.reserve(spawn);
    for (int w = 0; w < spawn; ++w) workers.emplace_back(work);
    for (auto& t : workers) t.join();
    return records;
}

std::string grade_records_to_csv(const std::vector<GradeRecord>& records) {
    std::string out = "student_id,suite,grade,failed_tests\n";
    for (const auto& r : records) {
        std::string failed;
        for (size_t i = 0; i < r.per_test.size(); ++i) {
            if (!r.per_test[i]) {
                if (!failed.empty()) failed += ";";
                failed += std::to_string(i);
            }
        }
        out += r.student_id;
        out += ",";
        out += to_string(r.suite);
        out += ",";
        out += std::to_string(r.grade);
        out += ",";
        out += failed;
        out += "\n";
    }
    return out;
}

}  // namespace testforge
