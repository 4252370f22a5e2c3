#include "testforge/model.hpp"

#include "testforge/errors.hpp"

namespace testforge {

const char* to_string(ProblemKind kind) {
    return kind == ProblemKind::FullProgram ? "full_program" : "function_implementation";
}

const char* to_string(SuiteKind kind) {
    return kind == SuiteKind::Instructor ? "instructor" : "llm";
}

const char* to_string(TestOrigin origin) {
    switch (origin) {
        case TestOrigin::EdgeCase: return "edge_case";
        case TestOrigin::Random: return "random";
        case TestOrigin::Instructor: return "instructor";
    }
    return "instructor";
}

const char* to_string(ComparisonPolicy policy) {
    return policy == ComparisonPolicy::Exact ? "exact" : "trim_trailing";
}

ProblemKind problem_kind_from_string(const std::string& s) {
    if (s == "full_program") return ProblemKind::FullProgram;
    if (s == "function_implementation") return ProblemKind::FunctionImplementation;
    throw SchemaMismatch("unknown problem kind: " + s);
}

SuiteKind suite_kind_from_string(const std::string& s) {
    if (s == "instructor") return SuiteKind::Instructor;
    if (s == "llm") return SuiteKind::Llm;
    throw SchemaMismatch("unknown suite kind: " + s);
}

TestOrigin test_origin_from_string(const std::string& s) {
    if (s == "edge_case") return TestOrigin::EdgeCase;
    if (s == "random") return TestOrigin::Random;
    if (s == "instructor") return TestOrigin::Instructor;
    throw SchemaMismatch("unknown test origin: " + s);
}

ComparisonPolicy comparison_policy_from_string(const std::string& s) {
    if (s == "exact") return ComparisonPolicy::Exact;
    if (s == "trim_trailing") return ComparisonPolicy::TrimTrailing;
    throw SchemaMismatch("unknown comparison policy: " + s);
}

}  // namespace testforge
