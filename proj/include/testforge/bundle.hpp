#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "testforge/model.hpp"

namespace testforge {

// Grade records for one (suite, corpus) pass.
struct GradeSet {
    SuiteKind suite = SuiteKind::Instructor;
    std::vector<GradeRecord> records;

    bool operator==(const GradeSet&) const = default;
};

// Everything the pipeline knows about one problem, persisted as a versioned
// JSON document in its own directory. The annotation ledger lives next to it
// as an append-only JSONL file and is not part of this document.
struct Bundle {
    Problem problem;
    std::vector<Submission> submissions;
    std::optional<TestSuite> instructor_suite;
    std::optional<TestSuite> llm_suite;
    std::vector<GradeSet> grades;
    std::optional<uint32_t> seed;  // fixed at first suite generation
    // Input digests per completed pipeline stage, for restartability.
    std::map<std::string, std::string> stage_state;

    bool operator==(const Bundle&) const = default;

    const GradeSet* grades_for(SuiteKind kind) const {
        for (const auto& g : grades)
            if (g.suite == kind) return &g;
        return nullptr;
    }
    void set_grades(GradeSet set) {
        for (auto& g : grades) {
            if (g.suite == set.suite) {
                g = std::move(set);
                return;
            }
        }
        grades.push_back(std::move(set));
    }
    const TestSuite* suite_for(SuiteKind kind) const {
        if (kind == SuiteKind::Instructor)
            return instructor_suite ? &*instructor_suite : nullptr;
        return llm_suite ? &*llm_suite : nullptr;
    }
};

inline constexpr int kBundleSchemaVersion = 1;

// Serialized forms; save writes <dir>/bundle.json atomically.
std::string bundle_to_json(const Bundle& bundle);
Bundle bundle_from_json(const std::string& json_text);

void save_bundle(const Bundle& bundle, const std::string& directory);
Bundle load_bundle(const std::string& directory);

std::string bundle_document_path(const std::string& directory);
std::string annotation_ledger_path(const std::string& directory);
std::string evaluation_path(const std::string& directory);

}  // namespace testforge
