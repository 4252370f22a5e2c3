#include "testforge/bundle.hpp"

#include <filesystem>

#include <json.hpp>

#include "testforge/errors.hpp"
#include "testforge/json_util.hpp"
#include "testforge/text.hpp"

namespace testforge {

namespace {

using nlohmann::json;

json problem_to_json(const Problem& p) {
    json tests = json::array();
    for (const auto& t : p.instructor_tests)
        tests.push_back({{"payload", bytes_to_json(t.payload)},
                         {"expected_output", bytes_to_json(t.expected_output)}});
    return json{{"id", p.id},
                {"kind", to_string(p.kind)},
                {"statement_text", bytes_to_json(p.statement_text)},
                {"reference_solution", bytes_to_json(p.reference_solution)},
                {"extra_code", optional_bytes_to_json(p.extra_code)},
                {"instructor_tests", tests},
                {"excluded", p.excluded},
                {"excluded_reason", p.excluded_reason}};
}

Problem problem_from_json(const json& j) {
    Problem p;
    p.id = j.at("id").get<std::string>();
    p.kind = problem_kind_from_string(j.at("kind").get<std::string>());
    p.statement_text = bytes_from_json(j.at("statement_text"));
    p.reference_solution = bytes_from_json(j.at("reference_solution"));
    p.extra_code = optional_bytes_from_json(j.at("extra_code"));
    for (const auto& t : j.at("instructor_tests")) {
        InstructorTest it;
        it.payload = bytes_from_json(t.at("payload"));
        it.expected_output = bytes_from_json(t.at("expected_output"));
        p.instructor_tests.push_back(std::move(it));
    }
    p.excluded = j.at("excluded").get<bool>();
    p.excluded_reason = j.at("excluded_reason").get<std::string>();
    return p;
}

json suite_to_json(const TestSuite& s) {
    json tests = json::array();
    for (const auto& t : s.tests) {
        tests.push_back({{"index", t.index},
                         {"payload", bytes_to_json(t.payload)},
                         {"expected_output", optional_bytes_to_json(t.expected_output)},
                         {"origin", to_string(t.origin)},
                         {"rejected", t.rejected},
                         {"rejected_reason", t.rejected_reason},
                         {"audit_expected_output", optional_bytes_to_json(t.audit_expected_output)}});
    }
    return json{{"problem_id", s.problem_id},
                {"kind", to_string(s.kind)},
                {"seed", s.seed},
                {"separator", s.separator},
                {"tests", tests}};
}

TestSuite suite_from_json(const json& j) {
    TestSuite s;
    s.problem_id = j.at("problem_id").get<std::string>();
    s.kind = suite_kind_from_string(j.at("kind").get<std::string>());
    s.seed = j.at("seed").get<uint32_t>();
    s.separator = j.at("separator").get<std::string>();
    for (const auto& t : j.at("tests")) {
        Test test;
        test.index = t.at("index").get<int>();
        test.payload = bytes_from_json(t.at("payload"));
        test.expected_output = optional_bytes_from_json(t.at("expected_output"));
        test.origin = test_origin_from_string(t.at("origin").get<std::string>());
        test.rejected = t.at("rejected").get<bool>();
        test.rejected_reason = t.at("rejected_reason").get<std::string>();
        test.audit_expected_output = optional_bytes_from_json(t.at("audit_expected_output"));
        s.tests.push_back(std::move(test));
    }
    return s;
}

json grade_set_to_json(const GradeSet& g) {
    json records = json::array();
    for (const auto& r : g.records) {
        json per_test = json::array();
        for (bool b : r.per_test) per_test.push_back(b);
        records.push_back({{"submission_index", r.submission_index},
                           {"student_id", r.student_id},
                           {"grade", r.grade},
                           {"per_test", per_test},
                           {"diagnostics", bytes_to_json(r.diagnostics)}});
    }
    return json{{"suite", to_string(g.suite)}, {"records", records}};
}

GradeSet grade_set_from_json(const json& j) {
    GradeSet g;
    g.suite = suite_kind_from_string(j.at("suite").get<std::string>());
    for (const auto& r : j.at("records")) {
        GradeRecord rec;
        rec.submission_index = r.at("submission_index").get<int>();
        rec.student_id = r.at("student_id").get<std::string>();
        rec.suite = g.suite;
        rec.grade = r.at("grade").get<int>();
        for (const auto& b : r.at("per_test")) rec.per_test.push_back(b.get<bool>());
        rec.diagnostics = bytes_from_json(r.at("diagnostics"));
        g.records.push_back(std::move(rec));
    }
    return g;
}

}  // namespace

std::string bundle_to_json(const Bundle& bundle) {
    json submissions = json::array();
    for (const auto& s : bundle.submissions)
        submissions.push_back({{"student_id", s.student_id},
                               {"submitted_at", s.submitted_at},
                               {"code", bytes_to_json(s.code)},
                               {"recorded_correct", s.recorded_correct}});
    json suites = json::array();
    if (bundle.instructor_suite) suites.push_back(suite_to_json(*bundle.instructor_suite));
    if (bundle.llm_suite) suites.push_back(suite_to_json(*bundle.llm_suite));
    json grades = json::array();
    for (const auto& g : bundle.grades) grades.push_back(grade_set_to_json(g));

    json doc{{"schema_version", kBundleSchemaVersion},
             {"problem", problem_to_json(bundle.problem)},
             {"submissions", submissions},
             {"suites", suites},
             {"grades", grades},
             {"seed", bundle.seed ? json(*bundle.seed) : json(nullptr)},
             {"stage_state", bundle.stage_state}};
    return doc.dump(2) + "\n";
}

Bundle bundle_from_json(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw VersionMismatch(std::string("bundle document is not valid JSON: ") + e.what());
    }
    try {
        int version = doc.at("schema_version").get<int>();
        if (version != kBundleSchemaVersion)
            throw VersionMismatch("bundle schema version " + std::to_string(version) +
                                  " not supported (expected " +
                                  std::to_string(kBundleSchemaVersion) + ")");
        Bundle b;
        b.problem = problem_from_json(doc.at("problem"));
        for (const auto& s : doc.at("submissions")) {
            Submission sub;
            sub.student_id = s.at("student_id").get<std::string>();
            sub.submitted_at = s.at("submitted_at").get<std::string>();
            sub.code = bytes_from_json(s.at("code"));
            sub.recorded_correct = s.at("recorded_correct").get<int>();
            b.submissions.push_back(std::move(sub));
        }
        for (const auto& s : doc.at("suites")) {
            TestSuite suite = suite_from_json(s);
            if (suite.kind == SuiteKind::Instructor) b.instructor_suite = std::move(suite);
            else b.llm_suite = std::move(suite);
        }
        for (const auto& g : doc.at("grades")) b.grades.push_back(grade_set_from_json(g));
        if (!doc.at("seed").is_null()) b.seed = doc.at("seed").get<uint32_t>();
        b.stage_state = doc.at("stage_state").get<std::map<std::string, std::string>>();
        return b;
    } catch (const json::exception& e) {
        throw VersionMismatch(std::string("malformed bundle document: ") + e.what());
    }
}

std::string bundle_document_path(const std::string& directory) {
    return (std::filesystem::path(directory) / "bundle.json").string();
}

std::string annotation_ledger_path(const std::string& directory) {
    return (std::filesystem::path(directory) / "annotations.jsonl").string();
}

std::string evaluation_path(const std::string& directory) {
    return (std::filesystem::path(directory) / "evaluation.json").string();
}

void save_bundle(const Bundle& bundle, const std::string& directory) {
    std::error_code ec;
    std::filesystem::create_directories(directory, ec);
    if (ec) throw IoError("cannot create bundle directory " + directory + ": " + ec.message());
    write_file_atomic(bundle_document_path(directory), bundle_to_json(bundle));
}

Bundle load_bundle(const std::string& directory) {
    return bundle_from_json(read_file(bundle_document_path(directory)));
}

}  // namespace testforge
