#include "testforge/evaluator.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "testforge/errors.hpp"
#include "testforge/text.hpp"

namespace testforge {

namespace {

using nlohmann::json;

void check_grade(int grade) {
    if (grade != 1 && grade != 0 && grade != -1)
        throw InvalidGrade("grade must be 1, 0 or -1, got " + std::to_string(grade));
}

}  // namespace

const char* to_string(Quadrant q) {
    switch (q) {
        case Quadrant::BothValid: return "both_valid";
        case Quadrant::BothInvalid: return "both_invalid";
        case Quadrant::LlmValid_InstrInvalid: return "llm_valid_instructor_invalid";
        case Quadrant::LlmInvalid_InstrValid: return "llm_invalid_instructor_valid";
        case Quadrant::ExcludedNoCompile: return "excluded_no_compile";
    }
    return "both_valid";
}

const char* to_string(Validity v) {
    switch (v) {
        case Validity::Valid: return "valid";
        case Validity::Invalid: return "invalid";
        case Validity::NeedsReview: return "needs_review";
    }
    return "valid";
}

const char* to_string(MismatchCause c) {
    switch (c) {
        case MismatchCause::LlmMismatch: return "llm_mismatch";
        case MismatchCause::InstructorMismatch: return "instructor_mismatch";
        case MismatchCause::OtherMismatch: return "other_mismatch";
    }
    return "other_mismatch";
}

Quadrant quadrant_from_string(const std::string& s) {
    for (Quadrant q : {Quadrant::BothValid, Quadrant::BothInvalid, Quadrant::LlmValid_InstrInvalid,
                       Quadrant::LlmInvalid_InstrValid, Quadrant::ExcludedNoCompile})
        if (s == to_string(q)) return q;
    throw SchemaMismatch("unknown quadrant: " + s);
}

Validity validity_from_string(const std::string& s) {
    for (Validity v : {Validity::Valid, Validity::Invalid, Validity::NeedsReview})
        if (s == to_string(v)) return v;
    throw SchemaMismatch("unknown validity: " + s);
}

MismatchCause mismatch_cause_from_string(const std::string& s) {
    for (MismatchCause c : {MismatchCause::LlmMismatch, MismatchCause::InstructorMismatch,
                            MismatchCause::OtherMismatch})
        if (s == to_string(c)) return c;
    throw SchemaMismatch("unknown mismatch cause: " + s);
}

Quadrant quadrant_of(int llm_grade, int instructor_grade) {
    check_grade(llm_grade);
    check_grade(instructor_grade);
    if (llm_grade == -1 || instructor_grade == -1) return Quadrant::ExcludedNoCompile;
    if (llm_grade == 1 && instructor_grade == 1) return Quadrant::BothValid;
    if (llm_grade == 0 && instructor_grade == 0) return Quadrant::BothInvalid;
    if (llm_grade == 1) return Quadrant::LlmValid_InstrInvalid;
    return Quadrant::LlmInvalid_InstrValid;
}

Validity decide_validity(int llm_grade, int instructor_grade) {
    if ((llm_grade != 0 && llm_grade != 1) || (instructor_grade != 0 && instructor_grade != 1))
        throw InvalidGrade("validity is decided over compiling grades in {1,0} only");
    if (llm_grade == 1 && instructor_grade == 1) return Validity::Valid;
    if (llm_grade == 0 && instructor_grade == 0) return Validity::Invalid;
    return Validity::NeedsReview;
}

std::vector<QuadrantRecord> build_quadrant_records(const std::string& problem_id,
                                                   const std::vector<GradeRecord>& llm,
                                                   const std::vector<GradeRecord>& instructor) {
    if (llm.size() != instructor.size())
        throw LengthMismatch("grade sets differ in size: llm " + std::to_string(llm.size()) +
                             " vs instructor " + std::to_string(instructor.size()));
    std::vector<QuadrantRecord> records;
    records.reserve(llm.size());
    for (size_t i = 0; i < llm.size(); ++i) {
        if (llm[i].submission_index != instructor[i].submission_index)
            throw LengthMismatch("grade sets are not aligned at position " + std::to_string(i));
        QuadrantRecord r;
        r.problem_id = problem_id;
        r.submission_index = llm[i].submission_index;
        r.student_id = llm[i].student_id;
        r.llm_grade = llm[i].grade;
        r.instructor_grade = instructor[i].grade;
        r.quadrant = quadrant_of(r.llm_grade, r.instructor_grade);
        if (r.quadrant != Quadrant::ExcludedNoCompile)
            r.validity = decide_validity(r.llm_grade, r.instructor_grade);
        records.push_back(std::move(r));
    }
    return records;
}

void annotate(QuadrantRecord& record, const Annotation& annotation) {
    if (!record.needs_review())
        throw NotReviewable("record for submission " + std::to_string(record.submission_index) +
                            " is not a pending mismatch");
    if (annotation.resolved_validity == Validity::NeedsReview)
        throw NotReviewable("resolved validity must be valid or invalid");
    record.annotation = annotation;
    record.validity = annotation.resolved_validity;
}

void append_ledger_entry(const std::string& ledger_path, const LedgerEntry& entry) {
    json line{{"problem_id", entry.problem_id},
              {"submission_index", entry.submission_index},
              {"cause", to_string(entry.annotation.cause)},
              {"resolved_validity", to_string(entry.annotation.resolved_validity)},
              {"note", entry.annotation.note},
              {"timestamp", entry.annotation.timestamp},
              {"annotator", entry.annotation.annotator}};
    std::ofstream out(ledger_path, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot open ledger " + ledger_path);
    out << line.dump() << "\n";
    if (!out) throw IoError("cannot append to ledger " + ledger_path);
}

std::vector<LedgerEntry> read_ledger(const std::string& ledger_path) {
    std::vector<LedgerEntry> entries;
    if (!std::filesystem::exists(ledger_path)) return entries;
    std::string content = read_file(ledger_path);
    for (const std::string& line : split_lines(content)) {
        if (trim(line).empty()) continue;
        json doc;
        try {
            doc = json::parse(line);
        } catch (const json::exception& e) {
            throw SchemaMismatch("bad ledger line: " + std::string(e.what()));
        }
        LedgerEntry e;
        e.problem_id = doc.at("problem_id").get<std::string>();
        e.submission_index = doc.at("submission_index").get<int>();
        e.annotation.cause = mismatch_cause_from_string(doc.at("cause").get<std::string>());
        e.annotation.resolved_validity =
            validity_from_string(doc.at("resolved_validity").get<std::string>());
        e.annotation.note = doc.at("note").get<std::string>();
        e.annotation.timestamp = doc.at("timestamp").get<std::string>();
        e.annotation.annotator = doc.at("annotator").get<std::string>();
        entries.push_back(std::move(e));
    }
    return entries;
}

void apply_ledger(std::vector<QuadrantRecord>& records, const std::vector<LedgerEntry>& entries) {
    for (const auto& entry : entries) {
        for (auto& record : records) {
            if (record.problem_id != entry.problem_id ||
                record.submission_index != entry.submission_index)
                continue;
            // First resolution wins; replays of the same ledger are no-ops.
            if (record.needs_review()) annotate(record, entry.annotation);
            break;
        }
    }
}

namespace {

bool included_in_matrices(const QuadrantRecord& r, long& unresolved) {
    if (r.quadrant == Quadrant::ExcludedNoCompile) return false;
    if (r.annotation && r.annotation->cause == MismatchCause::OtherMismatch) return false;
    if (r.needs_review()) {
        ++unresolved;
        return false;
    }
    return true;
}

}  // namespace

ConfusionMatrix confusion_matrix(const std::vector<QuadrantRecord>& records, SuiteKind subject,
                                 bool allow_partial) {
    ConfusionMatrix m;
    long unresolved = 0;
    for (const auto& r : records) {
        if (!included_in_matrices(r, unresolved)) continue;
        bool actually_valid = *r.validity == Validity::Valid;
        int grade = subject == SuiteKind::Llm ? r.llm_grade : r.instructor_grade;
        bool graded_valid = grade == 1;
        if (graded_valid && actually_valid) ++m.tp;
        else if (graded_valid && !actually_valid) ++m.fp;
        else if (!graded_valid && actually_valid) ++m.fn;
        else ++m.tn;
    }
    if (unresolved > 0 && !allow_partial)
        throw UnresolvedMismatches(std::to_string(unresolved) +
                                   " mismatching records still need review");
    return m;
}

std::string Ratio::display_percent() const {
    if (den == 0) return "n/a";
    // Exact integer arithmetic: percentage truncated to tenths.
    long long tenths = num * 1000 / den;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%lld", tenths / 10, tenths % 10);
    return buf;
}

namespace {

// Rounded (half away from zero) two-decimal percentage, Table-6 style.
std::string percent_two_decimals(const Ratio& r) {
    if (r.den == 0) return "n/a";
    long long hundredths = (r.num * 10000 + r.den / 2) / r.den;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%lld.%02lld", hundredths / 100, hundredths % 100);
    return buf;
}

}  // namespace

Metrics metrics_from(const ConfusionMatrix& m) {
    auto ratio = [](long long num, long long den, const char* name) {
        if (den == 0) throw UndefinedMetric(name);
        return Ratio{num, den};
    };
    Metrics out;
    out.accuracy = ratio(m.tp + m.tn, m.total(), "accuracy");
    out.precision = ratio(m.tp, m.tp + m.fp, "precision");
    out.recall = ratio(m.tp, m.tp + m.fn, "recall");
    out.false_positive_rate = ratio(m.fp, m.fp + m.tn, "false_positive_rate");
    return out;
}

std::vector<ProblemReportRow> per_problem_report(
    const std::map<std::string, std::vector<QuadrantRecord>>& records_by_problem,
    bool allow_partial) {
    std::vector<ProblemReportRow> rows;
    for (const auto& [problem_id, records] : records_by_problem) {
        long n = 0, matches = 0, llm_mismatch = 0, instructor_mismatch = 0;
        long unresolved = 0;
        for (const auto& r : records) {
            if (!included_in_matrices(r, unresolved)) continue;
            ++n;
            if (r.quadrant == Quadrant::BothValid || r.quadrant == Quadrant::BothInvalid) {
                ++matches;
            } else if (r.annotation->cause == MismatchCause::LlmMismatch) {
                ++llm_mismatch;
            } else {
                ++instructor_mismatch;
            }
        }
        if (unresolved > 0 && !allow_partial)
            throw UnresolvedMismatches("problem " + problem_id + ": " +
                                       std::to_string(unresolved) +
                                       " mismatching records still need review");
        if (n == 0) {
            std::fprintf(stderr, "warning: problem %s has no evaluable records, row omitted\n",
                         problem_id.c_str());
            continue;
        }
        ProblemReportRow row;
        row.problem_id = problem_id;
        row.n = n;
        row.matches = {matches, n};
        row.llm_mismatches = {llm_mismatch, n};
        row.instructor_mismatches = {instructor_mismatch, n};
        row.matches_pct = percent_two_decimals(row.matches);
        row.llm_mismatches_pct = percent_two_decimals(row.llm_mismatches);
        row.instructor_mismatches_pct = percent_two_decimals(row.instructor_mismatches);
        rows.push_back(std::move(row));
    }
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
        long long left = a.matches.num * b.matches.den;
        long long right = b.matches.num * a.matches.den;
        if (left != right) return left > right;
        return a.n > b.n;
    });
    return rows;
}

// -- Serialization --------------------------------------------------------------

namespace {

json annotation_to_json(const Annotation& a) {
    return json{{"cause", to_string(a.cause)},
                {"resolved_validity", to_string(a.resolved_validity)},
                {"note", a.note},
                {"timestamp", a.timestamp},
                {"annotator", a.annotator}};
}

Annotation annotation_from_json(const json& j) {
    Annotation a;
    a.cause = mismatch_cause_from_string(j.at("cause").get<std::string>());
    a.resolved_validity = validity_from_string(j.at("resolved_validity").get<std::string>());
    a.note = j.at("note").get<std::string>();
    a.timestamp = j.at("timestamp").get<std::string>();
    a.annotator = j.at("annotator").get<std::string>();
    return a;
}

}  // namespace

json evaluation_to_json(const Evaluation& evaluation) {
    json records = json::array();
    for (const auto& r : evaluation.records) {
        records.push_back(
            {{"problem_id", r.problem_id},
             {"submission_index", r.submission_index},
             {"student_id", r.student_id},
             {"llm_grade", r.llm_grade},
             {"instructor_grade", r.instructor_grade},
             {"quadrant", to_string(r.quadrant)},
             {"validity", r.validity ? json(to_string(*r.validity)) : json(nullptr)},
             {"annotation", r.annotation ? annotation_to_json(*r.annotation) : json(nullptr)}});
    }
    return json{{"schema_version", 1}, {"records", records}};
}

Evaluation evaluation_from_json(const json& doc) {
    Evaluation evaluation;
    for (const auto& j : doc.at("records")) {
        QuadrantRecord r;
        r.problem_id = j.at("problem_id").get<std::string>();
        r.submission_index = j.at("submission_index").get<int>();
        r.student_id = j.at("student_id").get<std::string>();
        r.llm_grade = j.at("llm_grade").get<int>();
        r.instructor_grade = j.at("instructor_grade").get<int>();
        r.quadrant = quadrant_from_string(j.at("quadrant").get<std::string>());
        if (!j.at("validity").is_null())
            r.validity = validity_from_string(j.at("validity").get<std::string>());
        if (!j.at("annotation").is_null()) r.annotation = annotation_from_json(j.at("annotation"));
        evaluation.records.push_back(std::move(r));
    }
    return evaluation;
}

namespace {

std::map<std::string, std::vector<QuadrantRecord>> group_by_problem(
    const std::vector<QuadrantRecord>& records) {
    std::map<std::string, std::vector<QuadrantRecord>> grouped;
    for (const auto& r : records) grouped[r.problem_id].push_back(r);
    return grouped;
}

std::map<std::string, long> quadrant_counts(const std::vector<QuadrantRecord>& records) {
    std::map<std::string, long> counts;
    for (Quadrant q : {Quadrant::BothValid, Quadrant::BothInvalid, Quadrant::LlmValid_InstrInvalid,
                       Quadrant::LlmInvalid_InstrValid, Quadrant::ExcludedNoCompile})
        counts[to_string(q)] = 0;
    for (const auto& r : records) ++counts[to_string(r.quadrant)];
    return counts;
}

json matrix_to_json(const ConfusionMatrix& m) {
    return json{{"tp", m.tp}, {"fp", m.fp}, {"fn", m.fn}, {"tn", m.tn}, {"n", m.total()}};
}

json metrics_to_json(const Metrics& m) {
    auto ratio = [](const Ratio& r) {
        return json{{"num", r.num},
                    {"den", r.den},
                    {"value", r.value()},
                    {"display_percent", r.display_percent()}};
    };
    return json{{"accuracy", ratio(m.accuracy)},
                {"precision", ratio(m.precision)},
                {"recall", ratio(m.recall)},
                {"false_positive_rate", ratio(m.false_positive_rate)}};
}

struct ReportData {
    std::map<std::string, long> quadrants;
    ConfusionMatrix llm_matrix;
    ConfusionMatrix instructor_matrix;
    std::optional<Metrics> llm_metrics;
    std::optional<Metrics> instructor_metrics;
    std::vector<ProblemReportRow> per_problem;
};

ReportData collect_report(const Evaluation& evaluation, bool allow_partial) {
    ReportData data;
    data.quadrants = quadrant_counts(evaluation.records);
    data.llm_matrix = confusion_matrix(evaluation.records, SuiteKind::Llm, allow_partial);
    data.instructor_matrix =
        confusion_matrix(evaluation.records, SuiteKind::Instructor, allow_partial);
    try {
        data.llm_metrics = metrics_from(data.llm_matrix);
    } catch (const UndefinedMetric&) {}
    try {
        data.instructor_metrics = metrics_from(data.instructor_matrix);
    } catch (const UndefinedMetric&) {}
    data.per_problem = per_problem_report(group_by_problem(evaluation.records), allow_partial);
    return data;
}

std::string report_json(const Evaluation& evaluation, const ReportData& data) {
    json rows = json::array();
    for (const auto& r : data.per_problem)
        rows.push_back({{"problem_id", r.problem_id},
                        {"n", r.n},
                        {"matches_pct", r.matches_pct},
                        {"llm_mismatches_pct", r.llm_mismatches_pct},
                        {"instructor_mismatches_pct", r.instructor_mismatches_pct}});
    json doc{{"quadrants", data.quadrants},
             {"llm", {{"matrix", matrix_to_json(data.llm_matrix)}}},
             {"instructor", {{"matrix", matrix_to_json(data.instructor_matrix)}}},
             {"per_problem", rows},
             {"evaluation", evaluation_to_json(evaluation)}};
    if (data.llm_metrics) doc["llm"]["metrics"] = metrics_to_json(*data.llm_metrics);
    if (data.instructor_metrics)
        doc["instructor"]["metrics"] = metrics_to_json(*data.instructor_metrics);
    return doc.dump(2) + "\n";
}

std::string report_csv(const ReportData& data) {
    std::string out = "problem_id,n,matches_pct,llm_mismatches_pct,instructor_mismatches_pct\n";
    for (const auto& r : data.per_problem) {
        out += r.problem_id + "," + std::to_string(r.n) + "," + r.matches_pct + "," +
               r.llm_mismatches_pct + "," + r.instructor_mismatches_pct + "\n";
    }
    return out;
}

std::string report_markdown(const ReportData& data) {
    std::string out;
    out += "# Evaluation report\n\n";

    out += "## Grade quadrants\n\n";
    out += "| Quadrant | Solutions |\n|---|---|\n";
    for (const auto& [name, count] : data.quadrants)
        out += "| " + name + " | " + std::to_string(count) + " |\n";
    out += "\n";

    auto matrix_block = [](const char* title, const ConfusionMatrix& m) {
        std::string s;
        s += std::string("## ") + title + " (n = " + std::to_string(m.total()) + ")\n\n";
        s += "| | Actual valid | Actual invalid |\n|---|---|---|\n";
        s += "| Graded valid | " + std::to_string(m.tp) + " | " + std::to_string(m.fp) + " |\n";
        s += "| Graded invalid | " + std::to_string(m.fn) + " | " + std::to_string(m.tn) + " |\n\n";
        return s;
    };
    out += matrix_block("LLM test suite confusion matrix", data.llm_matrix);
    out += matrix_block("Instructor test suite confusion matrix", data.instructor_matrix);

    if (data.llm_metrics && data.instructor_metrics) {
        const Metrics& l = *data.llm_metrics;
        const Metrics& i = *data.instructor_metrics;
        out += "## Metrics\n\n";
        out += "| Metric | LLM Test Suite | Instructor Test Suite |\n|---|---|---|\n";
        out += "| Accuracy | " + l.accuracy.display_percent() + "% | " +
               i.accuracy.display_percent() + "% |\n";
        out += "| Precision | " + l.precision.display_percent() + "% | " +
               i.precision.display_percent() + "% |\n";
        out += "| Recall | " + l.recall.display_percent() + "% | " +
               i.recall.display_percent() + "% |\n";
        out += "| False Positive Rate | " + l.false_positive_rate.display_percent() + "% | " +
               i.false_positive_rate.display_percent() + "% |\n\n";
    }

    out += "## Per-problem results\n\n";
    out += "| Problem | Solutions | % Matches | % LLM Mismatches | % Instructor Mismatches |\n";
    out += "|---|---|---|---|---|\n";
    for (const auto& r : data.per_problem) {
        out += "| " + r.problem_id + " | " + std::to_string(r.n) + " | " + r.matches_pct + " | " +
               r.llm_mismatches_pct + " | " + r.instructor_mismatches_pct + " |\n";
    }
    return out;
}

}  // namespace

std::string emit_report(const Evaluation& evaluation, ReportFormat format, bool allow_partial) {
    ReportData data = collect_report(evaluation, allow_partial);
    switch (format) {
        case ReportFormat::Json: return report_json(evaluation, data);
        case ReportFormat::Csv: return report_csv(data);
        case ReportFormat::Markdown: return report_markdown(data);
    }
    throw UsageError("unknown report format");
}

}  // namespace testforge
