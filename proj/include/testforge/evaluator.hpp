#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "testforge/model.hpp"

namespace testforge {

enum class Quadrant {
    BothValid,
    BothInvalid,
    LlmValid_InstrInvalid,
    LlmInvalid_InstrValid,
    ExcludedNoCompile,
};

enum class Validity { Valid, Invalid, NeedsReview };

enum class MismatchCause { LlmMismatch, InstructorMismatch, OtherMismatch };

struct Annotation {
    MismatchCause cause = MismatchCause::OtherMismatch;
    Validity resolved_validity = Validity::Invalid;  // Valid or Invalid only
    std::string note;
    std::string timestamp;  // ISO 8601 UTC
    std::string annotator;

    bool operator==(const Annotation&) const = default;
};

struct QuadrantRecord {
    std::string problem_id;
    int submission_index = 0;
    std::string student_id;
    int llm_grade = 0;
    int instructor_grade = 0;
    Quadrant quadrant = Quadrant::BothValid;
    // Unset for ExcludedNoCompile records, where validity is meaningless.
    std::optional<Validity> validity;
    std::optional<Annotation> annotation;

    bool needs_review() const { return validity && *validity == Validity::NeedsReview; }
    bool operator==(const QuadrantRecord&) const = default;
};

struct ConfusionMatrix {
    long tp = 0;  // suite says valid, actually valid
    long fp = 0;  // suite says valid, actually invalid
    long fn = 0;  // suite says invalid, actually valid
    long tn = 0;  // suite says invalid, actually invalid

    long total() const { return tp + fp + fn + tn; }
    bool operator==(const ConfusionMatrix&) const = default;
};

// Exact rational kept alongside the floating value so published tables can be
// reproduced digit for digit.
struct Ratio {
    long long num = 0;
    long long den = 0;

    double value() const { return den == 0 ? 0.0 : double(num) / double(den); }
    // Percentage truncated (not rounded) to one decimal, e.g. 0.26% -> "0.2".
    std::string display_percent() const;
    bool operator==(const Ratio&) const = default;
};

struct Metrics {
    Ratio accuracy;
    Ratio precision;
    Ratio recall;
    Ratio false_positive_rate;

    bool operator==(const Metrics&) const = default;
};

const char* to_string(Quadrant q);
const char* to_string(Validity v);
const char* to_string(MismatchCause c);
Quadrant quadrant_from_string(const std::string& s);
Validity validity_from_string(const std::string& s);
MismatchCause mismatch_cause_from_string(const std::string& s);

// Grade-pair classification; grades outside {1,0,-1} raise InvalidGrade.
Quadrant quadrant_of(int llm_grade, int instructor_grade);

// Table-12 style decision over compiling grades; grades must be in {1,0}.
Validity decide_validity(int llm_grade, int instructor_grade);

// Pairs up the two grade sets into one record per submission.
std::vector<QuadrantRecord> build_quadrant_records(const std::string& problem_id,
                                                   const std::vector<GradeRecord>& llm,
                                                   const std::vector<GradeRecord>& instructor);

// Resolves a NeedsReview record; raises NotReviewable on anything else
// (including already-annotated records, which keep their first resolution).
void annotate(QuadrantRecord& record, const Annotation& annotation);

// -- Annotation ledger (append-only JSONL) ------------------------------------

struct LedgerEntry {
    std::string problem_id;
    int submission_index = 0;
    Annotation annotation;
};

void append_ledger_entry(const std::string& ledger_path, const LedgerEntry& entry);
std::vector<LedgerEntry> read_ledger(const std::string& ledger_path);  // empty if absent
// Re-applies annotations to matching records; idempotent.
void apply_ledger(std::vector<QuadrantRecord>& records, const std::vector<LedgerEntry>& entries);

// -- Aggregation ---------------------------------------------------------------

// Excludes non-compiling records and OtherMismatch annotations. Unless
// allow_partial is set, unresolved mismatches raise UnresolvedMismatches;
// with it they are simply skipped.
ConfusionMatrix confusion_matrix(const std::vector<QuadrantRecord>& records, SuiteKind subject,
                                 bool allow_partial = false);

// Formulas over matrix counts; zero denominators raise UndefinedMetric.
Metrics metrics_from(const ConfusionMatrix& matrix);

struct ProblemReportRow {
    std::string problem_id;
    long n = 0;  // compiling, non-Other records
    Ratio matches;
    Ratio llm_mismatches;
    Ratio instructor_mismatches;
    // Rounded two-decimal percentage displays.
    std::string matches_pct;
    std::string llm_mismatches_pct;
    std::string instructor_mismatches_pct;

    bool operator==(const ProblemReportRow&) const = default;
};

// One row per problem, sorted by match percentage (desc), then n (desc).
// Empty groups are omitted with a warning on stderr.
std::vector<ProblemReportRow> per_problem_report(
    const std::map<std::string, std::vector<QuadrantRecord>>& records_by_problem,
    bool allow_partial = false);

// -- Whole-evaluation document --------------------------------------------------

struct Evaluation {
    std::vector<QuadrantRecord> records;

    bool operator==(const Evaluation&) const = default;
};

nlohmann::json evaluation_to_json(const Evaluation& evaluation);
Evaluation evaluation_from_json(const nlohmann::json& doc);

enum class ReportFormat { Json, Csv, Markdown };

// Renders quadrant counts, both confusion matrices, metrics, and the
// per-problem table. JSON is the canonical machine-readable form.
std::string emit_report(const Evaluation& evaluation, ReportFormat format,
                        bool allow_partial = false);

}  // namespace testforge
