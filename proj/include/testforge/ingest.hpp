#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "testforge/model.hpp"

namespace testforge {

struct IngestWarning {
    std::string problem_id;  // question name when known
    std::string message;

    bool operator==(const IngestWarning&) const = default;
};

struct MoodleParseResult {
    std::vector<Problem> problems;
    std::vector<IngestWarning> warnings;  // e.g. skipped question types
};

// Parses a Moodle XML quiz export (CodeRunner question subset, see README).
// Problems that read or use files are kept but flagged excluded; statement
// images are stripped. Throws MalformedXml on bad documents.
MoodleParseResult parse_moodle_xml(std::string_view xml_document);

// Removes <img ...> elements from statement markup, preserving surrounding
// text in order. Best-effort on malformed fragments; never throws.
std::string strip_images(std::string_view statement_markup);

// Column-name mapping for the submissions CSV export.
struct CsvSchema {
    std::string code_column = "code";
    std::string student_id_column = "student_id";
    std::string submitted_at_column = "submitted_at";
    std::string correct_column = "correct";
};

struct CsvRowError {
    size_t row = 0;  // 1-based data row index (header excluded)
    std::string message;

    bool operator==(const CsvRowError&) const = default;
};

struct SubmissionParseResult {
    SubmissionBatch batch;
    std::vector<CsvRowError> row_errors;  // collected, not fatal
};

// Parses the CSV submission export (RFC 4180 quoting; embedded newlines and
// quotes allowed inside quoted fields). Throws SchemaMismatch when the header
// row lacks a mapped column.
SubmissionParseResult parse_submissions_csv(std::string_view csv_document,
                                            const std::string& problem_id,
                                            const CsvSchema& schema = {});

// RFC 4180 writer used by round-trip tests and exports.
std::string csv_encode_row(const std::vector<std::string>& fields);

}  // namespace testforge
