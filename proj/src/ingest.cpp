#include "testforge/ingest.hpp"

#include <cctype>

#include "testforge/errors.hpp"
#include "testforge/text.hpp"
#include "testforge/xml.hpp"

namespace testforge {

namespace {

// CodeRunner exports wrap most values in a nested <text> element, but a few
// (answer, coderunnertype) carry the value directly. Accept both.
std::string element_value(const XmlElement& el) {
    if (const XmlElement* text = el.find("text")) return text->text;
    return el.text;
}

std::string child_value(const XmlElement& el, std::string_view name) {
    const XmlElement* c = el.find(name);
    return c ? element_value(*c) : std::string();
}

// Only unambiguous file-handle markers: fgets/fscanf also work on stdin, so
// they must not trigger exclusion.
bool uses_files(const Problem& p) {
    static const char* kMarkers[] = {"fopen", "freopen", "FILE *", "FILE*"};
    auto contains_marker = [](const std::string& s) {
        for (const char* m : kMarkers)
            if (s.find(m) != std::string::npos) return true;
        return false;
    };
    if (contains_marker(p.reference_solution)) return true;
    if (p.extra_code && contains_marker(*p.extra_code)) return true;
    return false;
}

}  // namespace

std::string strip_images(std::string_view markup) {
    std::string out;
    out.reserve(markup.size());
    size_t i = 0;
    while (i < markup.size()) {
        if (markup[i] == '<') {
            size_t j = i + 1;
            while (j < markup.size() && std::isspace(static_cast<unsigned char>(markup[j]))) ++j;
            bool closing = j < markup.size() && markup[j] == '/';
            if (closing) ++j;
            if (markup.compare(j, 3, "img") == 0 &&
                (j + 3 >= markup.size() || !std::isalnum(static_cast<unsigned char>(markup[j + 3])))) {
                size_t end = markup.find('>', j);
                if (end == std::string_view::npos) {
                    // malformed trailing tag: drop the remainder
                    break;
                }
                i = end + 1;
                continue;
            }
        }
        out.push_back(markup[i++]);
    }
    return out;
}

MoodleParseResult parse_moodle_xml(std::string_view xml_document) {
    XmlElement root = xml_parse(xml_document);
    if (root.name != "quiz")
        throw MalformedXml("expected <quiz> document element, got <" + root.name + ">");

    MoodleParseResult result;
    for (const XmlElement* q : root.find_all("question")) {
        std::string qtype = q->attribute("type");
        std::string name = child_value(*q, "name");
        if (qtype == "category") continue;  // organizational node, no content
        if (qtype != "coderunner") {
            result.warnings.push_back({name, "skipped unsupported question type '" + qtype + "'"});
            continue;
        }

        std::string cr_type = trim(child_value(*q, "coderunnertype"));
        Problem p;
        p.id = name.empty() ? ("question-" + std::to_string(result.problems.size() + 1)) : name;
        if (cr_type == "c_program") {
            p.kind = ProblemKind::FullProgram;
        } else if (cr_type == "c_function") {
            p.kind = ProblemKind::FunctionImplementation;
        } else {
            result.warnings.push_back(
                {p.id, "skipped unsupported coderunner type '" + cr_type + "'"});
            continue;
        }

        p.statement_text = strip_images(child_value(*q, "questiontext"));
        p.reference_solution = child_value(*q, "answer");
        if (trim(p.reference_solution).empty()) {
            result.warnings.push_back({p.id, "skipped question without a reference solution"});
            continue;
        }
        std::string extra = child_value(*q, "globalextra");
        if (!trim(extra).empty()) p.extra_code = extra;

        if (const XmlElement* cases = q->find("testcases")) {
            for (const XmlElement* tc : cases->find_all("testcase")) {
                InstructorTest t;
                t.payload = p.kind == ProblemKind::FullProgram ? child_value(*tc, "stdin")
                                                               : child_value(*tc, "testcode");
                t.expected_output = child_value(*tc, "expected");
                if (t.payload.empty()) {
                    result.warnings.push_back(
                        {p.id, "dropped instructor test with empty payload"});
                    continue;
                }
                p.instructor_tests.push_back(std::move(t));
            }
        }

        if (uses_files(p)) {
            p.excluded = true;
            p.excluded_reason = "reads or writes files";
        }
        result.problems.push_back(std::move(p));
    }
    return result;
}

namespace {

struct CsvTable {
    std::vector<std::vector<std::string>> rows;
};

// RFC 4180: fields separated by commas, rows by CRLF or LF; quoted fields may
// contain commas, newlines, and doubled quotes.
CsvTable parse_csv(std::string_view doc) {
    CsvTable table;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_started = false;
    size_t i = 0;
    auto end_field = [&] {
        row.push_back(std::move(field));
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        table.rows.push_back(std::move(row));
        row.clear();
        row_started = false;
    };
    while (i < doc.size()) {
        char c = doc[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < doc.size() && doc[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                }
            } else {
                field.push_back(c);
                ++i;
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                row_started = true;
                ++i;
                break;
            case ',':
                end_field();
                row_started = true;
                ++i;
                break;
            case '\r':
                if (i + 1 < doc.size() && doc[i + 1] == '\n') ++i;
                [[fallthrough]];
            case '\n':
                end_row();
                ++i;
                break;
            default:
                field.push_back(c);
                row_started = true;
                ++i;
                break;
        }
    }
    if (in_quotes) throw SchemaMismatch("unterminated quoted field at end of CSV");
    if (row_started || !field.empty() || !row.empty()) end_row();
    return table;
}

}  // namespace

std::string csv_encode_row(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out.push_back(',');
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\r\n") != std::string::npos) {
            out.push_back('"');
            for (char c : f) {
                if (c == '"') out.push_back('"');
                out.push_back(c);
            }
            out.push_back('"');
        } else {
            out += f;
        }
    }
    out.push_back('\n');
    return out;
}

SubmissionParseResult parse_submissions_csv(std::string_view csv_document,
                                            const std::string& problem_id,
                                            const CsvSchema& schema) {
    CsvTable table = parse_csv(csv_document);
    if (table.rows.empty()) throw SchemaMismatch("empty CSV document");

    const std::vector<std::string>& header = table.rows[0];
    auto column_index = [&](const std::string& wanted) -> size_t {
        for (size_t i = 0; i < header.size(); ++i)
            if (header[i] == wanted) return i;
        throw SchemaMismatch("missing CSV column '" + wanted + "'");
    };
    size_t code_col = column_index(schema.code_column);
    size_t id_col = column_index(schema.student_id_column);
    size_t time_col = column_index(schema.submitted_at_column);
    size_t correct_col = column_index(schema.correct_column);

    SubmissionParseResult result;
    result.batch.problem_id = problem_id;
    for (size_t r = 1; r < table.rows.size(); ++r) {
        const auto& row = table.rows[r];
        if (row.size() == 1 && row[0].empty()) continue;  // blank trailing line
        if (row.size() != header.size()) {
            result.row_errors.push_back(
                {r, "expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(row.size())});
            continue;
        }
        const std::string& correct = row[correct_col];
        if (correct != "0" && correct != "1") {
            result.row_errors.push_back({r, "correctness digit must be 0 or 1, got '" + correct + "'"});
            continue;
        }
        Submission s;
        s.code = row[code_col];
        s.student_id = row[id_col];
        s.submitted_at = row[time_col];
        s.recorded_correct = correct == "1" ? 1 : 0;
        result.batch.submissions.push_back(std::move(s));
    }
    return result;
}

}  // namespace testforge
