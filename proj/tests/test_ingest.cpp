#include <doctest.h>

#include <random>

#include "test_util.hpp"
#include "testforge/errors.hpp"
#include "testforge/ingest.hpp"
#include "testforge/text.hpp"
#include "testforge/xml.hpp"

using namespace testforge;

TEST_SUITE_BEGIN("ingest");

namespace {

const char* kMiniExport = R"(<?xml version="1.0" encoding="UTF-8"?>
<quiz>
  <question type="coderunner">
    <name><text>double-it</text></name>
    <questiontext format="html">
      <text><![CDATA[<p>Read a number and print it doubled.</p>]]></text>
    </questiontext>
    <coderunnertype>c_program</coderunnertype>
    <answer><![CDATA[#include <stdio.h>
int main(void) { int n; scanf("%d", &n); printf("%d\n", n * 2); return 0; }
]]></answer>
    <testcases>
      <testcase><testcode><text></text></testcode>
        <stdin><text>1
</text></stdin>
        <expected><text>2
</text></expected></testcase>
      <testcase><testcode><text></text></testcode>
        <stdin><text>4
</text></stdin>
        <expected><text>8
</text></expected></testcase>
      <testcase><testcode><text></text></testcode>
        <stdin><text>-2
</text></stdin>
        <expected><text>-4
</text></expected></testcase>
    </testcases>
  </question>
</quiz>
)";

// Naive reference stripper: walks characters and copies everything outside
// <img...> tags. Independent of the production implementation.
std::string reference_strip(const std::string& markup) {
    std::string out;
    size_t i = 0;
    while (i < markup.size()) {
        bool is_img = false;
        if (markup[i] == '<') {
            size_t k = i + 1;
            while (k < markup.size() && (markup[k] == ' ' || markup[k] == '/' ||
                                         markup[k] == '\n' || markup[k] == '\t'))
                ++k;
            if (k + 2 < markup.size() && markup[k] == 'i' && markup[k + 1] == 'm' &&
                markup[k + 2] == 'g') {
                char next = k + 3 < markup.size() ? markup[k + 3] : '>';
                if (!isalnum(static_cast<unsigned char>(next))) is_img = true;
            }
        }
        if (is_img) {
            while (i < markup.size() && markup[i] != '>') ++i;
            if (i < markup.size()) ++i;
        } else {
            out.push_back(markup[i++]);
        }
    }
    return out;
}

}  // namespace

TEST_CASE("mini export parses one full-program question with 3 tests") {
    MoodleParseResult result = parse_moodle_xml(kMiniExport);
    REQUIRE(result.problems.size() == 1);
    const Problem& p = result.problems[0];
    CHECK(p.id == "double-it");
    CHECK(p.kind == ProblemKind::FullProgram);
    CHECK(p.statement_text == "<p>Read a number and print it doubled.</p>");
    CHECK(p.reference_solution.find("scanf") != std::string::npos);
    CHECK_FALSE(p.extra_code.has_value());
    CHECK_FALSE(p.excluded);
    REQUIRE(p.instructor_tests.size() == 3);
    CHECK(p.instructor_tests[0].payload == "1\n");
    CHECK(p.instructor_tests[0].expected_output == "2\n");
    CHECK(p.instructor_tests[2].payload == "-2\n");
}

TEST_CASE("course export fixture: kinds, exclusion, extra code, warnings") {
    MoodleParseResult result =
        parse_moodle_xml(read_file(tftest::repo_path("fixtures/moodle/course_export.xml")));
    REQUIRE(result.problems.size() == 6);

    auto find = [&](const std::string& id) -> const Problem& {
        for (const auto& p : result.problems)
            if (p.id == id) return p;
        REQUIRE_MESSAGE(false, "problem not found: " << id);
        return result.problems[0];
    };

    const Problem& hamming = find("p07-hamming-one");
    CHECK(hamming.kind == ProblemKind::FunctionImplementation);
    REQUIRE(hamming.extra_code.has_value());
    CHECK(hamming.extra_code->find("WORD_LENGTH") != std::string::npos);
    CHECK(hamming.instructor_tests.size() == 6);

    const Problem& histogram = find("p14-number-histogram");
    CHECK(histogram.excluded);
    CHECK(histogram.excluded_reason == "reads or writes files");

    const Problem& letter = find("p05-next-letter");
    CHECK(letter.statement_text.find("<img") == std::string::npos);
    CHECK(letter.statement_text.find("stylized arrow") != std::string::npos);

    // the multichoice question is skipped with a warning
    bool warned = false;
    for (const auto& w : result.warnings)
        if (w.problem_id == "q-week1-quiz") warned = true;
    CHECK(warned);
}

TEST_CASE("export with zero questions yields empty list") {
    MoodleParseResult result = parse_moodle_xml("<quiz></quiz>");
    CHECK(result.problems.empty());
    CHECK(result.warnings.empty());
}

TEST_CASE("malformed xml reports a position") {
    try {
        parse_moodle_xml("<quiz><question type=\"coderunner\"></quiz>");
        FAIL("expected MalformedXml");
    } catch (const MalformedXml& e) {
        CHECK(std::string(e.what()).find("line") != std::string::npos);
    }
}

TEST_CASE("strip_images spec examples") {
    CHECK(strip_images("A <img src=x> B") == "A  B");
    CHECK(strip_images("no images here") == "no images here");
    CHECK(strip_images("x<img src=\"a.png\" alt=\"a\"/>y<img src=b>z") == "xyz");
}

TEST_CASE("strip_images agrees with the reference stripper on a corpus") {
    std::mt19937 rng(42);
    const std::vector<std::string> pieces = {
        "plain text ",  "<p>para</p>", "<img src=\"x.png\">", "<img src=y alt=z/>",
        "text <b>bold</b> ", "\n", "<imgx>not an image</imgx>", "tail"};
    for (int round = 0; round < 300; ++round) {
        std::string markup;
        int n = 1 + rng() % 8;
        for (int i = 0; i < n; ++i) markup += pieces[rng() % pieces.size()];
        CAPTURE(markup);
        CHECK(strip_images(markup) == reference_strip(markup));
    }
}

TEST_CASE("3-row submissions fixture parses field by field") {
    std::string csv =
        "code,student_id,submitted_at,correct\n"
        "\"int main(void) { return 0; }\",stu1,2023-09-01 10:00:00,1\n"
        "\"int main(void) {\n  return 1;\n}\",stu2,2023-09-01 10:05:00,0\n"
        "simple,stu3,2023-09-01 10:10:00,1\n";
    SubmissionParseResult result = parse_submissions_csv(csv, "p1");
    CHECK(result.row_errors.empty());
    REQUIRE(result.batch.submissions.size() == 3);
    CHECK(result.batch.problem_id == "p1");
    CHECK(result.batch.submissions[0].student_id == "stu1");
    CHECK(result.batch.submissions[0].recorded_correct == 1);
    CHECK(result.batch.submissions[1].code == "int main(void) {\n  return 1;\n}");
    CHECK(result.batch.submissions[1].recorded_correct == 0);
    CHECK(result.batch.submissions[2].submitted_at == "2023-09-01 10:10:00");
}

TEST_CASE("bad correctness digit is a row error, remaining rows parse") {
    std::string csv =
        "code,student_id,submitted_at,correct\n"
        "a,stu1,t1,1\n"
        "b,stu2,t2,2\n"
        "c,stu3,t3,0\n";
    SubmissionParseResult result = parse_submissions_csv(csv, "p1");
    REQUIRE(result.row_errors.size() == 1);
    CHECK(result.row_errors[0].row == 2);
    REQUIRE(result.batch.submissions.size() == 2);
    CHECK(result.batch.submissions[1].student_id == "stu3");
}

TEST_CASE("missing column raises SchemaMismatch") {
    CHECK_THROWS_AS(parse_submissions_csv("code,student_id,when,correct\n", "p1"),
                    SchemaMismatch);
}

TEST_CASE("configurable column mapping") {
    CsvSchema schema;
    schema.code_column = "source";
    schema.correct_column = "ok";
    std::string csv = "source,student_id,submitted_at,ok\nX,s,t,1\n";
    SubmissionParseResult result = parse_submissions_csv(csv, "p1", schema);
    REQUIRE(result.batch.submissions.size() == 1);
    CHECK(result.batch.submissions[0].code == "X");
}

TEST_CASE("quoted commas and newlines round-trip byte-exact") {
    std::mt19937 rng(99);
    auto random_code = [&]() {
        std::string s;
        const char alphabet[] = "ab,\"\n;{}()= \t";
        size_t len = 1 + rng() % 40;
        for (size_t i = 0; i < len; ++i) s.push_back(alphabet[rng() % (sizeof(alphabet) - 1)]);
        return s;
    };
    for (int round = 0; round < 200; ++round) {
        std::vector<std::string> codes;
        std::string csv = "code,student_id,submitted_at,correct\n";
        int rows = 1 + rng() % 5;
        for (int r = 0; r < rows; ++r) {
            codes.push_back(random_code());
            csv += csv_encode_row({codes.back(), "s" + std::to_string(r), "t", "1"});
        }
        SubmissionParseResult result = parse_submissions_csv(csv, "p");
        REQUIRE(result.batch.submissions.size() == codes.size());
        for (size_t r = 0; r < codes.size(); ++r)
            CHECK(result.batch.submissions[r].code == codes[r]);
    }
}

TEST_CASE("stdin-reading idioms do not trigger file exclusion") {
    std::string xml = R"(<quiz><question type="coderunner">
      <name><text>line-echo</text></name>
      <questiontext format="html"><text>Echo a line.</text></questiontext>
      <coderunnertype>c_program</coderunnertype>
      <answer><![CDATA[#include <stdio.h>
int main(void) { char line[64]; fgets(line, 64, stdin); fscanf(stdin, "%*s"); printf("%s", line); return 0; }
]]></answer>
      <testcases><testcase><testcode><text></text></testcode>
        <stdin><text>hi
</text></stdin><expected><text>hi
</text></expected></testcase></testcases>
    </question></quiz>)";
    MoodleParseResult result = parse_moodle_xml(xml);
    REQUIRE(result.problems.size() == 1);
    CHECK_FALSE(result.problems[0].excluded);
}

TEST_CASE("parsing is deterministic: same bytes, identical model") {
    std::string bytes = read_file(tftest::repo_path("fixtures/moodle/course_export.xml"));
    MoodleParseResult a = parse_moodle_xml(bytes);
    MoodleParseResult b = parse_moodle_xml(bytes);
    CHECK(a.problems == b.problems);
    CHECK(a.warnings == b.warnings);
}

TEST_CASE("xml entities and attributes decode") {
    XmlElement root = xml_parse("<a x=\"1 &amp; 2\">&lt;tag&gt; &#65;&#x42;</a>");
    CHECK(root.attribute("x") == "1 & 2");
    CHECK(root.text == "<tag> AB");
}

TEST_SUITE_END();
