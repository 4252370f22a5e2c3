#include "testforge/runner.hpp"

#include <unistd.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <sstream>

#include "testforge/errors.hpp"
#include "testforge/text.hpp"

namespace testforge {

namespace {

constexpr const char* kSourceName = "prog.c";
constexpr const char* kBinaryName = "prog";

std::string c_string_literal(std::string_view s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

const char* kBaseHeaders =
    "#include <stdio.h>\n"
    "#include <stdlib.h>\n"
    "#include <string.h>\n"
    "#include <math.h>\n";

// LLM suites get a wider set so generated tests that reach for common
// utilities still compile.
const char* kExtendedHeaders =
    "#include <stdio.h>\n"
    "#include <stdlib.h>\n"
    "#include <string.h>\n"
    "#include <math.h>\n"
    "#include <time.h>\n"
    "#include <limits.h>\n"
    "#include <ctype.h>\n"
    "#include <stdbool.h>\n";

}  // namespace

std::variant<std::string, CompileFailure> compile_c(const std::string& c_source,
                                                    const std::string& workdir,
                                                    const Toolchain& toolchain) {
    std::filesystem::path dir(workdir);
    write_file((dir / kSourceName).string(), c_source);

    std::vector<std::string> argv;
    argv.push_back(toolchain.command);
    for (const auto& f : toolchain.flags) argv.push_back(f);
    argv.push_back("-o");
    argv.push_back(kBinaryName);
    argv.push_back(kSourceName);
    for (const auto& l : toolchain.libs) argv.push_back(l);

    ProcessLimits limits;
    limits.wall_timeout = toolchain.compile_timeout;
    limits.memory_bytes = 0;  // compilers may need plenty
    limits.output_cap_bytes = 8ull * 1024 * 1024;

    RunResult result = run_process(argv, workdir, "", limits);
    if (result.clean_exit()) return (dir / kBinaryName).string();
    std::string diagnostics = result.stderr_bytes;
    if (result.status != RunResult::Status::Exited)
        diagnostics += "\n(compiler " + result.describe() + ")";
    return CompileFailure{diagnostics};
}

uint32_t per_test_seed(uint32_t suite_seed, int test_index) {
    // splitmix-style mix so per-test seeds are stable and well spread
    uint64_t z = (uint64_t(suite_seed) << 32) ^ uint64_t(test_index + 1);
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return static_cast<uint32_t>(z ^ (z >> 31));
}

std::string assemble_function_harness(const std::string& solution_source, const TestSuite& suite,
                                      const std::optional<std::string>& extra_code,
                                      const HarnessSpec& spec) {
    std::ostringstream src;
    bool llm = spec.suite_kind == SuiteKind::Llm;
    src << (llm ? kExtendedHeaders : kBaseHeaders);
    src << "\n";
    if (extra_code && !extra_code->empty()) {
        src << *extra_code;
        if (extra_code->back() != '\n') src << "\n";
        src << "\n";
    }
    if (llm) {
        src << "#include \"solution.c\"\n\n";
    } else {
        if (solution_source.empty()) throw TemplateSlotMissing("solution slot is empty");
        src << solution_source;
        if (solution_source.back() != '\n') src << "\n";
        src << "\n";
    }
    src << "int main(void) {\n";
    bool first = true;
    for (const auto& test : suite.tests) {
        if (test.rejected) continue;
        if (!first) {
            src << "    printf(\"%s\\n\", " << c_string_literal(spec.separator) << ");\n";
            src << "    fflush(stdout);\n";
        }
        first = false;
        if (llm) {
            uint32_t seed = spec.per_test_seeds ? per_test_seed(spec.seed, test.index) : spec.seed;
            src << "    srand(" << seed << "u);\n";
        }
        src << "    {\n";
        src << test.payload;
        if (!test.payload.empty() && test.payload.back() != '\n') src << "\n";
        src << "    }\n";
        src << "    fflush(stdout);\n";
    }
    src << "    return 0;\n";
    src << "}\n";
    return src.str();
}

std::string prompt_harness_template(const std::optional<std::string>& extra_code) {
    std::ostringstream src;
    src << kExtendedHeaders << "\n";
    if (extra_code && !extra_code->empty()) {
        src << *extra_code;
        if (extra_code->back() != '\n') src << "\n";
        src << "\n";
    }
    src << "#include \"solution.c\"\n\n";
    src << "int main(void) {\n";
    src << "    /* ADD THE TESTS HERE. */\n";
    src << "    return 0;\n";
    src << "}\n";
    return src.str();
}

std::vector<std::string> split_output(std::string_view raw_stdout, std::string_view separator) {
    std::vector<std::string> segments;
    if (separator.empty()) {
        segments.emplace_back(raw_stdout);
        return segments;
    }
    size_t pos = 0;
    for (;;) {
        size_t found = raw_stdout.find(separator, pos);
        if (found == std::string_view::npos) break;
        size_t seg_end = found;
        if (seg_end > pos && raw_stdout[seg_end - 1] == '\n') --seg_end;
        segments.emplace_back(raw_stdout.substr(pos, seg_end - pos));
        pos = found + separator.size();
        if (pos < raw_stdout.size() && raw_stdout[pos] == '\n') ++pos;
    }
    segments.emplace_back(raw_stdout.substr(pos));
    return segments;
}

std::string join_outputs(const std::vector<std::string>& outputs, std::string_view separator) {
    std::string out;
    for (size_t i = 0; i < outputs.size(); ++i) {
        if (i) {
            out.push_back('\n');
            out.append(separator);
            out.push_back('\n');
        }
        out += outputs[i];
    }
    return out;
}

ScratchDir::ScratchDir(const std::string& work_root) {
    static std::atomic<uint64_t> counter{0};
    uint64_t id = counter.fetch_add(1);
    std::random_device rd;
    std::filesystem::path p = std::filesystem::path(work_root) /
                              ("scratch-" + std::to_string(getpid()) + "-" + std::to_string(id) +
                               "-" + std::to_string(rd() % 100000));
    std::error_code ec;
    std::filesystem::create_directories(p, ec);
    if (ec) throw IoError("cannot create scratch dir " + p.string() + ": " + ec.message());
    // Absolute so binary paths stay valid for children that chdir elsewhere.
    path_ = std::filesystem::absolute(p, ec).string();
    if (ec) path_ = p.string();
}

ScratchDir::~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

namespace {

std::vector<TestOutput> run_function_suite(const std::string& binary, const TestSuite& suite,
                                           size_t active_count, const RunLimits& limits,
                                           const std::string& workdir) {
    RunResult run = run_process({binary}, workdir, "", limits.process);
    std::vector<std::string> segments = split_output(run.stdout_bytes, suite.separator);

    std::vector<TestOutput> outputs;
    outputs.reserve(active_count);
    for (size_t i = 0; i < active_count; ++i) {
        if (i < segments.size()) outputs.push_back(TestOutput::of(segments[i]));
        else outputs.push_back(TestOutput::none());  // after the crash point
    }
    return outputs;
}

}  // namespace

std::variant<std::vector<TestOutput>, CompileFailure> run_suite(
    const std::string& solution_source, const TestSuite& suite, const Problem& problem,
    const RunLimits& limits) {
    size_t active_count = suite.active_tests().size();
    ScratchDir scratch(limits.work_root);

    if (problem.kind == ProblemKind::FullProgram) {
        auto compiled = compile_c(solution_source, scratch.path(), limits.toolchain);
        if (std::holds_alternative<CompileFailure>(compiled))
            return std::get<CompileFailure>(compiled);
        const std::string& binary = std::get<std::string>(compiled);
        std::vector<TestOutput> outputs;
        outputs.reserve(active_count);
        for (const Test* test : suite.active_tests()) {
            RunResult run = run_process({binary}, scratch.path(), test->payload, limits.process);
            if (run.status == RunResult::Status::Exited && !run.output_truncated)
                outputs.push_back(TestOutput::of(run.stdout_bytes));
            else
                outputs.push_back(TestOutput::none());
        }
        return outputs;
    }

    // function-implementation: one combined harness run
    HarnessSpec spec;
    spec.suite_kind = suite.kind;
    spec.seed = suite.seed;
    spec.separator = suite.separator;
    if (suite.kind == SuiteKind::Llm)
        write_file((std::filesystem::path(scratch.path()) / "solution.c").string(),
                   solution_source);
    std::string harness =
        assemble_function_harness(solution_source, suite, problem.extra_code, spec);
    auto compiled = compile_c(harness, scratch.path(), limits.toolchain);
    if (std::holds_alternative<CompileFailure>(compiled))
        return std::get<CompileFailure>(compiled);
    return run_function_suite(std::get<std::string>(compiled), suite, active_count, limits,
                              scratch.path());
}

}  // namespace testforge
