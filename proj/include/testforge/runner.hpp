#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "testforge/model.hpp"

namespace testforge {

struct ProcessLimits {
    std::chrono::milliseconds wall_timeout{5000};
    size_t memory_bytes = 256ull * 1024 * 1024;
    size_t output_cap_bytes = 8ull * 1024 * 1024;
};

struct RunResult {
    enum class Status { Exited, Signaled, TimedOut };
    Status status = Status::Exited;
    int exit_code = 0;      // valid when Exited
    int term_signal = 0;    // valid when Signaled
    std::string stdout_bytes;
    std::string stderr_bytes;
    bool output_truncated = false;  // stdout hit the cap; process was killed
    std::chrono::milliseconds wall_time{0};

    bool clean_exit() const { return status == Status::Exited && exit_code == 0; }
    std::string describe() const;
};

// Runs argv in `workdir` with stdin fed exactly once and stdout/stderr
// captured under the given limits. The child runs in its own process group
// and is killed as a group on timeout or output overflow.
RunResult run_process(const std::vector<std::string>& argv, const std::string& workdir,
                      std::string_view stdin_bytes, const ProcessLimits& limits);

// -- Compilation --------------------------------------------------------------

struct Toolchain {
    std::string command = "cc";
    std::vector<std::string> flags = {"-std=gnu11", "-O1", "-Wall"};
    std::vector<std::string> libs = {"-lm"};
    std::chrono::milliseconds compile_timeout{10000};
};

struct CompileFailure {
    std::string diagnostics;

    bool operator==(const CompileFailure&) const = default;
};

// Writes `c_source` into workdir and compiles it. Returns the binary path or
// the captured diagnostics. Throws ToolchainMissing when the compiler cannot
// be spawned at all.
std::variant<std::string, CompileFailure> compile_c(const std::string& c_source,
                                                    const std::string& workdir,
                                                    const Toolchain& toolchain);

// -- Harness ------------------------------------------------------------------

struct MarkerConvention {
    std::string begin_prefix = "<<TEST ";
    std::string begin_suffix = " BEGIN>>";
    std::string end_prefix = "<<TEST ";
    std::string end_suffix = " END>>";

    std::string begin(int n) const { return begin_prefix + std::to_string(n) + begin_suffix; }
    std::string end(int n) const { return end_prefix + std::to_string(n) + end_suffix; }
};

struct HarnessSpec {
    SuiteKind suite_kind = SuiteKind::Instructor;
    uint32_t seed = 0;
    std::string separator;
    // Off-by-default variant: derive a distinct deterministic seed per test.
    bool per_test_seeds = false;
};

// Builds the single C program that runs every (non-rejected) test of a
// function-implementation suite in order, each inside its own scope, printing
// the separator between scopes. Instructor suites embed the solution inline
// with the base header set; LLM suites include "solution.c" with the extended
// header set and seed the PRNG before every scope.
std::string assemble_function_harness(const std::string& solution_source, const TestSuite& suite,
                                      const std::optional<std::string>& extra_code,
                                      const HarnessSpec& spec);

// The template shown to the model in test-generation prompts: same shape,
// extra code substituted, with the tests block left as instructions.
std::string prompt_harness_template(const std::optional<std::string>& extra_code);

uint32_t per_test_seed(uint32_t suite_seed, int test_index);

// -- Output handling ----------------------------------------------------------

// Splits a combined stream on separator lines: n separators yield n+1
// segments, and the single newline immediately before/after each separator
// token belongs to the separator line, not to any segment.
std::vector<std::string> split_output(std::string_view raw_stdout, std::string_view separator);

// Inverse of split_output for segments free of the separator.
std::string join_outputs(const std::vector<std::string>& outputs, std::string_view separator);

// -- Suite execution ----------------------------------------------------------

struct TestOutput {
    bool produced = false;  // false = distinguished no-output marker
    std::string text;

    static TestOutput none() { return {}; }
    static TestOutput of(std::string t) { return {true, std::move(t)}; }
    bool operator==(const TestOutput&) const = default;
};

struct RunLimits {
    ProcessLimits process;
    Toolchain toolchain;
    std::string work_root = ".testforge-work";
};

// Runs one solution against a finalized suite. Full-program problems get one
// process per test; function problems get one assembled-harness run whose
// output is split on the separator. The result list always has one entry per
// non-rejected test.
std::variant<std::vector<TestOutput>, CompileFailure> run_suite(
    const std::string& solution_source, const TestSuite& suite, const Problem& problem,
    const RunLimits& limits);

// Creates a unique private scratch directory under work_root.
class ScratchDir {
public:
    explicit ScratchDir(const std::string& work_root);
    ~ScratchDir();
    ScratchDir(const ScratchDir&) = delete;
    ScratchDir& operator=(const ScratchDir&) = delete;
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

}  // namespace testforge
