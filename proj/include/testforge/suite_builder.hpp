#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "testforge/model.hpp"
#include "testforge/runner.hpp"

namespace testforge {

struct InterpreterConfig {
    std::vector<std::string> command = {"python3"};
    std::chrono::milliseconds timeout{30000};
};

// Runs a generated Python script in a scratch directory and parses its stdout
// as a JSON array of {"input": ...} objects (exactly that one key). Payload
// order is preserved. Throws InterpreterMissing / GeneratorFailure /
// SchemaError.
std::vector<std::string> run_generator_script(const std::string& script_text,
                                              const InterpreterConfig& interpreter,
                                              const std::string& work_root);

// Extracts individually marked test blocks from a generated C test script.
// One payload per BEGIN/END pair, inner code byte-exact, order preserved.
// Throws ParseError (with line numbers) on unbalanced or out-of-order markers.
std::vector<std::string> parse_test_script(const std::string& script_text,
                                           const MarkerConvention& markers);

// A payload that loops its calls holds one whole block of random tests.
TestOrigin classify_payload_origin(const std::string& payload);

// Separator token in the problem's observed shape, nonce drawn from the
// problem seed so regeneration after a collision stays deterministic.
std::string make_separator(uint32_t nonce);

struct MaterializeConfig {
    RunLimits limits;
    uint32_t problem_seed = 0;
    bool per_test_seeds = false;  // off-by-default per-test seed variant
};

// Runs the reference solution to fill in every expected output. Tests that
// crash the reference (nonzero exit, signal, or timeout) are marked rejected
// with a reason and excluded from the final suite. Regenerates the separator
// nonce when a test output collides with it. The returned suite grades the
// reference solution at 1 by construction.
TestSuite materialize_expected_outputs(TestSuite suite, const Problem& problem,
                                       const MaterializeConfig& config);

// Stage 1: instructor suite with expected outputs regenerated from the
// reference solution; the exported expected outputs are kept for audit only.
TestSuite regenerate_instructor_outputs(const Problem& problem, const MaterializeConfig& config);

// Stage 2 back half: turn generated source into a finalized LLM suite.
TestSuite build_llm_suite(const Problem& problem, const std::string& generation_source,
                          const MarkerConvention& markers, const InterpreterConfig& interpreter,
                          const MaterializeConfig& config);

}  // namespace testforge
