#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "testforge/bundle.hpp"
#include "testforge/config.hpp"
#include "testforge/evaluator.hpp"
#include "testforge/gateway.hpp"

namespace testforge {

enum class ProviderMode { Replay, Record, Live };

struct IngestOptions {
    std::string xml_path;
    // problem id -> submissions CSV path
    std::map<std::string, std::string> submissions_csv;
    std::string out_dir;
};

struct IngestSummary {
    std::vector<std::string> bundle_dirs;
    std::vector<IngestWarning> warnings;
    std::vector<CsvRowError> row_errors;
};

// Stage 0: XML/CSV -> one bundle directory per problem.
IngestSummary stage_ingest(const IngestOptions& options, const Config& config);

// Each stage returns false when its inputs are unchanged and the output is
// already present (restartable no-op). `force` reruns regardless.
bool stage_regen_instructor(const std::string& bundle_dir, const Config& config,
                            bool force = false);
bool stage_gen_suite(const std::string& bundle_dir, const Config& config, ProviderMode mode,
                     TokenLedger& ledger, bool force = false);
bool stage_grade(const std::string& bundle_dir, const Config& config, SuiteKind suite,
                 bool force = false);
bool stage_evaluate(const std::string& bundle_dir, const Config& config, bool force = false);

// All stages for one bundle: regenerate instructor outputs, generate the LLM
// suite, grade both suites, evaluate.
void run_pipeline(const std::string& bundle_dir, const Config& config, ProviderMode mode,
                  TokenLedger& ledger, bool force = false);

std::shared_ptr<Provider> make_provider(ProviderMode mode, const Config& config);

// Fixed per-problem seed: bundle value wins, then config override, then a
// freshly drawn one (stored by the caller).
uint32_t resolve_problem_seed(const Bundle& bundle, const Config& config);

Evaluation load_evaluation(const std::string& bundle_dir);  // throws IoError when absent
void save_evaluation(const std::string& bundle_dir, const Evaluation& evaluation);

}  // namespace testforge
