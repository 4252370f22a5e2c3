#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace testforge {

// Base for all errors raised by the toolchain. `kind()` is a stable
// machine-readable tag used by the CLI error summaries.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& message)
        : std::runtime_error(message), kind_(std::move(kind)) {}

    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

#define TESTFORGE_DEFINE_ERROR(NAME, TAG)                                  \
    class NAME : public Error {                                            \
    public:                                                                \
        explicit NAME(const std::string& message) : Error(TAG, message) {} \
    }

// ingest
TESTFORGE_DEFINE_ERROR(MalformedXml, "MalformedXml");
TESTFORGE_DEFINE_ERROR(SchemaMismatch, "SchemaMismatch");
TESTFORGE_DEFINE_ERROR(IoError, "IoError");
TESTFORGE_DEFINE_ERROR(VersionMismatch, "VersionMismatch");

// llm gateway
TESTFORGE_DEFINE_ERROR(AuthMissing, "AuthMissing");
TESTFORGE_DEFINE_ERROR(RateLimited, "RateLimited");
TESTFORGE_DEFINE_ERROR(FixtureMiss, "FixtureMiss");
TESTFORGE_DEFINE_ERROR(NetworkForbidden, "NetworkForbidden");
TESTFORGE_DEFINE_ERROR(TransportError, "TransportError");

// prompt pipeline (GenerationFailed lives in prompts.hpp; it carries a transcript)
TESTFORGE_DEFINE_ERROR(NotJson, "NotJson");
TESTFORGE_DEFINE_ERROR(MissingSection, "MissingSection");

// suite builder
TESTFORGE_DEFINE_ERROR(InterpreterMissing, "InterpreterMissing");
TESTFORGE_DEFINE_ERROR(GeneratorFailure, "GeneratorFailure");
TESTFORGE_DEFINE_ERROR(SchemaError, "SchemaError");
TESTFORGE_DEFINE_ERROR(ParseError, "ParseError");
TESTFORGE_DEFINE_ERROR(ReferenceCompileError, "ReferenceCompileError");

// runner
TESTFORGE_DEFINE_ERROR(ToolchainMissing, "ToolchainMissing");
TESTFORGE_DEFINE_ERROR(TemplateSlotMissing, "TemplateSlotMissing");
TESTFORGE_DEFINE_ERROR(HarnessError, "HarnessError");

// grader
TESTFORGE_DEFINE_ERROR(LengthMismatch, "LengthMismatch");

// evaluator
TESTFORGE_DEFINE_ERROR(InvalidGrade, "InvalidGrade");
TESTFORGE_DEFINE_ERROR(NotReviewable, "NotReviewable");
TESTFORGE_DEFINE_ERROR(UnresolvedMismatches, "UnresolvedMismatches");
TESTFORGE_DEFINE_ERROR(UndefinedMetric, "UndefinedMetric");

// cli
TESTFORGE_DEFINE_ERROR(UsageError, "UsageError");
TESTFORGE_DEFINE_ERROR(ConfigError, "ConfigError");

#undef TESTFORGE_DEFINE_ERROR

}  // namespace testforge
