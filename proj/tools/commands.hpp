#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "deflect/features.hpp"
#include "deflect/metrics.hpp"
#include "deflect/synth.hpp"

namespace deflect::cli {

struct GenerateCommand {
    GenerationConfig config;
    std::uint64_t seed = 0;
    std::filesystem::path out;
};

struct ExtractCommand {
    std::filesystem::path dataset;
    std::filesystem::path out;
    FeatureKind feature = FeatureKind::edf;
    EdfOptions edf;
    unsigned threads = 1;
};

struct ExtractSummary {
    std::size_t patches = 0;
    std::size_t degenerate_patches = 0;
    std::size_t floored_rows = 0;
};

struct ClassifyCommand {
    std::filesystem::path reference;
    std::filesystem::path query;
    std::filesystem::path out;
    bool leave_one_out = false;
    unsigned threads = 1;
};

/// Exactly one of `features` / `dataset` must be set; a dataset is extracted first.
struct EvaluateCommand {
    std::optional<std::filesystem::path> features;
    std::optional<std::filesystem::path> dataset;
    std::filesystem::path out;  // directory receiving report.json and report.csv
    FeatureKind feature = FeatureKind::edf;
    EdfOptions edf;
    EvaluationConfig evaluation;
};

void cmd_generate(const GenerateCommand& cmd);
ExtractSummary cmd_extract(const ExtractCommand& cmd);
std::size_t cmd_classify(const ClassifyCommand& cmd);
EvaluationReport cmd_evaluate(const EvaluateCommand& cmd);

/// Parses argv, dispatches, and maps failures to exit codes
/// (0 ok, 2 usage, 3 data, 4 numeric) with one JSON error line on stderr.
int run(int argc, char** argv);

}  // namespace deflect::cli
