#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "deflect/classifier.hpp"
#include "deflect/features.hpp"

namespace deflect {

/// Two-class view of a posterior: defect (union of the defect classes) versus the rest.
struct BinaryPosterior {
    double p_defect = 0.0;
    double p_defect_free = 0.0;
    bool predicted_defect = false;  // argmax; an exact tie goes to defect
    double entropy = 0.0;
};

/// Sums the probabilities of `defect_classes`. The set must be a non-empty
/// proper subset of `classes`.
BinaryPosterior merge_defect_classes(const PosteriorVector& posterior, std::span<const std::string> classes,
                                     const std::set<std::string>& defect_classes);

/// Class `positive` against all others.
BinaryPosterior one_against_all(const PosteriorVector& posterior, std::span<const std::string> classes,
                                const std::string& positive);

/// Rates are empty when their denominator class is absent.
struct BinaryRates {
    std::optional<double> mer;
    std::optional<double> fpr;
    std::optional<double> fnr;
};

/// probMER = mean of PM_n; probFNR over true defects (1 - p); probFPR over
/// true defect-free (p), where p is the posterior probability of defect.
BinaryRates probability_metrics(std::span<const char> is_defect, std::span<const double> p_defect);

/// Counting rates: FPR = defect-free predicted defect, FNR = defect predicted defect-free.
BinaryRates hard_metrics(std::span<const char> is_defect, std::span<const char> predicted_defect);

double average_entropy(std::span<const PosteriorVector> posteriors);
double average_entropy(std::span<const BinaryPosterior> posteriors);

struct Split {
    std::vector<std::size_t> train;       // ascending
    std::vector<std::size_t> validation;  // ascending
};

/// Per class, floor(n_j * train_fraction + 1/2) members go to training (kept
/// within [1, n_j - 1]); the rest go to validation. Deterministic in seed.
Split stratified_split(std::span<const std::string> labels, double train_fraction, std::uint64_t seed);

/// Per-run values with mean and standard error (sample sd / sqrt(runs)).
/// Absent per-run values are skipped; se is empty with fewer than two values.
struct MetricSeries {
    std::vector<std::optional<double>> runs;
    std::optional<double> mean;
    std::optional<double> se;
};

MetricSeries summarize(std::vector<std::optional<double>> runs);

struct EvaluationConfig {
    double train_fraction = 0.7;
    int runs = 10;
    std::uint64_t seed = 0;
    std::set<std::string> defect_classes{"crater", "dirt"};
    unsigned threads = 1;
};

struct EvaluationReport {
    std::vector<std::string> classes;
    std::map<std::string, std::size_t> class_counts;
    std::vector<std::string> defect_classes;  // those present in the data; empty = no binary view
    std::size_t n_total = 0;
    std::size_t n_defect = 0;
    std::size_t n_defect_free = 0;
    std::size_t n_validation = 0;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> run_seeds;

    // Keys: mer, prob_mer, avg_entropy for the multiclass view; additionally
    // fpr, fnr, prob_fpr, prob_fnr for the binary view.
    std::map<std::string, MetricSeries> multiclass;
    std::map<std::string, MetricSeries> binary;

    bool has_binary_view() const noexcept { return !defect_classes.empty(); }
};

/// Repeats split -> fit reference -> classify validation -> score, once per run.
EvaluationReport repeated_evaluation(const std::vector<FeatureVector>& dataset, const EvaluationConfig& config);

/// JSON document: {"binary": {metric: {"runs": [...], "mean": x, "se": y}}, "multiclass": {...}, ...}.
std::string report_to_json(const EvaluationReport& report);

/// Flat CSV with columns view,metric,statistic,value; statistic is run_<k>, mean or se.
std::string report_to_csv(const EvaluationReport& report);

}  // namespace deflect
