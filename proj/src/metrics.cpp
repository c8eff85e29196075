#include "deflect/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "deflect/error.hpp"
#include "deflect/seed.hpp"

namespace deflect {

BinaryPosterior merge_defect_classes(const PosteriorVector& posterior, std::span<const std::string> classes,
                                     const std::set<std::string>& defect_classes) {
    if (posterior.probabilities.size() != classes.size()) {
        throw DimensionMismatchError("posterior has " + std::to_string(posterior.probabilities.size()) +
                                     " probabilities for " + std::to_string(classes.size()) + " classes");
    }
    std::size_t hits = 0;
    double p_defect = 0.0;
    double p_rest = 0.0;
    for (std::size_t j = 0; j < classes.size(); ++j) {
        if (defect_classes.count(classes[j])) {
            p_defect += posterior.probabilities[j];
            ++hits;
        } else {
            p_rest += posterior.probabilities[j];
        }
    }
    if (hits == 0 || hits != defect_classes.size()) {
        throw UsageError("defect classes must be a non-empty subset of the posterior classes");
    }
    if (hits == classes.size()) throw UsageError("defect classes cover every class; nothing is defect-free");

    BinaryPosterior out;
    // Renormalize away the rounding in the two partial sums.
    const double total = p_defect + p_rest;
    out.p_defect = p_defect / total;
    out.p_defect_free = p_rest / total;
    out.predicted_defect = out.p_defect >= out.p_defect_free;
    const double pair[2] = {out.p_defect, out.p_defect_free};
    out.entropy = shannon_entropy(pair);
    return out;
}

BinaryPosterior one_against_all(const PosteriorVector& posterior, std::span<const std::string> classes,
                                const std::string& positive) {
    return merge_defect_classes(posterior, classes, {positive});
}

BinaryRates probability_metrics(std::span<const char> is_defect, std::span<const double> p_defect) {
    if (is_defect.size() != p_defect.size()) throw DimensionMismatchError("labels and posteriors differ in length");
    double pm = 0.0, pfn = 0.0, pfp = 0.0;
    std::size_t n1 = 0, n0 = 0;
    for (std::size_t n = 0; n < is_defect.size(); ++n) {
        if (is_defect[n]) {
            pm += 1.0 - p_defect[n];
            pfn += 1.0 - p_defect[n];
            ++n1;
        } else {
            pm += p_defect[n];
            pfp += p_defect[n];
            ++n0;
        }
    }
    BinaryRates out;
    if (n1 + n0 > 0) out.mer = pm / static_cast<double>(n1 + n0);
    if (n1 > 0) out.fnr = pfn / static_cast<double>(n1);
    if (n0 > 0) out.fpr = pfp / static_cast<double>(n0);
    return out;
}

BinaryRates hard_metrics(std::span<const char> is_defect, std::span<const char> predicted_defect) {
    if (is_defect.size() != predicted_defect.size()) {
        throw DimensionMismatchError("labels and predictions differ in length");
    }
    std::size_t n1 = 0, n0 = 0, false_neg = 0, false_pos = 0;
    for (std::size_t n = 0; n < is_defect.size(); ++n) {
        if (is_defect[n]) {
            ++n1;
            if (!predicted_defect[n]) ++false_neg;
        } else {
            ++n0;
            if (predicted_defect[n]) ++false_pos;
        }
    }
    BinaryRates out;
    if (n1 + n0 > 0) out.mer = static_cast<double>(false_neg + false_pos) / static_cast<double>(n1 + n0);
    if (n1 > 0) out.fnr = static_cast<double>(false_neg) / static_cast<double>(n1);
    if (n0 > 0) out.fpr = static_cast<double>(false_pos) / static_cast<double>(n0);
    return out;
}

double average_entropy(std::span<const PosteriorVector> posteriors) {
    if (posteriors.empty()) throw DataError("average entropy of an empty batch");
    double sum = 0.0;
    for (const auto& p : posteriors) sum += p.entropy;
    return sum / static_cast<double>(posteriors.size());
}

double average_entropy(std::span<const BinaryPosterior> posteriors) {
    if (posteriors.empty()) throw DataError("average entropy of an empty batch");
    double sum = 0.0;
    for (const auto& p : posteriors) sum += p.entropy;
    return sum / static_cast<double>(posteriors.size());
}

Split stratified_split(std::span<const std::string> labels, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw UsageError("train fraction must lie strictly between 0 and 1");
    }
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);

    Split split;
    std::mt19937_64 rng(seed);
    for (auto& [label, idx] : members) {
        if (idx.size() < 2) throw DataError("class '" + label + "' has fewer than two members; cannot split");
        const auto n = static_cast<double>(idx.size());
        auto n_train = static_cast<std::size_t>(std::floor(n * train_fraction + 0.5 + 1e-9));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        std::shuffle(idx.begin(), idx.end(), rng);
        split.train.insert(split.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_train));
        split.validation.insert(split.validation.end(), idx.begin() + static_cast<std::ptrdiff_t>(n_train), idx.end());
    }
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.validation.begin(), split.validation.end());
    return split;
}

MetricSeries summarize(std::vector<std::optional<double>> runs) {
    MetricSeries out;
    std::vector<double> present;
    for (const auto& v : runs) {
        if (v) present.push_back(*v);
    }
    out.runs = std::move(runs);
    if (present.empty()) return out;
    const double n = static_cast<double>(present.size());
    if (std::all_of(present.begin(), present.end(), [&](double v) { return v == present.front(); })) {
        // Constant series: report it exactly rather than with summation noise.
        out.mean = present.front();
        if (present.size() >= 2) out.se = 0.0;
        return out;
    }
    const double mean = std::accumulate(present.begin(), present.end(), 0.0) / n;
    out.mean = mean;
    if (present.size() >= 2) {
        double ss = 0.0;
        for (double v : present) ss += (v - mean) * (v - mean);
        out.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
    }
    return out;
}

EvaluationReport repeated_evaluation(const std::vector<FeatureVector>& dataset, const EvaluationConfig& config) {
    if (config.runs < 1) throw UsageError("need at least one evaluation run");
    std::vector<std::string> labels;
    labels.reserve(dataset.size());
    for (const auto& f : dataset) {
        if (!f.label) throw DataError("feature vector '" + f.patch_id + "' has no label");
        labels.push_back(*f.label);
    }

    EvaluationReport report;
    report.train_fraction = config.train_fraction;
    report.seed = config.seed;
    report.n_total = dataset.size();
    for (const auto& l : labels) ++report.class_counts[l];
    for (const auto& [label, n] : report.class_counts) report.classes.push_back(label);

    std::set<std::string> defect;
    for (const auto& c : config.defect_classes) {
        if (report.class_counts.count(c)) defect.insert(c);
    }
    if (!defect.empty() && defect.size() < report.classes.size()) {
        report.defect_classes.assign(defect.begin(), defect.end());
        for (const auto& [label, n] : report.class_counts) (defect.count(label) ? report.n_defect : report.n_defect_free) += n;
    }

    std::map<std::string, std::vector<std::optional<double>>> multi, binary;
    for (int run = 0; run < config.runs; ++run) {
        const std::uint64_t run_seed = mix_seed(config.seed, static_cast<std::uint64_t>(run));
        report.run_seeds.push_back(run_seed);
        try {
            const Split split = stratified_split(labels, config.train_fraction, run_seed);
            std::vector<FeatureVector> train, validation;
            for (auto i : split.train) train.push_back(dataset[i]);
            for (auto i : split.validation) validation.push_back(dataset[i]);
            report.n_validation = validation.size();

            const LabeledFeatureSet ref = build_reference(train);
            const std::vector<PosteriorVector> post = classify_batch(ref, validation, {}, config.threads);

            std::size_t wrong = 0;
            double prob_wrong = 0.0;
            for (std::size_t n = 0; n < validation.size(); ++n) {
                const std::size_t truth = ref.class_index(*validation[n].label);
                if (post[n].predicted != truth) ++wrong;
                prob_wrong += 1.0 - post[n].probabilities[truth];
            }
            const auto nv = static_cast<double>(validation.size());
            multi["mer"].push_back(wrong / nv);
            multi["prob_mer"].push_back(prob_wrong / nv);
            multi["avg_entropy"].push_back(average_entropy(post));

            if (report.has_binary_view()) {
                std::vector<BinaryPosterior> merged;
                std::vector<char> truth, predicted;
                std::vector<double> p_defect;
                for (std::size_t n = 0; n < validation.size(); ++n) {
                    merged.push_back(merge_defect_classes(post[n], ref.classes(), defect));
                    truth.push_back(defect.count(*validation[n].label) ? 1 : 0);
                    predicted.push_back(merged.back().predicted_defect ? 1 : 0);
                    p_defect.push_back(merged.back().p_defect);
                }
                const BinaryRates hard = hard_metrics(truth, predicted);
                const BinaryRates prob = probability_metrics(truth, p_defect);
                binary["mer"].push_back(hard.mer);
                binary["fpr"].push_back(hard.fpr);
                binary["fnr"].push_back(hard.fnr);
                binary["prob_mer"].push_back(prob.mer);
                binary["prob_fpr"].push_back(prob.fpr);
                binary["prob_fnr"].push_back(prob.fnr);
                binary["avg_entropy"].push_back(average_entropy(merged));
            }
        } catch (const Error& e) {
            const std::string where = "evaluation run " + std::to_string(run) + ": " + e.what();
            if (e.kind() == ErrorKind::numeric) throw NumericError(where);
            if (e.kind() == ErrorKind::usage) throw UsageError(where);
            throw DataError(where);
        }
    }
    for (auto& [name, values] : multi) report.multiclass[name] = summarize(std::move(values));
    for (auto& [name, values] : binary) report.binary[name] = summarize(std::move(values));
    return report;
}

}  // namespace deflect
