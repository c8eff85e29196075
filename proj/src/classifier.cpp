#include "deflect/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "deflect/error.hpp"
#include "deflect/parallel.hpp"

namespace deflect {

std::size_t LabeledFeatureSet::class_index(const std::string& label) const {
    auto it = std::lower_bound(classes_.begin(), classes_.end(), label);
    if (it == classes_.end() || *it != label) throw DataError("unknown class '" + label + "'");
    return static_cast<std::size_t>(it - classes_.begin());
}

LabeledFeatureSet build_reference(std::vector<LabeledVector> vectors) {
    if (vectors.empty()) throw DataError("reference set is empty");
    const std::size_t dim = vectors.front().tau.size();
    if (dim == 0) throw DataError("reference vectors have dimension 0");

    std::map<std::string, std::size_t> counts;
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (vectors[i].tau.size() != dim) {
            throw DimensionMismatchError("reference vector " + std::to_string(i) + " has dimension " +
                                         std::to_string(vectors[i].tau.size()) + ", expected " +
                                         std::to_string(dim));
        }
        ++counts[vectors[i].label];
    }
    if (counts.size() < 2) throw DataError("reference set needs at least two classes");

    LabeledFeatureSet set;
    for (const auto& [label, n] : counts) {
        set.classes_.push_back(label);
        set.counts_.push_back(n);
    }
    set.points_.resize(static_cast<Eigen::Index>(vectors.size()), static_cast<Eigen::Index>(dim));
    set.class_of_.reserve(vectors.size());
    set.ids_.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        std::copy(vectors[i].tau.begin(), vectors[i].tau.end(), set.points_.row(static_cast<Eigen::Index>(i)).begin());
        set.class_of_.push_back(set.class_index(vectors[i].label));
        set.ids_.push_back(std::move(vectors[i].patch_id));
    }
    return set;
}

LabeledFeatureSet build_reference(const std::vector<FeatureVector>& features) {
    std::vector<LabeledVector> vectors;
    vectors.reserve(features.size());
    for (const auto& f : features) {
        if (!f.label) throw DataError("reference vector '" + f.patch_id + "' has no label");
        vectors.push_back({f.tau, *f.label, f.patch_id});
    }
    return build_reference(std::move(vectors));
}

namespace {

std::vector<double> min_squared_distance(const LabeledFeatureSet& ref, std::span<const double> query,
                                         const std::string& query_id, const NeighbourOptions& options) {
    if (static_cast<int>(query.size()) != ref.dimension()) {
        throw DimensionMismatchError("query has dimension " + std::to_string(query.size()) +
                                     ", reference set has " + std::to_string(ref.dimension()));
    }
    std::vector<double> best(ref.classes().size(), std::numeric_limits<double>::infinity());
    const bool skip_self = options.leave_one_out && !query_id.empty();
    for (std::size_t i = 0; i < ref.size(); ++i) {
        if (skip_self && ref.patch_id(i) == query_id) continue;
        const auto p = ref.point(i);
        double d2 = 0.0;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const double diff = p[k] - query[k];
            d2 += diff * diff;
        }
        double& slot = best[ref.class_of(i)];
        slot = std::min(slot, d2);
    }
    return best;
}

}  // namespace

std::vector<double> min_class_distance(const LabeledFeatureSet& ref, std::span<const double> query,
                                       const std::string& query_id, const NeighbourOptions& options) {
    std::vector<double> d = min_squared_distance(ref, query, query_id, options);
    for (double& v : d) v = std::sqrt(v);
    return d;
}

double shannon_entropy(std::span<const double> probabilities) {
    double h = 0.0;
    for (double p : probabilities) {
        if (p > 0.0) h -= p * std::log(p);
    }
    return std::max(h, 0.0);
}

PosteriorVector posterior_from_log_distances(std::span<const double> log_distances, int dimension) {
    const std::size_t k = log_distances.size();
    if (k == 0) throw DataError("posterior needs at least one class");
    PosteriorVector out;
    out.log_distances.assign(log_distances.begin(), log_distances.end());
    out.probabilities.assign(k, 0.0);
    out.log_probabilities.assign(k, -std::numeric_limits<double>::infinity());

    const double neg_inf = -std::numeric_limits<double>::infinity();
    const auto zeros = static_cast<std::size_t>(std::count(log_distances.begin(), log_distances.end(), neg_inf));
    if (zeros > 0) {
        for (std::size_t j = 0; j < k; ++j) {
            if (log_distances[j] == neg_inf) {
                out.probabilities[j] = 1.0 / static_cast<double>(zeros);
                out.log_probabilities[j] = -std::log(static_cast<double>(zeros));
            }
        }
    } else {
        // l_j = -m log D_j; p = softmax(l).
        std::vector<double> logits(k);
        double top = neg_inf;
        for (std::size_t j = 0; j < k; ++j) {
            logits[j] = -dimension * log_distances[j];
            top = std::max(top, logits[j]);
        }
        if (top == neg_inf) throw NumericError("every class is at infinite distance");
        // log1p over the non-leading terms keeps log p of the winner accurate
        // when the others are negligible.
        const auto lead = static_cast<std::size_t>(std::max_element(logits.begin(), logits.end()) - logits.begin());
        double rest = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j != lead) rest += std::exp(logits[j] - top);
        }
        // Subtracting the tail from the shifted logit (not from top + tail)
        // keeps it even when it is below the resolution of top.
        const double tail = std::log1p(rest);
        for (std::size_t j = 0; j < k; ++j) {
            out.log_probabilities[j] = (logits[j] - top) - tail;
            out.probabilities[j] = std::exp(out.log_probabilities[j]);
        }
    }

    out.predicted = static_cast<std::size_t>(
        std::max_element(out.probabilities.begin(), out.probabilities.end()) - out.probabilities.begin());
    out.entropy = shannon_entropy(out.probabilities);
    return out;
}

PosteriorVector posterior(const LabeledFeatureSet& ref, std::span<const double> query, const std::string& query_id,
                          const NeighbourOptions& options) {
    std::vector<double> d2 = min_squared_distance(ref, query, query_id, options);
    for (double& v : d2) v = 0.5 * std::log(v);
    return posterior_from_log_distances(d2, ref.dimension());
}

std::vector<PosteriorVector> classify_batch(const LabeledFeatureSet& ref, const std::vector<FeatureVector>& queries,
                                            const NeighbourOptions& options, unsigned threads) {
    std::vector<PosteriorVector> out(queries.size());
    parallel_for(queries.size(), threads, [&](std::size_t i) {
        try {
            out[i] = posterior(ref, queries[i].tau, queries[i].patch_id, options);
        } catch (const DimensionMismatchError& e) {
            throw DimensionMismatchError("query " + std::to_string(i) + " ('" + queries[i].patch_id +
                                         "'): " + e.what());
        }
    });
    return out;
}

}  // namespace deflect
