#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "deflect/features.hpp"

namespace deflect {

struct LabeledVector {
    std::vector<double> tau;
    std::string label;
    std::string patch_id;
};

/// Validated reference sample for the NN-ball classifier. Classes are kept in
/// sorted order; that order fixes posterior columns and tie-breaking.
class LabeledFeatureSet {
public:
    int dimension() const noexcept { return static_cast<int>(points_.cols()); }
    std::size_t size() const noexcept { return static_cast<std::size_t>(points_.rows()); }
    const std::vector<std::string>& classes() const noexcept { return classes_; }
    const std::vector<std::size_t>& class_counts() const noexcept { return counts_; }
    std::size_t class_index(const std::string& label) const;

    std::span<const double> point(std::size_t i) const {
        return {points_.data() + i * points_.cols(), static_cast<std::size_t>(points_.cols())};
    }
    std::size_t class_of(std::size_t i) const { return class_of_[i]; }
    const std::string& patch_id(std::size_t i) const { return ids_[i]; }

private:
    friend LabeledFeatureSet build_reference(std::vector<LabeledVector> vectors);

    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> points_;
    std::vector<std::size_t> class_of_;
    std::vector<std::string> ids_;
    std::vector<std::string> classes_;
    std::vector<std::size_t> counts_;
};

/// Requires a uniform dimension >= 1 and at least two distinct labels.
LabeledFeatureSet build_reference(std::vector<LabeledVector> vectors);
LabeledFeatureSet build_reference(const std::vector<FeatureVector>& features);

struct PosteriorVector {
    std::vector<double> probabilities;
    // log p_j; stays finite where p_j itself underflows to 0 (-inf for a class
    // that gets no mass when some other class is at distance 0).
    std::vector<double> log_probabilities;
    std::size_t predicted = 0;  // index into LabeledFeatureSet::classes()
    double entropy = 0.0;
    std::vector<double> log_distances;
};

struct NeighbourOptions {
    // Skip reference points whose (non-empty) patch_id equals the query's.
    bool leave_one_out = false;
};

/// Exact per-class nearest-neighbour Euclidean distances. A class left empty
/// by leave-one-out gets +inf.
std::vector<double> min_class_distance(const LabeledFeatureSet& ref, std::span<const double> query,
                                       const std::string& query_id = {}, const NeighbourOptions& options = {});

/// Posterior p_j = D_j^{-m} / sum_i D_i^{-m}, evaluated in log space. If some
/// D_j are zero, they share all of the mass equally.
PosteriorVector posterior_from_log_distances(std::span<const double> log_distances, int dimension);

PosteriorVector posterior(const LabeledFeatureSet& ref, std::span<const double> query,
                          const std::string& query_id = {}, const NeighbourOptions& options = {});

/// Shannon entropy in nats with 0 log 0 = 0.
double shannon_entropy(std::span<const double> probabilities);

/// One posterior per query, in query order.
std::vector<PosteriorVector> classify_batch(const LabeledFeatureSet& ref, const std::vector<FeatureVector>& queries,
                                            const NeighbourOptions& options = {}, unsigned threads = 1);

}  // namespace deflect
