#include "deflect/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <string>

#include "deflect/error.hpp"
#include "deflect/parallel.hpp"

namespace deflect {

namespace {

constexpr double kAffineFloor = 2.0;

FeatureVector scaled(std::vector<double> raw, const Patch& patch) {
    FeatureVector out;
    out.label = patch.label;
    out.patch_id = patch.patch_id;
    out.frequency = patch.frequency;
    out.phase = patch.phase;
    const double peak = raw.empty() ? 0.0 : *std::max_element(raw.begin(), raw.end());
    out.tau.resize(raw.size(), 0.0);
    if (peak > 0.0) {
        for (std::size_t r = 0; r < raw.size(); ++r) out.tau[r] = raw[r] / peak;
    }
    out.raw = std::move(raw);
    return out;
}

}  // namespace

void validate_patch(const Patch& patch) {
    if (patch.pixels.size() == 0) throw DataError("patch '" + patch.patch_id + "' is empty");
    if (patch.pixels.rows() != patch.pixels.cols()) {
        throw DataError("patch '" + patch.patch_id + "' is not square");
    }
    if (!patch.pixels.allFinite()) throw DataError("patch '" + patch.patch_id + "' has non-finite pixels");
}

StandardizedPatch standardize_patch(const Patch& patch) {
    validate_patch(patch);
    StandardizedPatch out{patch, false};
    // Sum in sorted order: the moments then do not depend on pixel layout, so
    // permuting rows (or transposing) gives bit-identical standardized rows.
    std::vector<double> v(patch.pixels.data(), patch.pixels.data() + patch.pixels.size());
    std::sort(v.begin(), v.end());
    const auto n = static_cast<double>(v.size());
    double total = 0.0;
    for (double x : v) total += x;
    const double mean = total / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    const double sd = n > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
    if (sd < 1e-12) {
        out.patch.pixels.setZero();
        out.degenerate = true;
        return out;
    }
    out.patch.pixels = (patch.pixels.array() - mean) / sd;
    return out;
}

int q_for_frequency(double frequency) {
    if (frequency <= 8.0) return 20;
    if (frequency <= 32.0) return 30;
    return 40;
}

FeatureVector extract_edf_features(const Patch& patch, const EdfOptions& options) {
    validate_patch(patch);
    const int q = options.q_override.value_or(q_for_frequency(patch.frequency));
    const SplineModel model = build_spline_model(patch.side(), q);
    return extract_edf_features(patch, model, options.transpose, options.search);
}

FeatureVector extract_edf_features(const Patch& patch, const SplineModel& model, bool transpose,
                                   const LambdaSearch& search) {
    const StandardizedPatch standard = standardize_patch(patch);
    const int m = standard.patch.side();
    if (m < kMinPatchSide) {
        throw DataError("patch '" + patch.patch_id + "' has side " + std::to_string(m) + ", need at least " +
                        std::to_string(kMinPatchSide));
    }
    if (model.sites() != m) {
        throw DimensionMismatchError("spline model built for " + std::to_string(model.sites()) +
                                     " sites, patch side is " + std::to_string(m));
    }

    // Row-major copy so each scan line is contiguous.
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const RowMajor lines = transpose ? RowMajor(standard.patch.pixels.transpose()) : RowMajor(standard.patch.pixels);

    std::vector<double> raw(m, kAffineFloor);
    int floored = 0;
    for (int r = 0; r < m; ++r) {
        std::span<const double> row(lines.data() + static_cast<std::ptrdiff_t>(r) * m, m);
        if (std::all_of(row.begin(), row.end(), [&](double v) { return v == row.front(); })) {
            ++floored;
            continue;
        }
        try {
            raw[r] = select_lambda(model, row, search).edf;
        } catch (const DegenerateGcvError&) {
            ++floored;
        }
    }

    FeatureVector out = scaled(std::move(raw), patch);
    out.degenerate = standard.degenerate;
    out.degenerate_rows = floored;
    return out;
}

FeatureVector colstd_features(const Patch& patch, bool transpose) {
    const StandardizedPatch standard = standardize_patch(patch);
    const Eigen::MatrixXd pixels =
        transpose ? Eigen::MatrixXd(standard.patch.pixels.transpose()) : standard.patch.pixels;
    const Eigen::Index rows = pixels.rows();

    std::vector<double> raw(pixels.cols(), 0.0);
    if (!standard.degenerate && rows > 1) {
        for (Eigen::Index c = 0; c < pixels.cols(); ++c) {
            const double mean = pixels.col(c).mean();
            raw[c] = std::sqrt((pixels.col(c).array() - mean).square().sum() / static_cast<double>(rows - 1));
        }
    }
    FeatureVector out = scaled(std::move(raw), patch);
    out.degenerate = standard.degenerate;
    return out;
}

FeatureKind feature_kind_from(std::string_view name) {
    if (name == "edf") return FeatureKind::edf;
    if (name == "colstd") return FeatureKind::colstd;
    throw UsageError("unknown feature kind '" + std::string(name) + "' (expected edf or colstd)");
}

std::vector<FeatureVector> extract_batch(const std::vector<Patch>& patches, FeatureKind kind,
                                         const EdfOptions& options, unsigned threads) {
    std::map<std::pair<int, int>, SplineModel> models;
    std::vector<const SplineModel*> model_of(patches.size(), nullptr);
    if (kind == FeatureKind::edf) {
        for (std::size_t i = 0; i < patches.size(); ++i) {
            validate_patch(patches[i]);
            const int m = patches[i].side();
            const int q = options.q_override.value_or(q_for_frequency(patches[i].frequency));
            auto it = models.find({m, q});
            if (it == models.end()) it = models.emplace(std::pair{m, q}, build_spline_model(m, q)).first;
            model_of[i] = &it->second;
        }
    }

    std::vector<FeatureVector> out(patches.size());
    parallel_for(patches.size(), threads, [&](std::size_t i) {
        out[i] = kind == FeatureKind::edf
                     ? extract_edf_features(patches[i], *model_of[i], options.transpose, options.search)
                     : colstd_features(patches[i], options.transpose);
    });
    return out;
}

}  // namespace deflect
