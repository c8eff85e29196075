#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deflect/patch.hpp"
#include "deflect/splinefit.hpp"

namespace deflect {

struct StandardizedPatch {
    Patch patch;
    bool degenerate = false;  // pixel std below 1e-12; pixels were zeroed
};

/// Subtracts the overall pixel mean and divides by the overall standard
/// deviation (denominator n - 1, n = number of pixels).
StandardizedPatch standardize_patch(const Patch& patch);

/// Basis dimension that resolves a fringe of frequency f: 20 up to f = 8,
/// 30 up to f = 32, 40 above.
int q_for_frequency(double frequency);

/// Smallest patch side the EDF extractor accepts.
inline constexpr int kMinPatchSide = 31;

struct FeatureVector {
    std::vector<double> tau;  // scaled so that max(tau) == 1
    std::vector<double> raw;  // unscaled per-row values (EDFs, or column stds)
    std::optional<std::string> label;
    std::string patch_id;
    double frequency = 0.0;
    double phase = 0.0;
    int degenerate_rows = 0;  // rows whose GCV search degenerated (EDF floored at 2)
    bool degenerate = false;  // constant input patch

    int dimension() const noexcept { return static_cast<int>(tau.size()); }
};

struct EdfOptions {
    std::optional<int> q_override;
    bool transpose = false;  // smooth columns instead of rows
    LambdaSearch search;
};

/// Row-wise GCV-smoothed EDFs of the standardized patch, scaled by their maximum.
FeatureVector extract_edf_features(const Patch& patch, const EdfOptions& options = {});

/// Same, reusing a prebuilt model (its sites() must equal the patch side).
FeatureVector extract_edf_features(const Patch& patch, const SplineModel& model, bool transpose = false,
                                   const LambdaSearch& search = {});

/// Column standard deviations of the standardized patch, scaled by their maximum.
FeatureVector colstd_features(const Patch& patch, bool transpose = false);

enum class FeatureKind { edf, colstd };

FeatureKind feature_kind_from(std::string_view name);

/// Extracts every patch, sharing one spline model per (side, q). Output order
/// matches input order regardless of thread count.
std::vector<FeatureVector> extract_batch(const std::vector<Patch>& patches, FeatureKind kind,
                                         const EdfOptions& options = {}, unsigned threads = 1);

}  // namespace deflect
