#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace deflect {

namespace labels {
inline constexpr std::string_view defect_free = "defect_free";
inline constexpr std::string_view crater = "crater";
inline constexpr std::string_view dirt = "dirt";
}  // namespace labels

/// Square grayscale crop of a fringe image. Row r of `pixels` is one scan line
/// across the fringes; the pattern varies along columns.
struct Patch {
    Eigen::MatrixXd pixels;
    double frequency = 8.0;
    double phase = 0.0;
    std::optional<std::string> label;
    std::string patch_id;

    int side() const noexcept { return static_cast<int>(pixels.rows()); }
};

/// Throws DataError unless the patch is square, non-empty and finite.
void validate_patch(const Patch& patch);

}  // namespace deflect
