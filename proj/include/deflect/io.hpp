#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "deflect/classifier.hpp"
#include "deflect/features.hpp"
#include "deflect/patch.hpp"

namespace deflect::io {

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);

/// Parses a full-string double; throws DataError naming `what` on failure.
double parse_number(std::string_view text, std::string_view what);

/// Minimal CSV: comma separated, no quoting. Fields must not contain commas.
std::vector<std::string> split_csv_line(std::string_view line);

std::string read_text(const std::filesystem::path& path);

/// Writes via a temporary sibling and rename so readers never see partial files.
void write_text(const std::filesystem::path& path, std::string_view content);

/// Flat key=value file; '#' starts a comment, blank lines ignored.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

/// Header: patch_id,label,f,psi,m,tau_1..tau_m. Unlabeled rows have an empty label.
std::string features_to_csv(const std::vector<FeatureVector>& features);
std::vector<FeatureVector> features_from_csv(std::string_view text);

/// Header: patch_id,true_label,predicted,p_<class>...,entropy.
std::string posteriors_to_csv(const LabeledFeatureSet& ref, const std::vector<FeatureVector>& queries,
                              const std::vector<PosteriorVector>& posteriors);

/// Plain P2 graymap, maxval 65535, mapping [lo, hi] linearly onto [0, 65535]
/// (values outside are clamped).
std::string patch_to_pgm(const Patch& patch, double lo, double hi);
/// Pixel values come back as raw grey levels.
Eigen::MatrixXd pgm_to_pixels(std::string_view text);

/// One comma-separated matrix row per line.
std::string patch_to_csv_matrix(const Patch& patch);
Eigen::MatrixXd csv_matrix_to_pixels(std::string_view text);

}  // namespace deflect::io
