#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deflect/patch.hpp"

namespace deflect {

/// Screen pattern I = B + A sin(2 pi f col / W + psi), observed with additive
/// Gaussian pixel noise.
struct PatternSpec {
    double offset = 0.5;     // B
    double amplitude = 0.5;  // A
    double frequency = 8.0;  // cycles across pattern_width
    double phase = 0.0;      // psi, radians
    int pattern_width = 2048;
    double noise_sigma = 0.005;
};

void validate_pattern(const PatternSpec& spec);

enum class DefectKind { crater, dirt };

std::string_view to_string(DefectKind kind);
DefectKind defect_kind_from(std::string_view name);

/// Local fringe-phase distortion. Coordinates are 0-based pixel indices.
struct DefectSpec {
    DefectKind kind = DefectKind::crater;
    double center_row = 0.0;
    double center_col = 0.0;
    double radius = 10.0;
    double strength = 3.0;  // peak |phase shift|, radians
};

/// Phase shift at (row, col); exactly zero at distance >= radius.
///
/// crater: slope of the bowl -(1 - rho^2)^3, i.e. a ring that is zero at the
///         centre and peaks at rho = 1/sqrt(5).
/// dirt:   Gaussian bump with sigma = radius / 2, tapered by (1 - rho^2)^2.
/// Both are normalized to peak at `strength`.
double defect_phase(const DefectSpec& defect, double row, double col);

/// A rendered patch plus everything needed to re-render it.
struct SyntheticPatch {
    Patch patch;
    PatternSpec pattern;
    int origin_col = 0;
    std::uint64_t seed = 0;  // noise stream
    std::vector<DefectSpec> defects;
};

/// pixel(r, c) = B + A sin(2 pi f (origin_col + c) / W + psi) + noise.
/// Requires origin_col + m <= W.
SyntheticPatch render_clean_patch(const PatternSpec& spec, int m, int origin_col, std::uint64_t seed,
                                  std::string patch_id = {});

/// Re-renders `base` with the defect's phase field added (noise stream unchanged)
/// and relabels it with the defect kind.
SyntheticPatch inject_defect(const SyntheticPatch& base, const DefectSpec& defect);

struct Range {
    double min = 0.0;
    double max = 0.0;
};

struct GenerationConfig {
    std::map<std::string, int> counts{{"defect_free", 750}, {"dirt", 230}, {"crater", 20}};
    int m = 91;
    PatternSpec pattern;
    std::optional<double> noise_sigma;  // default 0.01 * amplitude
    Range crater_radius{7.0, 12.0};
    Range crater_strength{2.0, 4.0};
    Range dirt_radius{7.0, 12.0};
    Range dirt_strength{2.0, 4.0};
    double center_jitter = 0.1;  // defect centre offset from patch centre, fraction of m
    std::string format = "pgm";  // pgm | csv
    unsigned threads = 1;
};

/// Applies key=value overrides (same names as the config-file keys).
/// Throws UsageError for unknown keys or invalid values.
void apply_generation_setting(GenerationConfig& config, const std::string& key, const std::string& value);
void validate_generation_config(const GenerationConfig& config);

/// Patch k draws everything from mix_seed(seed, k). Classes are emitted in
/// sorted label order.
std::vector<SyntheticPatch> generate_patches(const GenerationConfig& config, std::uint64_t seed);

/// Writes manifest.csv and patches/<patch_id>.{pgm,csv} under `dir`.
void generate_dataset(const GenerationConfig& config, std::uint64_t seed, const std::filesystem::path& dir);

/// Reads manifest.csv and the patch files it lists.
std::vector<Patch> load_dataset(const std::filesystem::path& dir);

}  // namespace deflect
