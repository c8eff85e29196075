#include "deflect/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

#include "deflect/error.hpp"
#include "deflect/io.hpp"
#include "deflect/parallel.hpp"
#include "deflect/seed.hpp"

namespace deflect {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Peak of rho (1 - rho^2)^2 on [0, 1], attained at rho = 1/sqrt(5).
const double kRingPeak = (1.0 / std::sqrt(5.0)) * std::pow(1.0 - 0.2, 2);

void render(SyntheticPatch& out, int m) {
    const PatternSpec& spec = out.pattern;
    out.patch.pixels.resize(m, m);
    std::mt19937_64 rng(out.seed);
    std::normal_distribution<double> noise(0.0, spec.noise_sigma > 0.0 ? spec.noise_sigma : 1.0);
    for (int r = 0; r < m; ++r) {
        for (int c = 0; c < m; ++c) {
            double shift = 0.0;
            for (const auto& d : out.defects) shift += defect_phase(d, r, c);
            const double base = kTwoPi * spec.frequency * (out.origin_col + c) / spec.pattern_width + spec.phase;
            double value = spec.offset + spec.amplitude * std::sin(base + shift);
            if (spec.noise_sigma > 0.0) value += noise(rng);
            out.patch.pixels(r, c) = value;
        }
    }
}

Range parse_range(const std::string& key, const std::string& value) {
    const auto parts = io::split_csv_line(value);
    if (parts.size() != 2) throw UsageError(key + " expects 'min,max'");
    Range r{io::parse_number(parts[0], key), io::parse_number(parts[1], key)};
    if (!(r.min > 0.0 && r.max >= r.min)) throw UsageError(key + " needs 0 < min <= max");
    return r;
}

double uniform(std::mt19937_64& rng, Range range) {
    return std::uniform_real_distribution<double>(range.min, range.max)(rng);
}

}  // namespace

void validate_pattern(const PatternSpec& spec) {
    if (!(spec.amplitude > 0.0)) throw UsageError("pattern amplitude must be positive");
    if (!(spec.frequency > 0.0)) throw UsageError("pattern frequency must be positive");
    if (spec.pattern_width <= 0) throw UsageError("pattern width must be positive");
    if (!(spec.noise_sigma >= 0.0)) throw UsageError("noise sigma must be non-negative");
    if (!std::isfinite(spec.offset) || !std::isfinite(spec.phase)) throw UsageError("pattern offset/phase not finite");
}

std::string_view to_string(DefectKind kind) {
    return kind == DefectKind::crater ? labels::crater : labels::dirt;
}

DefectKind defect_kind_from(std::string_view name) {
    if (name == labels::crater) return DefectKind::crater;
    if (name == labels::dirt) return DefectKind::dirt;
    throw UsageError("unknown defect kind '" + std::string(name) + "'");
}

double defect_phase(const DefectSpec& defect, double row, double col) {
    const double dr = row - defect.center_row;
    const double dc = col - defect.center_col;
    const double rho = std::sqrt(dr * dr + dc * dc) / defect.radius;
    if (rho >= 1.0) return 0.0;
    const double taper = (1.0 - rho * rho) * (1.0 - rho * rho);
    if (defect.kind == DefectKind::crater) return defect.strength * rho * taper / kRingPeak;
    // sigma = radius / 2 means exp(-(d / sigma)^2 / 2) = exp(-2 rho^2).
    return defect.strength * std::exp(-2.0 * rho * rho) * taper;
}

SyntheticPatch render_clean_patch(const PatternSpec& spec, int m, int origin_col, std::uint64_t seed,
                                  std::string patch_id) {
    validate_pattern(spec);
    if (m <= 0) throw UsageError("patch side must be positive");
    if (origin_col < 0 || origin_col + m > spec.pattern_width) {
        throw UsageError("patch [" + std::to_string(origin_col) + ", " + std::to_string(origin_col + m) +
                         ") exceeds pattern width " + std::to_string(spec.pattern_width));
    }
    SyntheticPatch out;
    out.pattern = spec;
    out.origin_col = origin_col;
    out.seed = seed;
    out.patch.frequency = spec.frequency;
    out.patch.phase = spec.phase;
    out.patch.label = std::string(labels::defect_free);
    out.patch.patch_id = std::move(patch_id);
    render(out, m);
    return out;
}

SyntheticPatch inject_defect(const SyntheticPatch& base, const DefectSpec& defect) {
    const int m = base.patch.side();
    if (!(defect.radius > 0.0)) throw UsageError("defect radius must be positive");
    if (!(defect.strength >= 0.0)) throw UsageError("defect strength must be non-negative");
    if (defect.center_row < 0 || defect.center_row > m - 1 || defect.center_col < 0 || defect.center_col > m - 1) {
        throw UsageError("defect centre lies outside the patch");
    }
    SyntheticPatch out = base;
    out.defects.push_back(defect);
    out.patch.label = std::string(to_string(defect.kind));
    render(out, m);
    return out;
}

void apply_generation_setting(GenerationConfig& config, const std::string& key, const std::string& value) {
    auto number = [&] { return io::parse_number(value, key); };
    auto integer = [&] {
        const double v = number();
        if (v != std::floor(v)) throw UsageError(key + " must be an integer");
        return static_cast<int>(v);
    };
    if (key == "defect_free" || key == "dirt" || key == "crater") {
        config.counts[key] = integer();
    } else if (key == "m") {
        config.m = integer();
    } else if (key == "frequency" || key == "f") {
        config.pattern.frequency = number();
    } else if (key == "phase" || key == "psi") {
        config.pattern.phase = number();
    } else if (key == "offset") {
        config.pattern.offset = number();
    } else if (key == "amplitude") {
        config.pattern.amplitude = number();
    } else if (key == "pattern_width") {
        config.pattern.pattern_width = integer();
    } else if (key == "noise_sigma") {
        config.noise_sigma = number();
    } else if (key == "crater_radius") {
        config.crater_radius = parse_range(key, value);
    } else if (key == "crater_strength") {
        config.crater_strength = parse_range(key, value);
    } else if (key == "dirt_radius") {
        config.dirt_radius = parse_range(key, value);
    } else if (key == "dirt_strength") {
        config.dirt_strength = parse_range(key, value);
    } else if (key == "center_jitter") {
        config.center_jitter = number();
    } else if (key == "format") {
        config.format = value;
    } else {
        throw UsageError("unknown generation setting '" + key + "'");
    }
}

void validate_generation_config(const GenerationConfig& config) {
    for (const auto& [label, n] : config.counts) {
        if (n < 0) throw UsageError("count for '" + label + "' is negative");
    }
    if (config.m < 4) throw UsageError("patch side m must be at least 4");
    if (config.m > config.pattern.pattern_width) throw UsageError("patch side exceeds pattern width");
    if (!(config.center_jitter >= 0.0 && config.center_jitter <= 0.5)) {
        throw UsageError("center_jitter must lie in [0, 0.5]");
    }
    if (config.format != "pgm" && config.format != "csv") throw UsageError("format must be pgm or csv");
    PatternSpec pattern = config.pattern;
    pattern.noise_sigma = config.noise_sigma.value_or(0.01 * pattern.amplitude);
    validate_pattern(pattern);
}

std::vector<SyntheticPatch> generate_patches(const GenerationConfig& config, std::uint64_t seed) {
    validate_generation_config(config);
    PatternSpec pattern = config.pattern;
    pattern.noise_sigma = config.noise_sigma.value_or(0.01 * pattern.amplitude);

    std::vector<std::string> plan;
    for (const auto& [label, n] : config.counts) plan.insert(plan.end(), static_cast<std::size_t>(n), label);

    const int m = config.m;
    std::vector<SyntheticPatch> out(plan.size());
    parallel_for(plan.size(), config.threads, [&](std::size_t k) {
        const std::uint64_t patch_seed = mix_seed(seed, k);
        std::mt19937_64 rng(patch_seed);
        const int origin = std::uniform_int_distribution<int>(0, pattern.pattern_width - m)(rng);
        char id[32];
        std::snprintf(id, sizeof id, "p%06zu", k);
        SyntheticPatch patch = render_clean_patch(pattern, m, origin, mix_seed(patch_seed, 1), id);
        const std::string& label = plan[k];
        if (label != labels::defect_free) {
            const DefectKind kind = defect_kind_from(label);
            const double centre = 0.5 * (m - 1);
            const Range jitter{-config.center_jitter * m, config.center_jitter * m};
            DefectSpec defect;
            defect.kind = kind;
            defect.center_row = centre + std::uniform_real_distribution<double>(jitter.min, jitter.max)(rng);
            defect.center_col = centre + std::uniform_real_distribution<double>(jitter.min, jitter.max)(rng);
            defect.radius = uniform(rng, kind == DefectKind::crater ? config.crater_radius : config.dirt_radius);
            defect.strength = uniform(rng, kind == DefectKind::crater ? config.crater_strength : config.dirt_strength);
            patch = inject_defect(patch, defect);
        }
        out[k] = std::move(patch);
    });
    return out;
}

void generate_dataset(const GenerationConfig& config, std::uint64_t seed, const std::filesystem::path& dir) {
    const std::vector<SyntheticPatch> patches = generate_patches(config, seed);
    std::error_code ec;
    std::filesystem::create_directories(dir / "patches", ec);
    if (ec) throw DataError("cannot create '" + (dir / "patches").string() + "': " + ec.message());

    std::ostringstream manifest;
    manifest << "patch_id,file,label,f,psi,m,origin_col,defect_kind,center_row,center_col,radius,strength,seed\n";
    for (const auto& p : patches) {
        const std::string file = "patches/" + p.patch.patch_id + "." + config.format;
        const double sigma = p.pattern.noise_sigma;
        const double lo = p.pattern.offset - p.pattern.amplitude - 4.0 * sigma;
        const double hi = p.pattern.offset + p.pattern.amplitude + 4.0 * sigma;
        io::write_text(dir / file, config.format == "pgm" ? io::patch_to_pgm(p.patch, lo, hi)
                                                          : io::patch_to_csv_matrix(p.patch));
        manifest << p.patch.patch_id << ',' << file << ',' << p.patch.label.value_or("") << ','
                 << io::format_number(p.pattern.frequency) << ',' << io::format_number(p.pattern.phase) << ','
                 << p.patch.side() << ',' << p.origin_col << ',';
        if (p.defects.empty()) {
            manifest << "none,,,,";
        } else {
            const DefectSpec& d = p.defects.front();
            manifest << to_string(d.kind) << ',' << io::format_number(d.center_row) << ','
                     << io::format_number(d.center_col) << ',' << io::format_number(d.radius) << ','
                     << io::format_number(d.strength);
        }
        manifest << ',' << p.seed << '\n';
    }
    io::write_text(dir / "manifest.csv", manifest.str());
}

std::vector<Patch> load_dataset(const std::filesystem::path& dir) {
    const std::string text = io::read_text(dir / "manifest.csv");
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError("manifest is empty");
    const auto header = io::split_csv_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw DataError("manifest lacks column '" + name + "'");
    };
    const std::size_t id_col = column("patch_id"), file_col = column("file"), label_col = column("label"),
                      f_col = column("f"), psi_col = column("psi");

    std::vector<Patch> patches;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = io::split_csv_line(line);
        if (cells.size() != header.size()) throw DataError("manifest row has wrong field count: " + line);
        Patch p;
        p.patch_id = cells[id_col];
        if (!cells[label_col].empty()) p.label = cells[label_col];
        p.frequency = io::parse_number(cells[f_col], "manifest f");
        p.phase = io::parse_number(cells[psi_col], "manifest psi");
        const std::filesystem::path file = dir / cells[file_col];
        const std::string content = io::read_text(file);
        p.pixels = file.extension() == ".pgm" ? io::pgm_to_pixels(content) : io::csv_matrix_to_pixels(content);
        validate_patch(p);
        patches.push_back(std::move(p));
    }
    return patches;
}

}  // namespace deflect
