#include "commands.hpp"

#include <charconv>
#include <iostream>
#include <map>
#include <set>

#include "CLI11.hpp"
#include "json.hpp"

#include "deflect/classifier.hpp"
#include "deflect/error.hpp"
#include "deflect/io.hpp"

namespace deflect::cli {

namespace fs = std::filesystem;

void cmd_generate(const GenerateCommand& cmd) {
    generate_dataset(cmd.config, cmd.seed, cmd.out);
}

ExtractSummary cmd_extract(const ExtractCommand& cmd) {
    const std::vector<Patch> patches = load_dataset(cmd.dataset);
    const std::vector<FeatureVector> features = extract_batch(patches, cmd.feature, cmd.edf, cmd.threads);
    io::write_text(cmd.out, io::features_to_csv(features));

    ExtractSummary summary;
    summary.patches = features.size();
    for (const auto& f : features) {
        summary.degenerate_patches += f.degenerate ? 1 : 0;
        summary.floored_rows += static_cast<std::size_t>(f.degenerate_rows);
    }
    return summary;
}

std::size_t cmd_classify(const ClassifyCommand& cmd) {
    const LabeledFeatureSet ref = build_reference(io::features_from_csv(io::read_text(cmd.reference)));
    const std::vector<FeatureVector> queries = io::features_from_csv(io::read_text(cmd.query));
    NeighbourOptions options;
    options.leave_one_out = cmd.leave_one_out;
    const std::vector<PosteriorVector> post = classify_batch(ref, queries, options, cmd.threads);
    io::write_text(cmd.out, io::posteriors_to_csv(ref, queries, post));
    return post.size();
}

EvaluationReport cmd_evaluate(const EvaluateCommand& cmd) {
    if (cmd.features.has_value() == cmd.dataset.has_value()) {
        throw UsageError("evaluate needs exactly one of --features or --dataset");
    }
    const std::vector<FeatureVector> features =
        cmd.features ? io::features_from_csv(io::read_text(*cmd.features))
                     : extract_batch(load_dataset(*cmd.dataset), cmd.feature, cmd.edf, cmd.evaluation.threads);

    const EvaluationReport report = repeated_evaluation(features, cmd.evaluation);
    std::error_code ec;
    fs::create_directories(cmd.out, ec);
    if (ec) throw DataError("cannot create '" + cmd.out.string() + "': " + ec.message());
    io::write_text(cmd.out / "report.json", report_to_json(report));
    io::write_text(cmd.out / "report.csv", report_to_csv(report));
    return report;
}

namespace {

const std::map<std::string, std::string> kHelp = {
    {"defect_free", "number of defect-free patches (750)"},
    {"dirt", "number of dirt patches (230)"},
    {"crater", "number of crater patches (20)"},
    {"m", "patch side in pixels (91)"},
    {"frequency", "fringe cycles across the pattern width (8)"},
    {"phase", "pattern phase in radians (0)"},
    {"offset", "pattern offset B (0.5)"},
    {"amplitude", "pattern amplitude A (0.5)"},
    {"pattern_width", "pattern width W in pixels (2048)"},
    {"noise_sigma", "pixel noise sd (0.01 * amplitude)"},
    {"crater_radius", "crater radius range min,max in pixels (7,12)"},
    {"crater_strength", "crater peak phase shift range min,max in radians (2,4)"},
    {"dirt_radius", "dirt radius range min,max in pixels (7,12)"},
    {"dirt_strength", "dirt peak phase shift range min,max in radians (2,4)"},
    {"center_jitter", "defect centre offset from the patch centre, fraction of m (0.1)"},
    {"format", "patch file format: pgm | csv (pgm)"},
    {"seed", "random seed (required for generate and evaluate)"},
    {"out", "output file or directory"},
    {"threads", "worker threads; 0 = all cores (1)"},
    {"dataset", "dataset directory containing manifest.csv"},
    {"feature", "feature kind: edf | colstd (edf)"},
    {"q", "spline basis size; default from the frequency"},
    {"transpose", "smooth columns instead of rows"},
    {"reference", "labeled features CSV used as the reference set"},
    {"query", "features CSV to classify"},
    {"leave_one_out", "skip reference points with the query's patch id"},
    {"features", "features CSV (alternative to --dataset)"},
    {"train_frac", "training fraction per class (0.7)"},
    {"runs", "number of repeated splits (10)"},
    {"merge", "classes merged into 'defect' for the binary view (crater,dirt)"},
};

// Settings gathered from --config and flags; flags win.
class Settings {
public:
    Settings(CLI::App& app, std::vector<std::string> keys, std::set<std::string> switches = {})
        : app_(app), keys_(std::move(keys)), switches_(std::move(switches)) {
        app_.add_option("--config", config_path_, "key=value file; flags override its entries");
        for (const auto& key : keys_) {
            const std::string flag = "--" + dashed(key);
            const auto help = kHelp.find(key);
            const std::string text = help == kHelp.end() ? std::string() : help->second;
            if (switches_.count(key)) {
                app_.add_flag(flag, switch_values_[key], text);
            } else {
                app_.add_option(flag, flag_values_[key], text);
            }
        }
    }

    void resolve() {
        if (!config_path_.empty()) {
            for (auto& [key, value] : io::read_key_values(config_path_)) {
                if (std::find(keys_.begin(), keys_.end(), key) == keys_.end()) {
                    throw UsageError("config key '" + key + "' is not valid for '" + app_.get_name() + "'");
                }
                values_[key] = value;
            }
        }
        for (const auto& key : keys_) {
            if (app_.count("--" + dashed(key)) == 0) continue;
            values_[key] = switches_.count(key) ? (switch_values_[key] ? "true" : "false") : flag_values_[key];
        }
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string text(const std::string& key, const std::string& fallback = {}) const {
        auto it = values_.find(key);
        return it == values_.end() ? fallback : it->second;
    }

    std::string required(const std::string& key) const {
        if (!has(key)) throw UsageError("missing required setting --" + dashed(key));
        return text(key);
    }

    bool flag(const std::string& key) const {
        const std::string v = text(key, "false");
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw UsageError("--" + dashed(key) + " expects a boolean");
    }

    std::uint64_t seed() const {
        const std::string v = required("seed");
        std::uint64_t out = 0;
        auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || end != v.data() + v.size()) throw UsageError("--seed expects an unsigned integer");
        return out;
    }

    long integer(const std::string& key, long fallback) const {
        if (!has(key)) return fallback;
        const double v = io::parse_number(text(key), key);
        if (v != static_cast<double>(static_cast<long>(v))) throw UsageError("--" + dashed(key) + " expects an integer");
        return static_cast<long>(v);
    }

    double number(const std::string& key, double fallback) const {
        return has(key) ? io::parse_number(text(key), key) : fallback;
    }

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    static std::string dashed(std::string key) {
        std::replace(key.begin(), key.end(), '_', '-');
        return key;
    }

    CLI::App& app_;
    std::vector<std::string> keys_;
    std::set<std::string> switches_;
    std::string config_path_;
    std::map<std::string, std::string> flag_values_;
    std::map<std::string, bool> switch_values_;
    std::map<std::string, std::string> values_;
};

unsigned thread_count(const Settings& s) {
    const long t = s.integer("threads", 1);
    if (t < 0) throw UsageError("--threads must be non-negative");
    return static_cast<unsigned>(t);
}

EdfOptions edf_options(const Settings& s) {
    EdfOptions edf;
    if (s.has("q")) edf.q_override = static_cast<int>(s.integer("q", 0));
    edf.transpose = s.flag("transpose");
    return edf;
}

std::set<std::string> merge_set(const Settings& s) {
    std::set<std::string> out;
    for (auto& c : io::split_csv_line(s.text("merge", "crater,dirt"))) {
        if (!c.empty()) out.insert(c);
    }
    if (out.empty()) throw UsageError("--merge needs at least one class");
    return out;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::usage: return 2;
        case ErrorKind::data: return 3;
        case ErrorKind::numeric: return 4;
    }
    return 3;
}

int report_error(std::string_view kind, int code, std::string_view message) {
    nlohmann::json line{{"error", kind}, {"exit_code", code}, {"message", message}};
    std::cerr << line.dump() << '\n';
    return code;
}

const std::vector<std::string> kGenerationKeys = {
    "defect_free", "dirt", "crater", "m", "frequency", "phase", "offset", "amplitude", "pattern_width",
    "noise_sigma", "crater_radius", "crater_strength", "dirt_radius", "dirt_strength", "center_jitter", "format"};

}  // namespace

int run(int argc, char** argv) {
    CLI::App app{"Surface defect detection from fringe-pattern patches: spline EDF features and NN-ball posteriors"};
    app.require_subcommand(1);

    auto* generate = app.add_subcommand("generate", "Render a labeled synthetic fringe-patch dataset");
    std::vector<std::string> gen_keys = kGenerationKeys;
    gen_keys.insert(gen_keys.end(), {"seed", "out", "threads"});
    Settings gen(*generate, gen_keys);

    auto* extract = app.add_subcommand("extract", "Compute feature vectors for every patch in a dataset");
    Settings ext(*extract, {"dataset", "out", "feature", "q", "transpose", "threads", "seed"}, {"transpose"});

    auto* classify = app.add_subcommand("classify", "Posterior class probabilities for query features");
    Settings cls(*classify, {"reference", "query", "out", "leave_one_out", "threads", "seed"}, {"leave_one_out"});

    auto* evaluate = app.add_subcommand("evaluate", "Repeated stratified split/classify/score runs");
    Settings eval(*evaluate,
                  {"features", "dataset", "out", "feature", "q", "transpose", "train_frac", "runs", "merge", "seed",
                   "threads"},
                  {"transpose"});

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return report_error("usage", 2, e.what());
    }

    try {
        if (*generate) {
            gen.resolve();
            GenerateCommand cmd;
            for (const auto& [key, value] : gen.values()) {
                if (key != "seed" && key != "out" && key != "threads") apply_generation_setting(cmd.config, key, value);
            }
            cmd.config.threads = thread_count(gen);
            cmd.seed = gen.seed();
            cmd.out = gen.required("out");
            cmd_generate(cmd);
        } else if (*extract) {
            ext.resolve();
            ExtractCommand cmd;
            cmd.dataset = ext.required("dataset");
            cmd.out = ext.required("out");
            cmd.feature = feature_kind_from(ext.text("feature", "edf"));
            cmd.edf = edf_options(ext);
            cmd.threads = thread_count(ext);
            const ExtractSummary s = cmd_extract(cmd);
            if (s.degenerate_patches || s.floored_rows) {
                std::cerr << "warning: " << s.degenerate_patches << " constant patches, " << s.floored_rows
                          << " rows floored at EDF 2\n";
            }
        } else if (*classify) {
            cls.resolve();
            ClassifyCommand cmd;
            cmd.reference = cls.required("reference");
            cmd.query = cls.required("query");
            cmd.out = cls.required("out");
            cmd.leave_one_out = cls.flag("leave_one_out");
            cmd.threads = thread_count(cls);
            cmd_classify(cmd);
        } else if (*evaluate) {
            eval.resolve();
            EvaluateCommand cmd;
            if (eval.has("features")) cmd.features = eval.text("features");
            if (eval.has("dataset")) cmd.dataset = eval.text("dataset");
            cmd.out = eval.required("out");
            cmd.feature = feature_kind_from(eval.text("feature", "edf"));
            cmd.edf = edf_options(eval);
            cmd.evaluation.train_fraction = eval.number("train_frac", 0.7);
            cmd.evaluation.runs = static_cast<int>(eval.integer("runs", 10));
            cmd.evaluation.defect_classes = merge_set(eval);
            cmd.evaluation.seed = eval.seed();
            cmd.evaluation.threads = thread_count(eval);
            cmd_evaluate(cmd);
        }
    } catch (const Error& e) {
        const int code = exit_code(e.kind());
        const char* kind = e.kind() == ErrorKind::usage ? "usage" : e.kind() == ErrorKind::data ? "data" : "numeric";
        return report_error(kind, code, e.what());
    } catch (const fs::filesystem_error& e) {
        return report_error("data", 3, e.what());
    } catch (const std::exception& e) {
        return report_error("numeric", 4, e.what());
    }
    return 0;
}

}  // namespace deflect::cli
