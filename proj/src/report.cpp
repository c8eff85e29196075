#include <sstream>

#include "json.hpp"

#include "deflect/io.hpp"
#include "deflect/metrics.hpp"

namespace deflect {

namespace {

nlohmann::json optional_number(const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

nlohmann::json series_json(const MetricSeries& s) {
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& v : s.runs) runs.push_back(optional_number(v));
    return {{"runs", runs}, {"mean", optional_number(s.mean)}, {"se", optional_number(s.se)}};
}

nlohmann::json view_json(const std::map<std::string, MetricSeries>& view) {
    nlohmann::json out = nlohmann::json::object();
    for (const auto& [name, series] : view) out[name] = series_json(series);
    return out;
}

void csv_rows(std::ostringstream& out, const std::string& view, const std::map<std::string, MetricSeries>& metrics) {
    auto cell = [](const std::optional<double>& v) { return v ? io::format_number(*v) : std::string(); };
    for (const auto& [name, s] : metrics) {
        for (std::size_t r = 0; r < s.runs.size(); ++r) {
            out << view << ',' << name << ",run_" << r + 1 << ',' << cell(s.runs[r]) << '\n';
        }
        out << view << ',' << name << ",mean," << cell(s.mean) << '\n';
        out << view << ',' << name << ",se," << cell(s.se) << '\n';
    }
}

}  // namespace

std::string report_to_json(const EvaluationReport& report) {
    nlohmann::json doc;
    doc["format"] = "deflect-evaluation-report";
    doc["version"] = 1;
    doc["classes"] = report.classes;
    doc["class_counts"] = report.class_counts;
    doc["defect_classes"] = report.defect_classes;
    doc["n_total"] = report.n_total;
    doc["n_defect"] = report.n_defect;
    doc["n_defect_free"] = report.n_defect_free;
    doc["n_validation"] = report.n_validation;
    doc["train_fraction"] = report.train_fraction;
    doc["seed"] = report.seed;
    doc["runs"] = report.run_seeds.size();
    doc["run_seeds"] = report.run_seeds;
    doc["multiclass"] = view_json(report.multiclass);
    doc["binary"] = report.has_binary_view() ? view_json(report.binary) : nlohmann::json(nullptr);
    return doc.dump(2) + "\n";
}

std::string report_to_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "view,metric,statistic,value\n";
    csv_rows(out, "multiclass", report.multiclass);
    if (report.has_binary_view()) csv_rows(out, "binary", report.binary);
    return out.str();
}

}  // namespace deflect
