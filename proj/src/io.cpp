#include "deflect/io.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "deflect/error.hpp"

namespace deflect::io {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> lines_of(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!trim(line).empty()) out.push_back(line);
        start = end + 1;
    }
    return out;
}

}  // namespace

std::string format_number(double value) {
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

double parse_number(std::string_view text, std::string_view what) {
    text = trim(text);
    double value = 0.0;
    auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size() || text.empty()) {
        throw DataError("cannot parse " + std::string(what) + " from '" + std::string(text) + "'");
    }
    return value;
}

std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(trim(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write '" + path.string() + "'");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw DataError("failed writing '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw DataError("cannot move '" + tmp.string() + "' into place: " + ec.message());
}

std::map<std::string, std::string> read_key_values(const std::filesystem::path& path) {
    const std::string text = read_text(path);
    std::map<std::string, std::string> out;
    int lineno = 0;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view view = line;
        if (auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
        }
        out[std::string(trim(view.substr(0, eq)))] = std::string(trim(view.substr(eq + 1)));
    }
    return out;
}

std::string features_to_csv(const std::vector<FeatureVector>& features) {
    const int m = features.empty() ? 0 : features.front().dimension();
    std::ostringstream out;
    out << "patch_id,label,f,psi,m";
    for (int r = 1; r <= m; ++r) out << ",tau_" << r;
    out << '\n';
    for (const auto& f : features) {
        if (f.dimension() != m) throw DimensionMismatchError("feature vectors of mixed dimension");
        out << f.patch_id << ',' << f.label.value_or("") << ',' << format_number(f.frequency) << ','
            << format_number(f.phase) << ',' << m;
        for (double t : f.tau) out << ',' << format_number(t);
        out << '\n';
    }
    return out.str();
}

std::vector<FeatureVector> features_from_csv(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw DataError("features CSV is empty");
    const auto header = split_csv_line(lines.front());
    if (header.size() < 5 || header[0] != "patch_id" || header[1] != "label" || header[4] != "m") {
        throw DataError("features CSV header must start with patch_id,label,f,psi,m");
    }
    const std::size_t m = header.size() - 5;
    std::vector<FeatureVector> out;
    out.reserve(lines.size() - 1);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const auto cells = split_csv_line(lines[i]);
        const std::string where = "features CSV line " + std::to_string(i + 1);
        if (cells.size() != header.size()) {
            throw DimensionMismatchError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                         std::to_string(cells.size()));
        }
        FeatureVector f;
        f.patch_id = cells[0];
        if (!cells[1].empty()) f.label = cells[1];
        f.frequency = parse_number(cells[2], where + " f");
        f.phase = parse_number(cells[3], where + " psi");
        if (parse_number(cells[4], where + " m") != static_cast<double>(m)) {
            throw DimensionMismatchError(where + ": m disagrees with the number of tau columns");
        }
        f.tau.reserve(m);
        for (std::size_t r = 0; r < m; ++r) f.tau.push_back(parse_number(cells[5 + r], where + " tau"));
        f.raw = f.tau;
        out.push_back(std::move(f));
    }
    return out;
}

std::string posteriors_to_csv(const LabeledFeatureSet& ref, const std::vector<FeatureVector>& queries,
                              const std::vector<PosteriorVector>& posteriors) {
    std::ostringstream out;
    out << "patch_id,true_label,predicted";
    for (const auto& c : ref.classes()) out << ",p_" << c;
    out << ",entropy\n";
    for (std::size_t i = 0; i < posteriors.size(); ++i) {
        out << queries[i].patch_id << ',' << queries[i].label.value_or("") << ','
            << ref.classes()[posteriors[i].predicted];
        for (double p : posteriors[i].probabilities) out << ',' << format_number(p);
        out << ',' << format_number(posteriors[i].entropy) << '\n';
    }
    return out.str();
}

std::string patch_to_pgm(const Patch& patch, double lo, double hi) {
    if (!(hi > lo)) throw UsageError("PGM intensity range must have hi > lo");
    std::ostringstream out;
    out << "P2\n# " << patch.patch_id << "\n" << patch.pixels.cols() << ' ' << patch.pixels.rows() << "\n65535\n";
    for (Eigen::Index r = 0; r < patch.pixels.rows(); ++r) {
        for (Eigen::Index c = 0; c < patch.pixels.cols(); ++c) {
            const double scaled = std::clamp((patch.pixels(r, c) - lo) / (hi - lo), 0.0, 1.0) * 65535.0;
            out << (c ? " " : "") << static_cast<long>(std::lround(scaled));
        }
        out << '\n';
    }
    return out.str();
}

Eigen::MatrixXd pgm_to_pixels(std::string_view text) {
    // Tokenize, dropping comments.
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        const char ch = text[i];
        if (ch == '#') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (std::isspace(static_cast<unsigned char>(ch))) {
            ++i;
        } else {
            const std::size_t start = i;
            while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) && text[i] != '#') ++i;
            tokens.push_back(text.substr(start, i - start));
        }
    }
    if (tokens.size() < 4 || tokens[0] != "P2") throw DataError("not a plain (P2) graymap");
    const auto width = static_cast<Eigen::Index>(parse_number(tokens[1], "PGM width"));
    const auto height = static_cast<Eigen::Index>(parse_number(tokens[2], "PGM height"));
    const double maxval = parse_number(tokens[3], "PGM maxval");
    if (width <= 0 || height <= 0 || maxval <= 0) throw DataError("bad PGM header");
    if (static_cast<Eigen::Index>(tokens.size()) != 4 + width * height) {
        throw DataError("PGM pixel count does not match its header");
    }
    Eigen::MatrixXd pixels(height, width);
    for (Eigen::Index r = 0; r < height; ++r) {
        for (Eigen::Index c = 0; c < width; ++c) pixels(r, c) = parse_number(tokens[4 + r * width + c], "PGM pixel");
    }
    return pixels;
}

std::string patch_to_csv_matrix(const Patch& patch) {
    std::ostringstream out;
    for (Eigen::Index r = 0; r < patch.pixels.rows(); ++r) {
        for (Eigen::Index c = 0; c < patch.pixels.cols(); ++c) {
            out << (c ? "," : "") << format_number(patch.pixels(r, c));
        }
        out << '\n';
    }
    return out.str();
}

Eigen::MatrixXd csv_matrix_to_pixels(std::string_view text) {
    const auto lines = lines_of(text);
    if (lines.empty()) throw DataError("CSV matrix is empty");
    std::vector<std::vector<std::string>> rows;
    for (auto line : lines) rows.push_back(split_csv_line(line));
    const auto cols = static_cast<Eigen::Index>(rows.front().size());
    Eigen::MatrixXd pixels(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (static_cast<Eigen::Index>(rows[r].size()) != cols) throw DataError("ragged CSV matrix");
        for (Eigen::Index c = 0; c < cols; ++c) {
            pixels(static_cast<Eigen::Index>(r), c) = parse_number(rows[r][c], "matrix value");
        }
    }
    return pixels;
}

}  // namespace deflect::io
