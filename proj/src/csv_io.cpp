#include "ffreg/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ffreg {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_real(const std::string& cell, const std::filesystem::path& path, std::size_t line) {
    const std::string t = trim(cell);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(v)) {
        throw CsvError(path.string() + ":" + std::to_string(line) + ": not a finite number: '" + t + "'");
    }
    return v;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw CsvError("cannot open '" + path.string() + "'");
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        std::vector<std::string> cells = split(line);
        if (t.header.empty()) {
            for (auto& c : cells) t.header.push_back(trim(c));
            continue;
        }
        if (cells.size() != t.header.size()) {
            throw CsvError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                           std::to_string(t.header.size()) + " columns, found " + std::to_string(cells.size()));
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_real(c, path, lineno));
        t.rows.push_back(std::move(row));
    }
    if (t.header.empty()) throw CsvError(path.string() + ": missing header");
    return t;
}

void check_x_header(const std::vector<std::string>& header, std::size_t d, const std::filesystem::path& path) {
    for (std::size_t i = 0; i < d; ++i) {
        const std::string want = "x" + std::to_string(i + 1);
        if (header[i] != want) {
            throw CsvError(path.string() + ": header column " + std::to_string(i + 1) + " is '" + header[i] +
                           "', expected '" + want + "'");
        }
    }
}

std::string x_header(Eigen::Index d) {
    std::string h;
    for (Eigen::Index i = 0; i < d; ++i) h += "x" + std::to_string(i + 1) + ",";
    return h;
}

}  // namespace

std::string format_real(double v, int precision) {
    if (std::isnan(v)) return "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", precision, v);
    return buf;
}

std::vector<Sample> read_samples_csv(const std::filesystem::path& path) {
    const Table t = read_table(path);
    if (t.header.size() < 2 || t.header.back() != "y") {
        throw CsvError(path.string() + ": header must be x1,...,xd,y");
    }
    const std::size_t d = t.header.size() - 1;
    check_x_header(t.header, d, path);
    if (t.rows.empty()) throw CsvError(path.string() + ": no samples");
    std::vector<Sample> samples;
    for (const auto& row : t.rows) {
        Sample s;
        s.x = Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(d));
        s.y_actual = row.back();
        samples.push_back(std::move(s));
    }
    return samples;
}

std::string samples_csv(std::span<const Sample> samples) {
    if (samples.empty()) return "";
    std::string out = x_header(samples.front().x.size()) + "y\n";
    for (const Sample& s : samples) {
        for (Eigen::Index i = 0; i < s.x.size(); ++i) out += format_real(s.x[i]) + ",";
        out += format_real(s.y_actual) + "\n";
    }
    return out;
}

std::vector<Vector> read_queries_csv(const std::filesystem::path& path) {
    const Table t = read_table(path);
    check_x_header(t.header, t.header.size(), path);
    std::vector<Vector> queries;
    for (const auto& row : t.rows) {
        queries.emplace_back(Eigen::Map<const Vector>(row.data(), static_cast<Eigen::Index>(row.size())));
    }
    return queries;
}

std::string predictions_csv(std::span<const Prediction> predictions) {
    const Eigen::Index d = predictions.empty() ? 1 : predictions.front().x_query.size();
    std::string out = x_header(d) + "y_mean,y_std,ci_low,ci_high,n_selected,empty,extrapolated\n";
    for (const Prediction& p : predictions) {
        for (Eigen::Index i = 0; i < p.x_query.size(); ++i) out += format_real(p.x_query[i]) + ",";
        out += format_real(p.y_mean) + "," + format_real(p.y_std) + "," + format_real(p.ci_low) + "," +
               format_real(p.ci_high) + "," + std::to_string(p.n_selected) + "," + (p.empty ? "true" : "false") +
               "," + (p.extrapolated ? "true" : "false") + "\n";
    }
    return out;
}

std::string line_plot_csv(std::span<const Prediction> predictions, std::span<const double> truth) {
    if (predictions.size() != truth.size()) {
        throw std::invalid_argument("line_plot_csv: predictions and truth differ in length");
    }
    std::string out = "t,x1,x2,x3,y_true,y_mean,ci_low,ci_high\n";
    const std::size_t n = predictions.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Prediction& p = predictions[k];
        const double t = n > 1 ? static_cast<double>(k) / static_cast<double>(n - 1) : 0.0;
        out += format_real(t) + ",";
        for (Eigen::Index i = 0; i < 3; ++i) {
            out += format_real(i < p.x_query.size() ? p.x_query[i] : std::nan("")) + ",";
        }
        out += format_real(truth[k]) + "," + format_real(p.y_mean) + "," + format_real(p.ci_low) + "," +
               format_real(p.ci_high) + "\n";
    }
    return out;
}

std::string loss_history_csv(const std::vector<std::vector<double>>& history) {
    std::string out = "layer,epoch,loss\n";
    for (std::size_t l = 0; l < history.size(); ++l) {
        for (std::size_t e = 0; e < history[l].size(); ++e) {
            out += std::to_string(l) + "," + std::to_string(e) + "," + format_real(history[l][e]) + "\n";
        }
    }
    return out;
}

}  // namespace ffreg
