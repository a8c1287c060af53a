#include "implicit_recon/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>

#include "implicit_recon/error.hpp"

namespace irecon {

double frobenius_norm(const Params& params) {
    double sum = 0.0;
    for (const Layer& l : params.layers)
        for (double w : l.weight.values()) sum += w * w;
    return std::sqrt(sum);
}

std::size_t Histogram::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::size_t{0});
}

Histogram make_histogram(std::span<const double> values, std::size_t bins) {
    if (bins == 0) throw Error(ErrorCode::InvalidArgument, "histogram needs at least one bin");
    Histogram hist;
    hist.counts.assign(bins, 0);
    if (values.empty()) {
        hist.edges.assign(bins + 1, 0.0);
        return hist;
    }
    const auto [mn_it, mx_it] = std::minmax_element(values.begin(), values.end());
    const double lo = *mn_it;
    const double hi = *mx_it;
    hist.edges.resize(bins + 1);
    const double width = (hi - lo) / static_cast<double>(bins);
    for (std::size_t k = 0; k <= bins; ++k) hist.edges[k] = lo + width * static_cast<double>(k);
    hist.edges[bins] = hi;
    if (!(width > 0.0)) {
        hist.counts[0] = values.size();
        return hist;
    }
    for (double v : values) {
        auto k = static_cast<std::size_t>(std::floor((v - lo) / width));
        hist.counts[std::min(k, bins - 1)] += 1;
    }
    return hist;
}

Histogram gradient_histogram(const GradientRecord& record, std::size_t layer, std::size_t bins) {
    if (layer < 1 || layer > record.layers.size())
        throw Error(ErrorCode::IndexOutOfRange, "layer " + std::to_string(layer) + " not in [1, " +
                                                    std::to_string(record.layers.size()) + "]");
    return make_histogram(record.layers[layer - 1].weight.values(), bins);
}

double median_abs_from_histogram(const Histogram& histogram) {
    std::vector<std::pair<double, std::size_t>> mags;
    for (std::size_t k = 0; k < histogram.counts.size(); ++k) {
        if (histogram.counts[k] == 0) continue;
        const double centre = 0.5 * (histogram.edges[k] + histogram.edges[k + 1]);
        mags.emplace_back(std::fabs(centre), histogram.counts[k]);
    }
    if (mags.empty()) return 0.0;
    std::sort(mags.begin(), mags.end());
    const std::size_t total = histogram.total();
    std::size_t seen = 0;
    for (const auto& [m, c] : mags) {
        seen += c;
        if (2 * seen >= total) return m;
    }
    return mags.back().first;
}

double tail_stability(std::span<const double> trace, double fraction) {
    if (trace.empty()) throw Error(ErrorCode::EmptyBatch, "stability of an empty trace");
    const auto tail = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(trace.size()) - 1e-9)));
    const auto window = trace.subspan(trace.size() - std::min(tail, trace.size()));
    const double n = static_cast<double>(window.size());
    const double mean = std::accumulate(window.begin(), window.end(), 0.0) / n;
    double var = 0.0;
    for (double v : window) var += (v - mean) * (v - mean);
    var /= n;
    if (var == 0.0) return 0.0;
    return std::sqrt(var) / mean;
}

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    return out;
}

std::ifstream open_artifact(const std::filesystem::path& path) {
    std::error_code ec;
    if (!std::filesystem::is_regular_file(path, ec)) throw Error(ErrorCode::MissingArtifact, path.string());
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::MissingArtifact, path.string());
    return in;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    return out;
}

double to_double(const std::string& s, std::size_t line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ParseError(line, "bad number '" + s + "'");
    }
}

}  // namespace

void write_loss_csv(const DiagnosticsLog& log, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "epoch,loss,frobenius_norm\n";
    char buf[96];
    for (const EpochRecord& r : log.epochs) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", r.epoch, r.loss, r.frobenius);
        out << buf;
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

std::vector<EpochRecord> read_loss_csv(const std::filesystem::path& path) {
    std::ifstream in = open_artifact(path);
    std::string line;
    if (!std::getline(in, line) || line != "epoch,loss,frobenius_norm")
        throw ParseError(1, "expected header 'epoch,loss,frobenius_norm'");
    std::vector<EpochRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 3) throw ParseError(line_no, "expected 3 columns");
        records.push_back({static_cast<std::size_t>(to_double(cells[0], line_no)), to_double(cells[1], line_no),
                           to_double(cells[2], line_no)});
    }
    return records;
}

void write_histogram_csv(const Histogram& histogram, const std::filesystem::path& path) {
    std::ofstream out = open_output(path);
    out << "bin_left,bin_right,count\n";
    char buf[96];
    for (std::size_t k = 0; k < histogram.counts.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%zu\n", histogram.edges[k], histogram.edges[k + 1],
                      histogram.counts[k]);
        out << buf;
    }
    if (!out) throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

Histogram read_histogram_csv(const std::filesystem::path& path) {
    std::ifstream in = open_artifact(path);
    std::string line;
    if (!std::getline(in, line) || line != "bin_left,bin_right,count")
        throw ParseError(1, "expected header 'bin_left,bin_right,count'");
    Histogram hist;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != 3) throw ParseError(line_no, "expected 3 columns");
        const double left = to_double(cells[0], line_no);
        const double right = to_double(cells[1], line_no);
        if (hist.edges.empty()) hist.edges.push_back(left);
        hist.edges.push_back(right);
        hist.counts.push_back(static_cast<std::size_t>(to_double(cells[2], line_no)));
    }
    return hist;
}

}  // namespace irecon
