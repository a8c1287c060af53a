#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "implicit_recon/backprop.hpp"
#include "implicit_recon/network.hpp"

namespace irecon {

/// sqrt of the sum of squared weights over every layer. Biases are excluded.
double frobenius_norm(const Params& params);

struct Histogram {
    /// bins + 1 ascending edges; bin k covers [edges[k], edges[k+1]), the last
    /// bin also includes its right edge.
    std::vector<double> edges;
    std::vector<std::size_t> counts;

    [[nodiscard]] std::size_t total() const noexcept;
};

/// Equal-width histogram over [min, max] of `values`. When all values are
/// equal, the single edge pair is [v, v] repeated and bin 0 takes every entry.
Histogram make_histogram(std::span<const double> values, std::size_t bins);

/// Histogram of the dL/dW entries of layer `layer` (1-based, up to H + 1).
/// Throws IndexOutOfRange for a bad layer and InvalidArgument for bins == 0.
Histogram gradient_histogram(const GradientRecord& record, std::size_t layer, std::size_t bins);

/// Median of |g| estimated from a signed histogram by weighting each bin's
/// centre magnitude with its count.
double median_abs_from_histogram(const Histogram& histogram);

struct EpochRecord {
    std::size_t epoch = 0;
    double loss = 0.0;
    double frobenius = 0.0;

    friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct HistogramSnapshot {
    std::size_t epoch = 0;
    /// One histogram per layer, index 0 being layer h = 1.
    std::vector<Histogram> layers;
};

struct DiagnosticsLog {
    std::vector<EpochRecord> epochs;
    std::vector<HistogramSnapshot> snapshots;
};

/// Population standard deviation divided by the mean over the final
/// ceil(fraction * size) entries. Returns 0 for a constant trace.
double tail_stability(std::span<const double> trace, double fraction = 0.1);

/// CSV with header `epoch,loss,frobenius_norm`; 17 significant digits.
void write_loss_csv(const DiagnosticsLog& log, const std::filesystem::path& path);
std::vector<EpochRecord> read_loss_csv(const std::filesystem::path& path);

/// CSV with header `bin_left,bin_right,count`.
void write_histogram_csv(const Histogram& histogram, const std::filesystem::path& path);
Histogram read_histogram_csv(const std::filesystem::path& path);

}  // namespace irecon
