#pragma once

#include <span>
#include <vector>

#include "implicit_recon/matrix.hpp"
#include "implicit_recon/network.hpp"

namespace irecon {

/// Mean over samples of the squared error. `predictions` and `labels` hold the
/// same number of entries; `samples` is the batch size n (defaults to the
/// entry count, i.e. output_dim = 1). Throws LengthMismatch or EmptyBatch.
double mse_loss(std::span<const double> predictions, std::span<const double> labels,
                std::size_t samples = 0);

/// dL/dW^(h), dL/db^(h) per layer, shaped exactly like Params.
struct GradientRecord {
    std::vector<Layer> layers;

    /// Aligned with Params::flatten().
    [[nodiscard]] std::vector<double> flatten() const;
};

/// Reverse-mode gradient of mse_loss(forward(batch), labels). `labels` is the
/// output_dim x n target matrix in row-major order. Throws TraceMismatch when
/// the trace was not produced by this (config, params) or the labels do not
/// match its batch.
GradientRecord backward(const NetworkConfig& config, const Params& params, const ForwardTrace& trace,
                        std::span<const double> labels);

struct LossGradient {
    double loss = 0.0;
    GradientRecord gradient;
};

/// One forward + backward pass.
LossGradient loss_and_gradient(const NetworkConfig& config, const Params& params, const Matrix& batch,
                               std::span<const double> labels);

/// Loss only; no trace is kept beyond the pass.
double evaluate_loss(const NetworkConfig& config, const Params& params, const Matrix& batch,
                     std::span<const double> labels);

/// Central differences (L(φ + h e_k) - L(φ - h e_k)) / 2h over every flat
/// parameter coordinate. Throws InvalidArgument for step <= 0.
std::vector<double> finite_diff_gradient(const NetworkConfig& config, const Params& params,
                                         const Matrix& batch, std::span<const double> labels,
                                         double step = 1e-6);

}  // namespace irecon
