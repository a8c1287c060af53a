#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "implicit_recon/diagnostics.hpp"
#include "implicit_recon/lbfgs.hpp"
#include "implicit_recon/matrix.hpp"
#include "implicit_recon/network.hpp"
#include "implicit_recon/point_set.hpp"

namespace irecon {

struct TrainOptions {
    /// max_iterations is the epoch budget; one epoch is one full-batch
    /// L-BFGS iteration.
    LbfgsOptions lbfgs;
    /// Epochs at which per-layer dL/dW histograms are captured.
    std::vector<std::size_t> snapshot_epochs{100, 1000};
    /// Also capture the final epoch.
    bool snapshot_last = true;
    std::size_t histogram_bins = 50;
    /// Abort with DivergenceDetected once the loss exceeds this multiple of
    /// the initial loss.
    double divergence_factor = 1e6;
    /// Called after every epoch with the current parameters (checkpointing).
    std::function<void(std::size_t epoch, const Params& params)> on_epoch;
};

struct TrainReport {
    Params params;
    std::size_t epochs = 0;
    Termination reason = Termination::MaxEpochs;
    double initial_loss = 0.0;
    double final_loss = 0.0;
    DiagnosticsLog log;
    double seconds = 0.0;
};

/// Positions as a 3 x n feature-major batch.
Matrix to_batch(std::span<const Point3> points);

/// Minimizes the full-batch MSE between network outputs and the point labels,
/// starting from init_params(config). Deterministic for fixed seeds.
TrainReport train(const NetworkConfig& config, const PointSet& train_set, const TrainOptions& options);

/// Same, starting from the given parameters.
TrainReport train_from(const NetworkConfig& config, const Params& initial, const PointSet& train_set,
                       const TrainOptions& options);

/// First epoch whose recorded loss is at or below `target`, if any.
std::optional<std::size_t> first_epoch_below(const DiagnosticsLog& log, double target);

}  // namespace irecon
