#include "implicit_recon/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <string>

#include "implicit_recon/backprop.hpp"
#include "implicit_recon/error.hpp"

namespace irecon {

Matrix to_batch(std::span<const Point3> points) {
    Matrix batch(3, points.size());
    for (std::size_t c = 0; c < points.size(); ++c) {
        batch(0, c) = points[c].x;
        batch(1, c) = points[c].y;
        batch(2, c) = points[c].z;
    }
    return batch;
}

TrainReport train(const NetworkConfig& config, const PointSet& train_set, const TrainOptions& options) {
    return train_from(config, init_params(config), train_set, options);
}

TrainReport train_from(const NetworkConfig& config, const Params& initial, const PointSet& train_set,
                       const TrainOptions& options) {
    if (train_set.empty()) throw Error(ErrorCode::EmptyBatch, "training set is empty");
    if (config.input_dim != 3 || config.output_dim != 1)
        throw Error(ErrorCode::InvalidArgument, "surface training needs input_dim 3 and output_dim 1");
    validate(config);
    check_shapes(config, initial);

    const auto start = std::chrono::steady_clock::now();
    const Matrix batch = to_batch(train_set.positions());
    const std::vector<double> labels = train_set.labels();
    Params work = initial;

    const Objective objective = [&](std::span<const double> x, std::span<double> grad) {
        work.assign(x);
        LossGradient lg;
        try {
            lg = loss_and_gradient(config, work, batch, labels);
        } catch (const Error& e) {
            // Overflow during a line-search probe; the search backs off.
            if (e.code() != ErrorCode::NonFiniteActivation) throw;
            std::fill(grad.begin(), grad.end(), 0.0);
            return std::numeric_limits<double>::infinity();
        }
        const std::vector<double> flat = lg.gradient.flatten();
        std::copy(flat.begin(), flat.end(), grad.begin());
        return lg.loss;
    };

    TrainReport report;
    report.initial_loss = evaluate_loss(config, initial, batch, labels);
    const double limit = options.divergence_factor * std::max(report.initial_loss, 1e-300);

    std::vector<std::size_t> wanted = options.snapshot_epochs;
    std::sort(wanted.begin(), wanted.end());

    auto snapshot = [&](std::size_t epoch, std::span<const double> gradient) {
        const Params grad = unflatten(config, gradient);
        HistogramSnapshot snap;
        snap.epoch = epoch;
        for (const Layer& l : grad.layers) snap.layers.push_back(make_histogram(l.weight.values(), options.histogram_bins));
        report.log.snapshots.push_back(std::move(snap));
    };

    const IterationCallback on_iteration = [&](const IterationState& state) {
        if (!(state.loss <= limit))
            throw Error(ErrorCode::DivergenceDetected, "loss " + std::to_string(state.loss) + " at epoch " +
                                                           std::to_string(state.iteration) + " exceeds " +
                                                           std::to_string(limit));
        work.assign(state.x);
        report.log.epochs.push_back({state.iteration, state.loss, frobenius_norm(work)});
        if (std::binary_search(wanted.begin(), wanted.end(), state.iteration)) snapshot(state.iteration, state.gradient);
        if (options.on_epoch) options.on_epoch(state.iteration, work);
    };

    const std::vector<double> x0 = initial.flatten();
    LbfgsResult result = lbfgs_minimize(objective, x0, options.lbfgs, on_iteration);

    if (options.snapshot_last &&
        (report.log.snapshots.empty() || report.log.snapshots.back().epoch != result.iterations))
        snapshot(result.iterations, result.gradient);

    report.params = unflatten(config, result.x);
    report.epochs = result.iterations;
    report.reason = result.reason;
    report.final_loss = result.loss;
    report.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

std::optional<std::size_t> first_epoch_below(const DiagnosticsLog& log, double target) {
    for (const EpochRecord& r : log.epochs)
        if (r.loss <= target) return r.epoch;
    return std::nullopt;
}

}  // namespace irecon
