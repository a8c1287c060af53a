#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace irecon {

struct LbfgsOptions {
    /// Number of curvature pairs kept.
    std::size_t memory = 10;
    std::size_t max_iterations = 1000;
    /// Stop when the projected gradient's infinity norm falls to this value.
    double grad_tol = 1e-8;
    /// Stop when (f_prev - f) / max(|f_prev|, |f|, 1) falls to this value.
    double loss_tol = 1e-10;
    /// Strong Wolfe constants, 0 < c1 < c2 < 1.
    double c1 = 1e-4;
    double c2 = 0.9;
    /// Trial steps per line search.
    std::size_t max_line_search = 20;
    /// Optional box. Empty means unbounded; otherwise one entry per
    /// coordinate, +-infinity allowed.
    std::vector<double> lower;
    std::vector<double> upper;
};

/// Throws InvalidArgument on inconsistent options.
void validate(const LbfgsOptions& options, std::size_t dimension);

enum class Termination { GradTol, LossTol, MaxEpochs, LineSearchFail };
std::string_view to_string(Termination reason) noexcept;

/// Returns f(x) and writes the gradient into `grad` (same length as x).
using Objective = std::function<double(std::span<const double> x, std::span<double> grad)>;

struct IterationState {
    std::size_t iteration = 0;  // 1-based
    std::span<const double> x;
    double loss = 0.0;
    std::span<const double> gradient;
};

/// Called after each accepted iteration. May throw to abort.
using IterationCallback = std::function<void(const IterationState&)>;

struct LbfgsResult {
    std::vector<double> x;
    double loss = 0.0;
    std::vector<double> gradient;
    /// Loss after each completed iteration.
    std::vector<double> history;
    Termination reason = Termination::MaxEpochs;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
};

/// Limited-memory BFGS with a strong-Wolfe line search (cubic interpolation).
/// With bounds, iterates stay in the box: coordinates at an active bound are
/// frozen for the step, the search direction is restricted to the free
/// coordinates and the step length is capped at the first bound hit.
/// Throws NonFiniteObjective if the objective returns NaN/Inf at x0; a
/// non-finite value during a line search is treated as a failed trial.
LbfgsResult lbfgs_minimize(const Objective& objective, std::span<const double> x0,
                           const LbfgsOptions& options, const IterationCallback& callback = {});

}  // namespace irecon
