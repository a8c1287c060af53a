#include "implicit_recon/lbfgs.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "implicit_recon/error.hpp"

namespace irecon {

std::string_view to_string(Termination reason) noexcept {
    switch (reason) {
    case Termination::GradTol: return "GradTol";
    case Termination::LossTol: return "LossTol";
    case Termination::MaxEpochs: return "MaxEpochs";
    case Termination::LineSearchFail: return "LineSearchFail";
    }
    return "?";
}

void validate(const LbfgsOptions& o, std::size_t dimension) {
    if (o.memory == 0) throw Error(ErrorCode::InvalidArgument, "L-BFGS memory must be at least 1");
    if (!(o.c1 > 0.0 && o.c1 < o.c2 && o.c2 < 1.0))
        throw Error(ErrorCode::InvalidArgument, "Wolfe constants must satisfy 0 < c1 < c2 < 1");
    if (o.max_line_search == 0) throw Error(ErrorCode::InvalidArgument, "line search needs at least one trial");
    if (o.grad_tol < 0.0 || o.loss_tol < 0.0) throw Error(ErrorCode::InvalidArgument, "tolerances must be >= 0");
    if (o.lower.empty() != o.upper.empty())
        throw Error(ErrorCode::InvalidArgument, "give both lower and upper bounds or neither");
    if (!o.lower.empty()) {
        if (o.lower.size() != dimension || o.upper.size() != dimension)
            throw Error(ErrorCode::InvalidArgument, "bounds must have one entry per coordinate");
        for (std::size_t i = 0; i < dimension; ++i)
            if (!(o.lower[i] <= o.upper[i])) throw Error(ErrorCode::InvalidArgument, "lower bound exceeds upper bound");
    }
}

namespace {

using Vec = std::vector<double>;

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(std::span<const double> a) {
    double m = 0.0;
    for (double v : a) m = std::max(m, std::fabs(v));
    return m;
}

/// Minimizer of the cubic interpolating (x1, f1, g1) and (x2, f2, g2),
/// clamped to [lo, hi]; falls back to the midpoint when the cubic has no
/// real minimizer.
double cubic_minimizer(double x1, double f1, double g1, double x2, double f2, double g2, double lo, double hi) {
    const double d1 = g1 + g2 - 3.0 * (f1 - f2) / (x1 - x2);
    const double d2_sq = d1 * d1 - g1 * g2;
    if (d2_sq >= 0.0) {
        const double d2 = std::copysign(std::sqrt(d2_sq), x2 - x1);
        const double denom = g2 - g1 + 2.0 * d2;
        if (denom != 0.0) {
            const double t = x2 - (x2 - x1) * ((g2 + d2 - d1) / denom);
            if (std::isfinite(t)) return std::clamp(t, lo, hi);
        }
    }
    return 0.5 * (lo + hi);
}

struct Sample {
    double alpha = 0.0;
    double f = 0.0;
    double dphi = 0.0;
    Vec x;
    Vec g;
};

class Minimizer {
public:
    Minimizer(const Objective& objective, const LbfgsOptions& options)
        : objective_(objective), opt_(options), bounded_(!options.lower.empty()) {}

    LbfgsResult run(std::span<const double> x0, const IterationCallback& callback);

private:
    double evaluate(std::span<const double> x, std::span<double> g) {
        ++evaluations_;
        return objective_(x, g);
    }

    bool at_lower(std::size_t i, double xi) const { return bounded_ && xi <= opt_.lower[i]; }
    bool at_upper(std::size_t i, double xi) const { return bounded_ && xi >= opt_.upper[i]; }

    void project(std::span<double> x) const {
        if (!bounded_) return;
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], opt_.lower[i], opt_.upper[i]);
    }

    double projected_gradient_norm(std::span<const double> x, std::span<const double> g) const {
        if (!bounded_) return inf_norm(g);
        double m = 0.0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double stepped = std::clamp(x[i] - g[i], opt_.lower[i], opt_.upper[i]);
            m = std::max(m, std::fabs(stepped - x[i]));
        }
        return m;
    }

    /// Coordinates pinned at a bound with the gradient pushing outward.
    std::vector<bool> active_set(std::span<const double> x, std::span<const double> g) const {
        std::vector<bool> active(x.size(), false);
        if (!bounded_) return active;
        for (std::size_t i = 0; i < x.size(); ++i)
            active[i] = (at_lower(i, x[i]) && g[i] > 0.0) || (at_upper(i, x[i]) && g[i] < 0.0);
        return active;
    }

    Vec direction(std::span<const double> g, const std::vector<bool>& active) const;
    double max_step(std::span<const double> x, std::span<const double> d) const;
    bool line_search(const Vec& x, double f0, const Vec& d, double dphi0, double alpha0, double alpha_max,
                     Sample& accepted, Sample& best);
    Sample trial(const Vec& x, const Vec& d, double alpha);

    const Objective& objective_;
    const LbfgsOptions& opt_;
    bool bounded_;
    std::size_t evaluations_ = 0;
    std::deque<Vec> s_;
    std::deque<Vec> y_;
};

Vec Minimizer::direction(std::span<const double> g, const std::vector<bool>& active) const {
    const std::size_t n = g.size();
    Vec q(g.begin(), g.end());
    for (std::size_t i = 0; i < n; ++i)
        if (active[i]) q[i] = 0.0;
    const std::size_t m = s_.size();
    std::vector<double> rho(m), a(m);
    for (std::size_t k = m; k-- > 0;) {
        rho[k] = 1.0 / dot(y_[k], s_[k]);
        a[k] = rho[k] * dot(s_[k], q);
        for (std::size_t i = 0; i < n; ++i) q[i] -= a[k] * y_[k][i];
    }
    if (m > 0) {
        const double gamma = dot(s_.back(), y_.back()) / dot(y_.back(), y_.back());
        for (double& v : q) v *= gamma;
    }
    for (std::size_t k = 0; k < m; ++k) {
        const double beta = rho[k] * dot(y_[k], q);
        for (std::size_t i = 0; i < n; ++i) q[i] += s_[k][i] * (a[k] - beta);
    }
    for (std::size_t i = 0; i < n; ++i) q[i] = active[i] ? 0.0 : -q[i];
    return q;
}

double Minimizer::max_step(std::span<const double> x, std::span<const double> d) const {
    double limit = std::numeric_limits<double>::infinity();
    if (!bounded_) return limit;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (d[i] < 0.0 && std::isfinite(opt_.lower[i])) limit = std::min(limit, (opt_.lower[i] - x[i]) / d[i]);
        if (d[i] > 0.0 && std::isfinite(opt_.upper[i])) limit = std::min(limit, (opt_.upper[i] - x[i]) / d[i]);
    }
    return std::max(limit, 0.0);
}

Sample Minimizer::trial(const Vec& x, const Vec& d, double alpha) {
    Sample s;
    s.alpha = alpha;
    s.x.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) s.x[i] = x[i] + alpha * d[i];
    if (bounded_) {
        // A coordinate whose bound is reached at this step length lands on the
        // bound exactly instead of a rounding error away from it.
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (d[i] < 0.0 && alpha >= (opt_.lower[i] - x[i]) / d[i]) s.x[i] = opt_.lower[i];
            if (d[i] > 0.0 && alpha >= (opt_.upper[i] - x[i]) / d[i]) s.x[i] = opt_.upper[i];
        }
    }
    project(s.x);
    s.g.assign(x.size(), 0.0);
    s.f = evaluate(s.x, s.g);
    s.dphi = dot(s.g, d);
    if (!std::isfinite(s.f) || !std::isfinite(s.dphi)) {
        s.f = std::numeric_limits<double>::infinity();
        s.dphi = std::numeric_limits<double>::quiet_NaN();
    }
    return s;
}

// Strong Wolfe search (bracketing phase followed by zoom), at most
// max_line_search objective evaluations. `best` tracks the lowest trial seen.
bool Minimizer::line_search(const Vec& x, double f0, const Vec& d, double dphi0, double alpha0, double alpha_max,
                            Sample& accepted, Sample& best) {
    const double c1 = opt_.c1;
    const double c2 = opt_.c2;
    const double d_scale = inf_norm(d);
    std::size_t budget = opt_.max_line_search;

    auto note = [&](const Sample& s) {
        if (s.f < best.f) best = s;
    };
    auto armijo = [&](const Sample& s) { return s.f <= f0 + c1 * s.alpha * dphi0; };
    auto curvature = [&](const Sample& s) { return std::fabs(s.dphi) <= -c2 * dphi0; };

    auto zoom = [&](Sample lo, Sample hi) -> bool {
        while (budget > 0) {
            const double a = std::min(lo.alpha, hi.alpha);
            const double b = std::max(lo.alpha, hi.alpha);
            const double width = b - a;
            if (width * d_scale < 1e-16 * std::max(1.0, inf_norm(x))) return false;
            double alpha;
            if (std::isfinite(hi.f) && !std::isnan(hi.dphi)) {
                alpha = cubic_minimizer(lo.alpha, lo.f, lo.dphi, hi.alpha, hi.f, hi.dphi, a, b);
                const double guard = 0.01 * width;
                if (alpha <= a + guard || alpha >= b - guard) alpha = 0.5 * (a + b);
            } else {
                alpha = 0.5 * (a + b);
            }
            --budget;
            Sample s = trial(x, d, alpha);
            note(s);
            if (!armijo(s) || s.f >= lo.f) {
                hi = std::move(s);
                continue;
            }
            if (curvature(s)) {
                accepted = std::move(s);
                return true;
            }
            if (s.dphi * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
            lo = std::move(s);
        }
        return false;
    };

    Sample prev;
    prev.alpha = 0.0;
    prev.f = f0;
    prev.dphi = dphi0;
    prev.x = x;
    double alpha = std::min(alpha0, alpha_max);
    bool first = true;
    while (budget > 0) {
        --budget;
        Sample cur = trial(x, d, alpha);
        note(cur);
        if (!armijo(cur) || (!first && cur.f >= prev.f)) return zoom(std::move(prev), std::move(cur));
        if (curvature(cur)) {
            accepted = std::move(cur);
            return true;
        }
        if (cur.dphi >= 0.0) return zoom(std::move(cur), std::move(prev));
        if (alpha >= alpha_max) {
            // Sufficient decrease holds and the slope is still negative at the
            // first bound hit: take the step and let the active set grow.
            accepted = std::move(cur);
            return true;
        }
        const double lo_step = alpha + 0.01 * (alpha - prev.alpha);
        const double hi_step = 10.0 * alpha;
        double next = cubic_minimizer(prev.alpha, prev.f, prev.dphi, cur.alpha, cur.f, cur.dphi, lo_step, hi_step);
        next = std::min(next, alpha_max);
        prev = std::move(cur);
        alpha = next;
        first = false;
    }
    return false;
}

LbfgsResult Minimizer::run(std::span<const double> x0, const IterationCallback& callback) {
    const std::size_t n = x0.size();
    LbfgsResult result;
    Vec x(x0.begin(), x0.end());
    project(x);
    Vec g(n, 0.0);
    double f = evaluate(x, g);
    if (!std::isfinite(f) || std::any_of(g.begin(), g.end(), [](double v) { return !std::isfinite(v); }))
        throw Error(ErrorCode::NonFiniteObjective, "objective is not finite at the starting point");

    auto finish = [&](Termination reason) {
        result.x = std::move(x);
        result.loss = f;
        result.gradient = std::move(g);
        result.reason = reason;
        result.evaluations = evaluations_;
        return std::move(result);
    };

    if (projected_gradient_norm(x, g) <= opt_.grad_tol) return finish(Termination::GradTol);

    for (std::size_t k = 1; k <= opt_.max_iterations; ++k) {
        const std::vector<bool> active = active_set(x, g);
        Vec d = direction(g, active);
        double dphi0 = dot(g, d);
        if (!(dphi0 < 0.0) && !s_.empty()) {
            s_.clear();
            y_.clear();
            d = direction(g, active);
            dphi0 = dot(g, d);
        }
        if (!(dphi0 < 0.0)) return finish(Termination::GradTol);

        const double alpha0 = s_.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(d, d))) : 1.0;
        const double alpha_max = max_step(x, d);

        Sample accepted;
        Sample best;
        best.f = f;
        const bool ok = line_search(x, f, d, dphi0, alpha0, alpha_max, accepted, best);
        if (!ok) {
            if (best.f < f) {
                x = std::move(best.x);
                g = std::move(best.g);
                f = best.f;
                result.history.push_back(f);
                result.iterations = k;
                if (callback) callback({k, x, f, g});
            }
            return finish(Termination::LineSearchFail);
        }
#ifndef NDEBUG
        assert(accepted.f <= f + opt_.c1 * accepted.alpha * dphi0);
        assert(std::fabs(accepted.dphi) <= -opt_.c2 * dphi0 || accepted.alpha >= alpha_max);
#endif

        Vec s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = accepted.x[i] - x[i];
            y[i] = accepted.g[i] - g[i];
        }
        const double sy = dot(s, y);
        if (sy > 1e-12 * dot(y, y)) {
            s_.push_back(std::move(s));
            y_.push_back(std::move(y));
            if (s_.size() > opt_.memory) {
                s_.pop_front();
                y_.pop_front();
            }
        }

        const double f_prev = f;
        x = std::move(accepted.x);
        g = std::move(accepted.g);
        f = accepted.f;
        result.history.push_back(f);
        result.iterations = k;
        if (callback) callback({k, x, f, g});

        if (projected_gradient_norm(x, g) <= opt_.grad_tol) return finish(Termination::GradTol);
        const double scale = std::max({std::fabs(f_prev), std::fabs(f), 1.0});
        if ((f_prev - f) / scale <= opt_.loss_tol) return finish(Termination::LossTol);
    }
    return finish(Termination::MaxEpochs);
}

}  // namespace

LbfgsResult lbfgs_minimize(const Objective& objective, std::span<const double> x0, const LbfgsOptions& options,
                           const IterationCallback& callback) {
    validate(options, x0.size());
    Minimizer minimizer(objective, options);
    return minimizer.run(x0, callback);
}

}  // namespace irecon
