#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "implicit_recon/backprop.hpp"
#include "implicit_recon/error.hpp"
#include "implicit_recon/lbfgs.hpp"
#include "implicit_recon/trainer.hpp"
#include "oracles.hpp"

using namespace irecon;

namespace {

double rosenbrock(std::span<const double> x, std::span<double> g) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    g[0] = -2.0 * a - 400.0 * x[0] * b;
    g[1] = 200.0 * b;
    return a * a + 100.0 * b * b;
}

struct Quadratic {
    std::vector<std::vector<double>> a;
    std::vector<double> b;

    double operator()(std::span<const double> x, std::span<double> g) const {
        double f = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            double ax = 0.0;
            for (std::size_t j = 0; j < b.size(); ++j) ax += a[i][j] * x[j];
            g[i] = ax - b[i];
            f += 0.5 * x[i] * ax - b[i] * x[i];
        }
        return f;
    }
};

Quadratic random_spd(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1, 1);
    std::vector<std::vector<double>> m(n, std::vector<double>(n));
    for (auto& row : m)
        for (double& v : row) v = d(rng);
    Quadratic q{std::vector<std::vector<double>>(n, std::vector<double>(n, 0.0)), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j)
            for (std::size_t k = 0; k < n; ++k) q.a[i][j] += m[k][i] * m[k][j];
        q.a[i][i] += 1.0;
        q.b[i] = d(rng);
    }
    return q;
}

}  // namespace

TEST_SUITE("optim") {

TEST_CASE("option validation") {
    LbfgsOptions o;
    CHECK_NOTHROW(validate(o, 2));
    o.c2 = o.c1;
    CHECK_THROWS_AS(validate(o, 2), Error);
    o = {};
    o.memory = 0;
    CHECK_THROWS_AS(validate(o, 2), Error);
    o = {};
    o.lower = {0.0};
    CHECK_THROWS_AS(validate(o, 2), Error);
    o.lower = {1.0, 0.0};
    o.upper = {0.0, 1.0};
    CHECK_THROWS_AS(validate(o, 2), Error);
}

TEST_CASE("sphere objective converges in a few iterations") {
    const std::vector<double> x0{3.0, -4.0};
    const auto r = lbfgs_minimize(
        [](std::span<const double> x, std::span<double> g) {
            g[0] = 2 * x[0];
            g[1] = 2 * x[1];
            return x[0] * x[0] + x[1] * x[1];
        },
        x0, {});
    CHECK(std::hypot(r.x[0], r.x[1]) <= 1e-8);
    CHECK(r.iterations <= 3);
    CHECK(r.reason == Termination::GradTol);
}

TEST_CASE("rosenbrock") {
    LbfgsOptions o;
    o.max_iterations = 500;
    o.grad_tol = 1e-10;
    o.loss_tol = 0.0;
    const auto r = lbfgs_minimize(rosenbrock, std::vector<double>{-1.2, 1.0}, o);
    CHECK(std::abs(r.x[0] - 1.0) <= 1e-6);
    CHECK(std::abs(r.x[1] - 1.0) <= 1e-6);
    CHECK(r.loss <= 1e-12);
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
}

TEST_CASE("least squares matches the normal equations") {
    std::mt19937_64 rng(20);
    std::uniform_real_distribution<double> d(-1, 1);
    std::vector<std::vector<double>> a(20, std::vector<double>(5));
    std::vector<double> b(20);
    for (auto& row : a)
        for (double& v : row) v = d(rng);
    for (double& v : b) v = d(rng);

    auto objective = [&](std::span<const double> x, std::span<double> g) {
        std::fill(g.begin(), g.end(), 0.0);
        double f = 0.0;
        for (std::size_t i = 0; i < 20; ++i) {
            double r = -b[i];
            for (std::size_t j = 0; j < 5; ++j) r += a[i][j] * x[j];
            f += r * r;
            for (std::size_t j = 0; j < 5; ++j) g[j] += 2.0 * r * a[i][j];
        }
        return f;
    };
    LbfgsOptions o;
    o.grad_tol = 1e-12;
    o.loss_tol = 0.0;
    const auto r = lbfgs_minimize(objective, std::vector<double>(5, 0.0), o);

    std::vector<std::vector<double>> ata(5, std::vector<double>(5, 0.0));
    std::vector<double> atb(5, 0.0);
    for (std::size_t i = 0; i < 20; ++i)
        for (std::size_t j = 0; j < 5; ++j) {
            atb[j] += a[i][j] * b[i];
            for (std::size_t k = 0; k < 5; ++k) ata[j][k] += a[i][j] * a[i][k];
        }
    const auto x = test::solve_dense(ata, atb);
    for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(r.x[j] - x[j]) <= 1e-8);
}

TEST_CASE("quadratic exactness after n+1 iterations") {
    std::mt19937_64 rng(5);
    for (std::size_t n : {2u, 3u, 5u, 8u}) {
        CAPTURE(n);
        const Quadratic q = random_spd(n, rng);
        const auto xstar = test::solve_dense(q.a, q.b);
        LbfgsOptions o;
        o.memory = 10;
        o.max_iterations = n + 1;
        o.c2 = 1e-3;
        o.loss_tol = 0.0;
        const auto r = lbfgs_minimize(q, std::vector<double>(n, 0.0), o);
        CHECK(r.iterations <= n + 1);
        for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(r.x[i] - xstar[i]) <= 1e-8);
    }
}

TEST_CASE("box constraints") {
    auto shifted = [](std::span<const double> x, std::span<double> g) {
        g[0] = 2 * (x[0] + 1);
        g[1] = 2 * (x[1] + 1);
        return (x[0] + 1) * (x[0] + 1) + (x[1] + 1) * (x[1] + 1);
    };
    LbfgsOptions o;
    o.lower = {0.0, 0.0};
    o.upper = {std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
    const auto r = lbfgs_minimize(shifted, std::vector<double>{2.0, 3.0}, o);
    CHECK(r.x[0] == 0.0);
    CHECK(r.x[1] == 0.0);
    CHECK(r.reason == Termination::GradTol);

    SUBCASE("infinite box is step-for-step the unbounded method") {
        LbfgsOptions free;
        free.grad_tol = 1e-12;
        LbfgsOptions boxed = free;
        boxed.lower.assign(2, -std::numeric_limits<double>::infinity());
        boxed.upper.assign(2, std::numeric_limits<double>::infinity());
        const auto a = lbfgs_minimize(rosenbrock, std::vector<double>{-1.2, 1.0}, free);
        const auto b = lbfgs_minimize(rosenbrock, std::vector<double>{-1.2, 1.0}, boxed);
        CHECK(a.history == b.history);
        CHECK(a.x == b.x);
    }
    SUBCASE("start outside the box is projected") {
        const auto p = lbfgs_minimize(shifted, std::vector<double>{-5.0, 1.0}, o);
        CHECK(p.x[0] == 0.0);
        CHECK(p.x[1] == 0.0);
    }
}

TEST_CASE("accepted steps satisfy the strong Wolfe conditions") {
    LbfgsOptions o;
    o.max_iterations = 200;
    o.loss_tol = 0.0;
    std::vector<std::vector<double>> xs;
    std::vector<std::vector<double>> gs;
    std::vector<double> fs;
    const std::vector<double> x0{-1.2, 1.0};
    xs.push_back(x0);
    std::vector<double> g0(2);
    fs.push_back(rosenbrock(x0, g0));
    gs.push_back(g0);
    lbfgs_minimize(rosenbrock, x0, o, [&](const IterationState& s) {
        xs.emplace_back(s.x.begin(), s.x.end());
        gs.emplace_back(s.gradient.begin(), s.gradient.end());
        fs.push_back(s.loss);
    });
    REQUIRE(xs.size() > 5);
    for (std::size_t k = 1; k < xs.size(); ++k) {
        const double dx0 = xs[k][0] - xs[k - 1][0];
        const double dx1 = xs[k][1] - xs[k - 1][1];
        // With step s = alpha d: sufficient decrease and curvature in terms of s.
        const double slope0 = gs[k - 1][0] * dx0 + gs[k - 1][1] * dx1;
        const double slope1 = gs[k][0] * dx0 + gs[k][1] * dx1;
        CHECK(slope0 < 0.0);
        CHECK(fs[k] <= fs[k - 1] + o.c1 * slope0 + 1e-15 * std::abs(fs[k - 1]));
        CHECK(std::abs(slope1) <= o.c2 * std::abs(slope0) * (1 + 1e-12));
    }
}

TEST_CASE("termination reasons") {
    SUBCASE("max epochs") {
        LbfgsOptions o;
        o.max_iterations = 3;
        o.loss_tol = 0.0;
        const auto r = lbfgs_minimize(rosenbrock, std::vector<double>{-1.2, 1.0}, o);
        CHECK(r.reason == Termination::MaxEpochs);
        CHECK(r.iterations == 3);
        CHECK(r.history.size() == 3);
    }
    SUBCASE("loss tolerance") {
        LbfgsOptions o;
        o.grad_tol = 0.0;
        o.loss_tol = 1e-3;
        o.max_iterations = 1000;
        const auto r = lbfgs_minimize(rosenbrock, std::vector<double>{-1.2, 1.0}, o);
        CHECK(r.reason == Termination::LossTol);
    }
    SUBCASE("line search failure returns the best point") {
        // A non-smooth kink at the minimum defeats curvature-based steps.
        auto kink = [](std::span<const double> x, std::span<double> g) {
            g[0] = x[0] >= 0 ? 1.0 : -1.0;
            return std::abs(x[0]);
        };
        LbfgsOptions o;
        o.grad_tol = 0.0;
        o.loss_tol = 0.0;
        o.max_iterations = 100;
        const auto r = lbfgs_minimize(kink, std::vector<double>{0.7}, o);
        CHECK(r.reason == Termination::LineSearchFail);
        CHECK(r.loss <= 0.7);
        CHECK(std::isfinite(r.x[0]));
    }
    SUBCASE("non-finite start") {
        auto bad = [](std::span<const double>, std::span<double> g) {
            g[0] = 0.0;
            return std::nan("");
        };
        try {
            lbfgs_minimize(bad, std::vector<double>{1.0}, {});
            FAIL("expected NonFiniteObjective");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::NonFiniteObjective);
        }
    }
}

TEST_CASE("training") {
    SUBCASE("all-zero labels are fitted exactly") {
        // Only the output bias is off; one quadratic step in that coordinate
        // reaches the zero interpolant.
        const PointSet ps = label_points(synth_sphere(40, 0, 1.0, 2).positions(), {}, {});
        for (Architecture a : {Architecture::Pn, Architecture::Res, Architecture::Hw, Architecture::SqrHw}) {
            NetworkConfig c;
            c.kind = a;
            c.hidden_layers = 2;
            c.width = 5;
            Params start = zero_params(c);
            start.layers.back().bias[0] = 0.7;
            TrainOptions o;
            o.lbfgs.max_iterations = 5;
            const TrainReport r = train_from(c, start, ps, o);
            CHECK(r.initial_loss == doctest::Approx(0.49));
            CHECK(r.final_loss <= 1e-10);
            CHECK(r.epochs <= 3);
        }
    }
    SUBCASE("all-zero labels from a random start") {
        NetworkConfig c;
        c.kind = Architecture::SqrHw;
        c.hidden_layers = 2;
        c.width = 5;
        c.seed = 4;
        const PointSet ps = label_points(synth_sphere(40, 0, 1.0, 2).positions(), {}, {});
        TrainOptions o;
        o.lbfgs.max_iterations = 50;
        const TrainReport r = train(c, ps, o);
        CHECK(r.final_loss <= 1e-4 * r.initial_loss);
    }
    SUBCASE("report bookkeeping and determinism") {
        NetworkConfig c;
        c.kind = Architecture::Hw;
        c.hidden_layers = 3;
        c.width = 8;
        c.seed = 1;
        const PointSet ps = synth_sphere(60, 6, 1.0, 1);
        TrainOptions o;
        o.lbfgs.max_iterations = 30;
        o.lbfgs.grad_tol = 0.0;
        o.lbfgs.loss_tol = 0.0;
        o.snapshot_epochs = {5, 10, 500};
        o.histogram_bins = 7;
        std::vector<std::size_t> seen;
        o.on_epoch = [&](std::size_t e, const Params&) { seen.push_back(e); };
        const TrainReport a = train(c, ps, o);
        CHECK(a.epochs <= 30);
        CHECK(a.log.epochs.size() == a.epochs);
        CHECK(seen.size() == a.epochs);
        for (std::size_t i = 0; i < a.log.epochs.size(); ++i) {
            CHECK(a.log.epochs[i].epoch == i + 1);
            CHECK(a.log.epochs[i].frobenius > 0.0);
            if (i > 0) CHECK(a.log.epochs[i].loss <= a.log.epochs[i - 1].loss);
        }
        CHECK(a.final_loss == a.log.epochs.back().loss);
        CHECK(a.final_loss < a.initial_loss);
        REQUIRE(a.log.snapshots.size() == 3);
        CHECK(a.log.snapshots[0].epoch == 5);
        CHECK(a.log.snapshots[2].epoch == a.epochs);
        CHECK(a.log.snapshots[0].layers.size() == 4);
        CHECK(a.log.snapshots[0].layers[1].total() == 64);
        CHECK(a.final_loss == doctest::Approx(evaluate_loss(c, a.params, to_batch(ps.positions()), ps.labels())).epsilon(1e-12));

        o.on_epoch = {};
        const TrainReport b = train(c, ps, o);
        CHECK(b.log.epochs == a.log.epochs);
        CHECK(b.params == a.params);
    }
    SUBCASE("bad inputs") {
        NetworkConfig c;
        c.input_dim = 2;
        CHECK_THROWS_AS(train(c, synth_sphere(10, 0, 1, 1), {}), Error);
        CHECK_THROWS_AS(train(NetworkConfig{}, PointSet{}, {}), Error);
    }
}

TEST_CASE("first_epoch_below") {
    DiagnosticsLog log;
    log.epochs = {{1, 0.5, 1}, {2, 0.01, 1}, {3, 0.0009, 1}, {4, 0.0001, 1}};
    CHECK(first_epoch_below(log, 1e-3) == 3u);
    CHECK_FALSE(first_epoch_below(log, 1e-5).has_value());
}

}  // TEST_SUITE
