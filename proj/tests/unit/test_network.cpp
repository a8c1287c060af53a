#include <doctest.h>

#include <cmath>
#include <random>

#include "implicit_recon/checkpoint.hpp"
#include "implicit_recon/error.hpp"
#include "implicit_recon/network.hpp"
#include "oracles.hpp"

using namespace irecon;

namespace {

constexpr Architecture kAll[] = {Architecture::Pn, Architecture::Res, Architecture::Hw, Architecture::SqrHw};

NetworkConfig small_config(Architecture kind, std::size_t hidden, std::size_t width, std::uint64_t seed = 0) {
    NetworkConfig c;
    c.kind = kind;
    c.hidden_layers = hidden;
    c.width = width;
    c.seed = seed;
    return c;
}

ErrorCode code_of(const auto& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an exception");
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_SUITE("network") {

TEST_CASE("architecture names") {
    for (Architecture a : kAll) CHECK(parse_architecture(to_string(a)) == a);
    CHECK(parse_architecture("SqrHw") == Architecture::SqrHw);
    CHECK_THROWS_AS(parse_architecture("cnn"), Error);
}

TEST_CASE("config validation and skip placement") {
    NetworkConfig c = small_config(Architecture::Hw, 6, 4);
    CHECK_NOTHROW(validate(c));
    CHECK_FALSE(c.has_skip(1));
    CHECK(c.has_skip(2));
    CHECK_FALSE(c.has_skip(3));
    CHECK(c.has_skip(4));
    CHECK(c.has_skip(6));
    CHECK_FALSE(c.has_skip(7));
    c.skip_period = 3;
    CHECK(c.has_skip(3));
    CHECK(c.has_skip(6));
    CHECK_FALSE(c.has_skip(2));
    c.skip_period = 7;
    for (std::size_t h = 1; h <= 7; ++h) CHECK_FALSE(c.has_skip(h));
    c.skip_period = 1;
    CHECK_FALSE(c.has_skip(1));
    CHECK(c.has_skip(2));

    CHECK(code_of([] { validate(small_config(Architecture::Pn, 0, 4)); }) == ErrorCode::InvalidArgument);
    CHECK(code_of([] { validate(small_config(Architecture::Pn, 2, 0)); }) == ErrorCode::InvalidArgument);
    NetworkConfig zero_period = small_config(Architecture::Pn, 2, 3);
    zero_period.skip_period = 0;
    CHECK(code_of([&] { validate(zero_period); }) == ErrorCode::InvalidArgument);
    // Arbitrary input and output dimensions are accepted.
    NetworkConfig wide = small_config(Architecture::Res, 2, 3);
    wide.input_dim = 5;
    wide.output_dim = 2;
    CHECK_NOTHROW(validate(wide));
}

TEST_CASE("init_params") {
    const NetworkConfig c = small_config(Architecture::SqrHw, 3, 50, 17);
    const Params a = init_params(c);
    CHECK(init_params(c) == a);
    REQUIRE(a.layers.size() == 4);
    CHECK(a.layers[0].weight.rows() == 50);
    CHECK(a.layers[0].weight.cols() == 3);
    CHECK(a.layers[3].weight.rows() == 1);
    CHECK(a.parameter_count() == (3 * 50 + 50) + 2 * (50 * 50 + 50) + (50 + 1));

    const double bound = std::sqrt(6.0 / 100.0);
    CHECK(bound == doctest::Approx(0.2449).epsilon(1e-3));
    for (double w : a.layers[1].weight.values()) CHECK(std::abs(w) < bound);
    for (const auto& layer : a.layers)
        for (double b : layer.bias) CHECK(b == 0.0);

    NetworkConfig other = c;
    other.seed = 18;
    CHECK_FALSE(init_params(other) == a);
}

TEST_CASE("init_params variance matches the uniform distribution") {
    // 400 x 2500 weights on the middle layers give 10^6 samples.
    NetworkConfig c = small_config(Architecture::Pn, 401, 50, 3);
    const Params p = init_params(c);
    const double a = std::sqrt(6.0 / 100.0);
    long double sum = 0.0L;
    long double sq = 0.0L;
    std::size_t n = 0;
    for (std::size_t h = 1; h < 401; ++h)
        for (double w : p.layers[h].weight.values()) {
            sum += w;
            sq += static_cast<long double>(w) * w;
            ++n;
        }
    CHECK(n == 1'000'000);
    const double mean = static_cast<double>(sum / n);
    const double var = static_cast<double>(sq / n) - mean * mean;
    CHECK(std::abs(var - a * a / 3.0) <= 0.02 * a * a / 3.0);
}

TEST_CASE("flatten and unflatten") {
    std::mt19937_64 rng(5);
    const NetworkConfig c = small_config(Architecture::Res, 3, 4);
    const Params p = test::random_params(c, rng);
    const auto flat = p.flatten();
    CHECK(flat.size() == p.parameter_count());
    CHECK(unflatten(c, flat) == p);
    // Layout: layer 1 weights row-major then its bias.
    CHECK(flat[0] == p.layers[0].weight(0, 0));
    CHECK(flat[1] == p.layers[0].weight(0, 1));
    CHECK(flat[12] == p.layers[0].bias[0]);
    Params q = zero_params(c);
    q.assign(flat);
    CHECK(q == p);
    CHECK(code_of([&] { unflatten(c, std::vector<double>(3)); }) == ErrorCode::ShapeMismatch);
}

TEST_CASE("layer_affine") {
    SUBCASE("zero") {
        const Matrix z = layer_affine(Matrix(2, 3), std::vector<double>(2), Matrix(3, 4, 1.0));
        for (double v : z.values()) CHECK(v == 0.0);
    }
    SUBCASE("identity plus bias") {
        Matrix w(2, 2);
        w(0, 0) = w(1, 1) = 1.0;
        Matrix p(2, 1);
        p(0, 0) = 2.0;
        p(1, 0) = 3.0;
        const Matrix z = layer_affine(w, std::vector<double>{1.0, 1.0}, p);
        CHECK(z(0, 0) == 3.0);
        CHECK(z(1, 0) == 4.0);
    }
    SUBCASE("matches triple loop") {
        std::mt19937_64 rng(8);
        const Matrix w = test::random_batch(4, 3, rng);
        const Matrix p = test::random_batch(3, 5, rng);
        const std::vector<double> b{0.1, -0.2, 0.3, 0.0};
        const Matrix z = layer_affine(w, b, p);
        const Matrix ref = test::naive_matmul(w, p);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(z(i, j) - (ref(i, j) + b[i])) <= 1e-14);
    }
    SUBCASE("shape mismatch") {
        CHECK(code_of([] { layer_affine(Matrix(2, 3), std::vector<double>(2), Matrix(2, 1)); }) ==
              ErrorCode::ShapeMismatch);
        CHECK(code_of([] { layer_affine(Matrix(2, 3), std::vector<double>(3), Matrix(3, 1)); }) ==
              ErrorCode::ShapeMismatch);
    }
}

TEST_CASE("forward") {
    SUBCASE("zero params give zero") {
        for (Architecture a : kAll) {
            const NetworkConfig c = small_config(a, 4, 6);
            std::mt19937_64 rng(1);
            const Matrix out = forward(c, zero_params(c), test::random_batch(3, 9, rng));
            for (double v : out.values()) CHECK(v == 0.0);
        }
    }
    SUBCASE("one squared highway neuron") {
        // The first hidden layer never skips, so layer 1 feeds exactly 0.5 into
        // the skip-carrying layer 2: tanh(0.5) + 0.5^2.
        const NetworkConfig c = small_config(Architecture::SqrHw, 2, 1);
        Params p = zero_params(c);
        p.layers[0].weight(0, 0) = 1.0;
        p.layers[1].weight(0, 0) = 1.0;
        p.layers[2].weight(0, 0) = 1.0;
        Matrix x(3, 1);
        x(0, 0) = std::atanh(0.5);
        const ForwardTrace t = forward_trace(c, p, x);
        CHECK(t.p[1](0, 0) == doctest::Approx(0.5).epsilon(1e-15));
        CHECK(t.p[2](0, 0) == doctest::Approx(0.712117).epsilon(1e-6));
        CHECK(t.prediction()(0, 0) == doctest::Approx(std::tanh(0.5) + 0.25).epsilon(1e-14));
    }
    SUBCASE("highway equals plain when Z vanishes") {
        NetworkConfig hw = small_config(Architecture::Hw, 2, 2);
        NetworkConfig pn = hw;
        pn.kind = Architecture::Pn;
        std::mt19937_64 rng(4);
        Params p = test::random_params(hw, rng);
        // Layer 2 gets W with the layer-1 output in its kernel and b = 0.
        p.layers[0].bias = {0.0, 0.0};
        p.layers[0].weight = Matrix(2, 3);
        p.layers[0].weight(0, 0) = 1.0;
        p.layers[0].weight(1, 0) = 1.0;
        p.layers[1].weight(0, 0) = 1.0;
        p.layers[1].weight(0, 1) = -1.0;
        p.layers[1].weight(1, 0) = 2.0;
        p.layers[1].weight(1, 1) = -2.0;
        p.layers[1].bias = {0.0, 0.0};
        Matrix x(3, 1);
        x(0, 0) = 0.3;
        const auto th = forward_trace(hw, p, x);
        const auto tp = forward_trace(pn, p, x);
        CHECK(th.z[2](0, 0) == 0.0);
        CHECK(th.p[2] == tp.p[2]);
        CHECK(th.prediction() == tp.prediction());
    }
    SUBCASE("batch equals per-point evaluation") {
        for (Architecture a : kAll) {
            const NetworkConfig c = small_config(a, 4, 7);
            std::mt19937_64 rng(12);
            const Params p = test::random_params(c, rng, 0.8);
            const Matrix batch = test::random_batch(3, 16, rng);
            const Matrix all = forward(c, p, batch);
            for (std::size_t j = 0; j < batch.cols(); ++j) {
                const Matrix col = batch.column(j);
                CHECK(forward(c, p, col)(0, 0) == all(0, j));
                const std::vector<double> point{col(0, 0), col(1, 0), col(2, 0)};
                CHECK(std::abs(test::reference_forward(c, p, point)[0] - all(0, j)) <= 1e-14 * (1 + std::abs(all(0, j))));
            }
        }
    }
    SUBCASE("shape errors") {
        const NetworkConfig c = small_config(Architecture::Pn, 2, 3);
        CHECK(code_of([&] { forward(c, zero_params(c), Matrix(2, 4)); }) == ErrorCode::ShapeMismatch);
        Params bad = zero_params(c);
        bad.layers.pop_back();
        CHECK(code_of([&] { forward(c, bad, Matrix(3, 4)); }) == ErrorCode::ShapeMismatch);
    }
    SUBCASE("non-finite input") {
        const NetworkConfig c = small_config(Architecture::Pn, 2, 3);
        Matrix x(3, 1);
        x(0, 0) = std::nan("");
        std::mt19937_64 rng(2);
        CHECK(code_of([&] { forward(c, test::random_params(c, rng), x); }) == ErrorCode::NonFiniteActivation);
    }
}

TEST_CASE("trace layout and shared pre-activation") {
    for (Architecture a : kAll) {
        const NetworkConfig c = small_config(a, 4, 5);
        std::mt19937_64 rng(21);
        const Params p = test::random_params(c, rng);
        const Matrix batch = test::random_batch(3, 6, rng);
        const ForwardTrace t = forward_trace(c, p, batch);
        CHECK(t.layer_count() == 5);
        CHECK(t.p[0] == batch);
        CHECK(t.prediction().rows() == 1);
        CHECK(t.prediction().cols() == 6);
        for (std::size_t h = 1; h <= 4; ++h) {
            CAPTURE(h);
            const bool skip = c.has_skip(h) && a != Architecture::Pn;
            CHECK(t.skip[h].empty() == !skip);
            for (std::size_t k = 0; k < t.z[h].size(); ++k) {
                const double z = t.z[h].values()[k];
                double expected = std::tanh(z);
                if (skip) {
                    const double s = t.skip[h].values()[k];
                    if (a == Architecture::Hw) CHECK(s == z);
                    if (a == Architecture::SqrHw) CHECK(s == z * z);
                    if (a == Architecture::Res) CHECK(s == t.p[h - 1].values()[k]);
                    expected += s;
                }
                CHECK(t.p[h].values()[k] == expected);
            }
        }
    }
}

TEST_CASE("skip period beyond the depth collapses every variant to the plain network") {
    std::mt19937_64 rng(77);
    for (int instance = 0; instance < 10; ++instance) {
        NetworkConfig pn = small_config(Architecture::Pn, 1 + instance % 4, 2 + instance % 5);
        pn.skip_period = pn.hidden_layers + 1;
        const Params p = test::random_params(pn, rng);
        const Matrix batch = test::random_batch(3, 5, rng);
        const Matrix ref = forward(pn, p, batch);
        for (Architecture a : {Architecture::Res, Architecture::Hw, Architecture::SqrHw}) {
            NetworkConfig c = pn;
            c.kind = a;
            CHECK(forward(c, p, batch) == ref);
        }
    }
}

TEST_CASE("residual spans need equal widths") {
    NetworkConfig c = small_config(Architecture::Res, 2, 3);
    c.input_dim = 3;
    CHECK_NOTHROW(validate(c));
    // Width 1 with a 3-wide input is still fine: the first layer never skips.
    c.width = 1;
    CHECK_NOTHROW(validate(c));
}

TEST_CASE("checkpoint round trip") {
    test::TempDir dir;
    NetworkConfig c = small_config(Architecture::Hw, 3, 4, 9);
    c.skip_period = 3;
    std::mt19937_64 rng(3);
    const Checkpoint ck{c, test::random_params(c, rng), AffineMap{0.25, {1, -2, 3}}};
    save_checkpoint(ck, dir / "c.bin");
    const Checkpoint back = load_checkpoint(dir / "c.bin");
    CHECK(back.config == ck.config);
    CHECK(back.params == ck.params);
    CHECK(back.normalization == ck.normalization);

    auto bytes = test::read_file(dir / "c.bin");
    test::write_file(dir / "trunc.bin", bytes.substr(0, bytes.size() - 8));
    CHECK(code_of([&] { load_checkpoint(dir / "trunc.bin"); }) == ErrorCode::BadCheckpoint);
    test::write_file(dir / "long.bin", bytes + "x");
    CHECK(code_of([&] { load_checkpoint(dir / "long.bin"); }) == ErrorCode::BadCheckpoint);
    bytes[0] = 'X';
    test::write_file(dir / "magic.bin", bytes);
    CHECK(code_of([&] { load_checkpoint(dir / "magic.bin"); }) == ErrorCode::BadCheckpoint);
    CHECK(code_of([&] { load_checkpoint(dir / "nope.bin"); }) == ErrorCode::FileNotFound);
}

}  // TEST_SUITE
