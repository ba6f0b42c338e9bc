#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "ordent/errors.hpp"
#include "ordent/network.hpp"
#include "testutil.hpp"

using namespace ordent;

namespace {

// Flatten params into one vector and back, for finite-difference sweeps.
std::vector<double> pack(const MlpParams& p) {
    std::vector<double> out;
    out.insert(out.end(), p.w1.data().begin(), p.w1.data().end());
    out.insert(out.end(), p.b1.begin(), p.b1.end());
    out.insert(out.end(), p.w2.data().begin(), p.w2.data().end());
    out.insert(out.end(), p.b2.begin(), p.b2.end());
    return out;
}

MlpParams unpack(const MlpParams& shape, const std::vector<double>& flat) {
    MlpParams p = shape;
    std::size_t k = 0;
    for (double& v : p.w1.data()) v = flat[k++];
    for (double& v : p.b1) v = flat[k++];
    for (double& v : p.w2.data()) v = flat[k++];
    for (double& v : p.b2) v = flat[k++];
    return p;
}

std::vector<double> pack_grads(const Gradients& g) {
    std::vector<double> out;
    out.insert(out.end(), g.w1.data().begin(), g.w1.data().end());
    out.insert(out.end(), g.b1.begin(), g.b1.end());
    out.insert(out.end(), g.w2.data().begin(), g.w2.data().end());
    out.insert(out.end(), g.b2.begin(), g.b2.end());
    return out;
}

} // namespace

TEST_CASE("init_params determinism and bound") {
    const MlpParams a = init_params(7, 5, 2, 123);
    const MlpParams b = init_params(7, 5, 2, 123);
    CHECK(a == b);
    const MlpParams c = init_params(7, 5, 2, 124);
    CHECK(a.w1 != c.w1);

    const double bound1 = std::sqrt(6.0 / (7 + 5));
    for (double v : a.w1.data()) CHECK(std::abs(v) <= bound1);
    const double bound2 = std::sqrt(6.0 / (5 + 2));
    for (double v : a.w2.data()) CHECK(std::abs(v) <= bound2);
    for (double v : a.b1) CHECK(v == 0.0);
    for (double v : a.b2) CHECK(v == 0.0);
}

TEST_CASE("first layer init is independent of the head width") {
    const MlpParams reg = init_params(7, 5, 1, 42);
    const MlpParams cls = init_params(7, 5, 20, 42);
    CHECK(reg.w1 == cls.w1);
}

TEST_CASE("forward with zero weights returns the output bias") {
    MlpParams p = init_params(3, 4, 2, 1);
    p.w1.fill(0.0);
    p.w2.fill(0.0);
    p.b2 = {0.7, -0.2};
    Matrix x(2, 3);
    x(0, 0) = 1.0; x(1, 2) = -3.0;
    const ForwardCache c = forward(p, x);
    for (int r = 0; r < 2; ++r) {
        CHECK(c.predictions(r, 0) == 0.7);
        CHECK(c.predictions(r, 1) == -0.2);
    }
}

TEST_CASE("forward matches a by-hand 2-2-1 evaluation") {
    MlpParams p;
    p.activation = Activation::relu;
    p.w1 = Matrix(2, 2);
    p.w1(0, 0) = 1.0;  p.w1(0, 1) = -1.0;
    p.w1(1, 0) = 0.5;  p.w1(1, 1) = 2.0;
    p.b1 = {0.1, -0.2};
    p.w2 = Matrix(1, 2);
    p.w2(0, 0) = 1.5;  p.w2(0, 1) = -0.5;
    p.b2 = {0.25};
    Matrix x(1, 2);
    x(0, 0) = 0.3; x(0, 1) = 0.7;
    const ForwardCache c = forward(p, x);
    CHECK(c.pre_activation(0, 0) == doctest::Approx(-0.3).epsilon(1e-15));
    CHECK(c.pre_activation(0, 1) == doctest::Approx(1.35).epsilon(1e-15));
    CHECK(c.features(0, 0) == 0.0);
    CHECK(c.features(0, 1) == doctest::Approx(1.35).epsilon(1e-15));
    CHECK(c.predictions(0, 0) == doctest::Approx(-0.425).epsilon(1e-14));
    CHECK(c.normalized(0, 0) == 0.0);
    CHECK(c.normalized(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("normalized rows have unit norm and scale invariance") {
    Rng rng(5);
    MlpParams p = init_params(4, 6, 1, 2);
    const Matrix x = testutil::random_matrix(8, 4, rng);
    const ForwardCache c = forward(p, x);
    for (int r = 0; r < 8; ++r) {
        double n2 = 0.0;
        for (int j = 0; j < 6; ++j) n2 += c.normalized(r, j) * c.normalized(r, j);
        if (c.feature_norms[r] > kFeatureNormFloor)
            CHECK(std::abs(std::sqrt(n2) - 1.0) <= 1e-12);
    }
    // scaling a feature row by c > 0 leaves the normalized row unchanged
    Matrix feats = c.features;
    for (int r = 0; r < 8; ++r) {
        double norm = 0.0;
        for (int j = 0; j < 6; ++j) norm += feats(r, j) * feats(r, j);
        norm = std::max(std::sqrt(norm), kFeatureNormFloor);
        for (int j = 0; j < 6; ++j) {
            const double scaled = 3.7 * feats(r, j);
            const double scaled_norm = 3.7 * norm;
            CHECK(std::abs(scaled / scaled_norm - c.normalized(r, j)) <= 1e-12);
        }
    }
}

TEST_CASE("backward with zero upstream is zero") {
    MlpParams p = init_params(3, 4, 2, 9);
    Matrix x(2, 3);
    x(0, 0) = 0.4; x(1, 1) = -0.8;
    const ForwardCache c = forward(p, x);
    UpstreamGrads up;
    up.d_predictions = Matrix(2, 2);
    up.d_features = Matrix(2, 4);
    up.d_normalized = Matrix(2, 4);
    const Gradients g = backward(p, c, up);
    for (double v : pack_grads(g)) CHECK(v == 0.0);
}

TEST_CASE("normalization Jacobian annihilates the radial direction") {
    Rng rng(17);
    MlpParams p = init_params(5, 6, 1, 3);
    const Matrix x = testutil::random_matrix(4, 5, rng);
    const ForwardCache c = forward(p, x);
    // (I - n n^T) z = z - n ||z|| = 0 for unclamped rows; feed z as the
    // upstream normalized-gradient and verify it backpropagates as zero by
    // comparing against a run with zero upstream.
    UpstreamGrads radial;
    radial.d_normalized = c.features;
    const Gradients g = backward(p, c, radial);
    for (double v : pack_grads(g)) CHECK(std::abs(v) < 1e-12);
}

TEST_CASE("backward matches central finite differences") {
    // Random linear functionals over predictions, features, and normalized
    // features; FD on every parameter.
    for (int trial = 0; trial < 20; ++trial) {
        Rng rng(100 + trial);
        const int in = 2 + static_cast<int>(rng.uniform_below(3));
        const int hidden = 2 + static_cast<int>(rng.uniform_below(4));
        const int out = 1 + static_cast<int>(rng.uniform_below(2));
        const int batch = 1 + static_cast<int>(rng.uniform_below(4));
        const Activation act = trial % 3 == 0 ? Activation::tanh : Activation::relu;

        const MlpParams shape = init_params(in, hidden, out, 55 + trial, act);
        const Matrix x = testutil::random_matrix(batch, in, rng);
        const Matrix ca = testutil::random_matrix(batch, out, rng);
        const Matrix cb = testutil::random_matrix(batch, hidden, rng);
        const Matrix cc = testutil::random_matrix(batch, hidden, rng);

        auto loss = [&](const MlpParams& p) {
            const ForwardCache c = forward(p, x);
            double s = 0.0;
            for (int r = 0; r < batch; ++r) {
                for (int o = 0; o < out; ++o) s += ca(r, o) * c.predictions(r, o);
                for (int j = 0; j < hidden; ++j)
                    s += cb(r, j) * c.features(r, j) + cc(r, j) * c.normalized(r, j);
            }
            return s;
        };

        const ForwardCache c = forward(shape, x);
        UpstreamGrads up{ca, cb, cc};
        const Gradients g = backward(shape, c, up);

        const std::vector<double> flat = pack(shape);
        auto f = [&](const std::vector<double>& v) { return loss(unpack(shape, v)); };
        const double err = testutil::max_grad_err(f, flat, pack_grads(g));
        CHECK(err < 1e-5);
    }
}

TEST_CASE("backward rejects non-finite upstream") {
    MlpParams p = init_params(2, 3, 1, 4);
    Matrix x(1, 2);
    const ForwardCache c = forward(p, x);
    UpstreamGrads up;
    up.d_predictions = Matrix(1, 1);
    up.d_predictions(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(backward(p, c, up), numerical_error);
}

TEST_CASE("checkpoint round-trip is exact") {
    const MlpParams p = init_params(6, 9, 3, 77, Activation::tanh);
    const auto path = std::filesystem::temp_directory_path() / "ordent_ckpt.txt";
    save_params(p, path);
    const MlpParams q = load_params(path);
    CHECK(p == q);
    std::filesystem::remove(path);
}
