#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>

#include "fedad/autoencoder.hpp"
#include "fedad/errors.hpp"
#include "fedad/rng.hpp"

using namespace fedad;

namespace {

Matrix random_batch(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, dim);
    for (double& v : m.data) v = rng.uniform();
    return m;
}

std::vector<double*> flat_params(AeParams& p) {
    std::vector<double*> out;
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        for (double& v : p.weights[l].data) out.push_back(&v);
        for (double& v : p.biases[l]) out.push_back(&v);
    }
    return out;
}

} // namespace

TEST_CASE("init shapes, parameter count and determinism") {
    const AeParams p = ae_init(784, 3);
    CHECK(p.layer_dims == std::vector<std::size_t>{784, 64, 32, 64, 784});
    CHECK(p.parameter_count() ==
          784 * 64 + 64 + 64 * 32 + 32 + 32 * 64 + 64 + 64 * 784 + 784);

    for (const auto& b : p.biases) {
        for (double v : b) CHECK(v == 0.0);
    }
    // Glorot bounds per layer.
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        const double limit =
            std::sqrt(6.0 / double(p.layer_dims[l] + p.layer_dims[l + 1]));
        for (double v : p.weights[l].data) {
            CHECK(std::abs(v) <= limit);
        }
    }

    const AeParams q = ae_init(784, 3);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        CHECK(p.weights[l].data == q.weights[l].data);
    }
}

TEST_CASE("forward: zero parameters give 0.5 outputs inside (0,1)") {
    AeParams p = ae_init(6, 1, {4, 3, 4});
    for (auto& w : p.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    const std::vector<double> x{0.1, 0.9, 0.3, 0.5, 0.0, 1.0};
    const auto y = ae_forward(p, x);
    REQUIRE(y.size() == 6);
    for (double v : y) CHECK(v == doctest::Approx(0.5));

    const AeParams r = ae_init(6, 2, {4, 3, 4});
    for (double v : ae_forward(r, x)) {
        CHECK(v > 0.0);
        CHECK(v < 1.0);
    }
    CHECK(ae_forward(r, x) == ae_forward(r, x)); // no stochastic layers

    const std::vector<double> wrong{0.1, 0.2};
    CHECK_THROWS_AS(ae_forward(r, wrong), NumericError);
    std::vector<double> inf_x = x;
    inf_x[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(ae_forward(r, inf_x), NumericError);
}

TEST_CASE("loss: closed-form zero cases and nonnegativity") {
    AeParams p = ae_init(4, 1, {3, 2, 3});
    for (auto& w : p.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    Matrix half(2, 4, 0.5);
    CHECK(ae_loss(p, half) == doctest::Approx(0.0));

    const AeParams r = ae_init(4, 5, {3, 2, 3});
    const Matrix batch = random_batch(8, 4, 9);
    CHECK(ae_loss(r, batch) >= 0.0);
    CHECK_THROWS_AS(ae_loss(r, Matrix(0, 4)), NumericError);

    // anomaly_score equals the single-row loss exactly.
    for (std::size_t i = 0; i < batch.rows; ++i) {
        Matrix one(1, 4);
        std::copy_n(batch.row(i), 4, one.row(0));
        CHECK(anomaly_score(r, batch.row_span(i)) == ae_loss(r, one));
    }
}

TEST_CASE("gradient matches central finite differences") {
    AeParams p = ae_init(5, 11, {4, 3, 4});
    const Matrix batch = random_batch(3, 5, 13);
    const AeParams g = ae_grad(p, batch);

    AeParams probe = p;
    auto params = flat_params(probe);
    AeParams g_copy = g;
    auto grads = flat_params(g_copy);
    REQUIRE(params.size() == grads.size());

    const double h = 1e-5;
    double max_rel = 0.0;
    for (std::size_t k = 0; k < params.size(); ++k) {
        const double orig = *params[k];
        *params[k] = orig + h;
        const double up = ae_loss(probe, batch);
        *params[k] = orig - h;
        const double down = ae_loss(probe, batch);
        *params[k] = orig;
        const double fd = (up - down) / (2.0 * h);
        const double rel =
            std::abs(*grads[k] - fd) / std::max(1e-8, std::abs(*grads[k]) + std::abs(fd));
        max_rel = std::max(max_rel, rel);
    }
    CHECK(max_rel < 1e-4);
}

TEST_CASE("gradient of a dead ReLU layer is zero") {
    AeParams p = ae_init(4, 17, {3, 2, 3});
    // Large negative biases kill every unit of the first hidden layer.
    for (double& b : p.biases[0]) b = -100.0;
    const Matrix batch = random_batch(4, 4, 19);
    const AeParams g = ae_grad(p, batch);
    for (double v : g.weights[0].data) CHECK(v == 0.0);
    for (double v : g.biases[0]) CHECK(v == 0.0);
}

TEST_CASE("gradient is invariant under batch duplication") {
    const AeParams p = ae_init(5, 23, {4, 2, 4});
    const Matrix batch = random_batch(3, 5, 29);
    Matrix doubled(0, 5);
    for (std::size_t i = 0; i < batch.rows; ++i) doubled.push_row(batch.row_span(i));
    for (std::size_t i = 0; i < batch.rows; ++i) doubled.push_row(batch.row_span(i));

    const AeParams a = ae_grad(p, batch);
    const AeParams b = ae_grad(p, doubled);
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        for (std::size_t i = 0; i < a.weights[l].data.size(); ++i) {
            CHECK(a.weights[l].data[i] == doctest::Approx(b.weights[l].data[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("sgd_epoch stepping, determinism and shape preservation") {
    const AeParams p = ae_init(6, 31, {4, 2, 4});
    const Matrix data = random_batch(10, 6, 37);

    SUBCASE("lr = 0 leaves parameters untouched") {
        const AeParams q = sgd_epoch(p, data, 0.0, 4, 5);
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            CHECK(q.weights[l].data == p.weights[l].data);
            CHECK(q.biases[l] == p.biases[l]);
        }
    }
    SUBCASE("one sample and batch 1 is exactly one gradient step") {
        Matrix one(1, 6);
        std::copy_n(data.row(0), 6, one.row(0));
        const AeParams q = sgd_epoch(p, one, 0.1, 1, 5);
        const AeParams g = ae_grad(p, one);
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            for (std::size_t i = 0; i < p.weights[l].data.size(); ++i) {
                CHECK(q.weights[l].data[i] ==
                      doctest::Approx(p.weights[l].data[i] - 0.1 * g.weights[l].data[i])
                          .epsilon(1e-15));
            }
        }
    }
    SUBCASE("same seed, same bits; shapes and finiteness preserved") {
        const AeParams a = sgd_epoch(p, data, 0.05, 3, 11);
        const AeParams b = sgd_epoch(p, data, 0.05, 3, 11);
        CHECK(a.layer_dims == p.layer_dims);
        for (std::size_t l = 0; l < a.weights.size(); ++l) {
            CHECK(a.weights[l].data == b.weights[l].data);
            for (double v : a.weights[l].data) CHECK(std::isfinite(v));
        }
    }
}

TEST_CASE("training a single repeated sample drives its error down") {
    AeParams p = ae_init(8, 41, {6, 3, 6});
    Matrix one = random_batch(1, 8, 43);
    double prev = ae_loss(p, one);
    for (int epoch = 0; epoch < 50; ++epoch) {
        p = sgd_epoch(p, one, 0.05, 1, std::uint64_t(epoch));
        const double now = ae_loss(p, one);
        CHECK(now <= prev + 1e-6);
        prev = now;
    }
}

TEST_CASE("training on one pattern scores a foreign pattern higher") {
    Rng rng(61);
    std::vector<double> center_a(12), center_b(12);
    for (std::size_t f = 0; f < 12; ++f) {
        center_a[f] = rng.uniform(0.2, 0.8);
        center_b[f] = rng.uniform(0.2, 0.8);
    }
    auto sample = [&](const std::vector<double>& c) {
        std::vector<double> x(12);
        for (std::size_t f = 0; f < 12; ++f) {
            const double v = c[f] + rng.normal(0.0, 0.04);
            x[f] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        }
        return x;
    };
    Matrix train(0, 12);
    for (int i = 0; i < 120; ++i) train.push_row(sample(center_a));

    AeParams model = ae_init(12, 67, {8, 4, 8});
    for (int e = 0; e < 60; ++e) {
        model = sgd_epoch(model, train, 0.05, 16, std::uint64_t(e));
    }
    double held_out_a = 0.0, foreign_b = 0.0;
    for (int i = 0; i < 100; ++i) held_out_a += anomaly_score(model, sample(center_a));
    for (int i = 0; i < 100; ++i) foreign_b += anomaly_score(model, sample(center_b));
    CHECK(foreign_b / 100.0 > held_out_a / 100.0);
}

TEST_CASE("checkpoints round trip bit-exactly") {
    const AeParams p = ae_init(12, 47);
    const auto path = (std::filesystem::temp_directory_path() / "fedad_ae.bin").string();
    save_ae(p, path);
    const AeParams r = load_ae(path);
    CHECK(r.layer_dims == p.layer_dims);
    for (std::size_t l = 0; l < p.weights.size(); ++l) {
        CHECK(r.weights[l].data == p.weights[l].data);
        CHECK(r.biases[l] == p.biases[l]);
    }
}
