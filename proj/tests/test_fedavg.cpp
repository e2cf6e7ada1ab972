#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "fedad/errors.hpp"
#include "fedad/fedavg.hpp"
#include "fedad/rng.hpp"

using namespace fedad;

namespace {

Matrix random_batch(std::size_t rows, std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(rows, dim);
    for (double& v : m.data) v = rng.uniform();
    return m;
}

// Single-parameter model: one 1x1 weight and one bias.
AeParams scalar_params(double w, double b) {
    AeParams p;
    p.layer_dims = {1, 1};
    p.weights.emplace_back(1, 1, w);
    p.biases.push_back({b});
    return p;
}

} // namespace

TEST_CASE("aggregate is the weighted coordinatewise mean") {
    SUBCASE("equal weights average plainly") {
        const AeParams m = aggregate({{scalar_params(1, 3), 10}, {scalar_params(3, 5), 10}});
        CHECK(m.weights[0].at(0, 0) == doctest::Approx(2.0));
        CHECK(m.biases[0][0] == doctest::Approx(4.0));
    }
    SUBCASE("a single update passes through exactly") {
        const AeParams src = scalar_params(0.123456789, -7.5);
        const AeParams m = aggregate({{src, 42}});
        CHECK(m.weights[0].at(0, 0) == src.weights[0].at(0, 0));
        CHECK(m.biases[0][0] == src.biases[0][0]);
    }
    SUBCASE("weights 3:1 on scalars 0 and 4 give 1") {
        const AeParams m = aggregate({{scalar_params(0, 0), 3}, {scalar_params(4, 4), 1}});
        CHECK(m.weights[0].at(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("shape mismatch and empty list are errors") {
        AeParams other;
        other.layer_dims = {2, 2};
        other.weights.emplace_back(2, 2, 0.0);
        other.biases.push_back({0.0, 0.0});
        CHECK_THROWS_AS(aggregate({{scalar_params(0, 0), 1}, {other, 1}}), NumericError);
        CHECK_THROWS_AS(aggregate({}), NumericError);
    }
}

TEST_CASE("aggregated coordinates stay inside the per-coordinate min/max") {
    Rng rng(71);
    std::vector<ClientUpdate> updates;
    for (int k = 0; k < 5; ++k) {
        updates.push_back({scalar_params(rng.uniform(-2, 2), rng.uniform(-2, 2)),
                           std::size_t(1 + rng.uniform_index(20))});
    }
    const AeParams m = aggregate(updates);
    auto bounds = [&](auto take) {
        double lo = 1e9, hi = -1e9;
        for (const auto& u : updates) {
            lo = std::min(lo, take(u.params));
            hi = std::max(hi, take(u.params));
        }
        return std::pair(lo, hi);
    };
    const auto [wlo, whi] = bounds([](const AeParams& p) { return p.weights[0].at(0, 0); });
    CHECK(m.weights[0].at(0, 0) >= wlo - 1e-12);
    CHECK(m.weights[0].at(0, 0) <= whi + 1e-12);
    const auto [blo, bhi] = bounds([](const AeParams& p) { return p.biases[0][0]; });
    CHECK(m.biases[0][0] >= blo - 1e-12);
    CHECK(m.biases[0][0] <= bhi + 1e-12);
}

TEST_CASE("client_update runs E epochs and reports the sample count") {
    const Matrix data = random_batch(12, 5, 3);
    const AeParams global = ae_init(5, 1, {4, 2, 4});
    FedConfig cfg;
    cfg.local_epochs = 2;
    cfg.batch_size = 4;

    const ClientUpdate u = client_update(global, data, cfg, 77);
    CHECK(u.n_samples == 12);

    // Same seed and data reproduce the update bit for bit.
    const ClientUpdate v = client_update(global, data, cfg, 77);
    for (std::size_t l = 0; l < u.params.weights.size(); ++l) {
        CHECK(u.params.weights[l].data == v.params.weights[l].data);
    }

    // lr = 0 leaves the global parameters unchanged.
    FedConfig frozen = cfg;
    frozen.lr = 0.0;
    const ClientUpdate w = client_update(global, data, frozen, 77);
    for (std::size_t l = 0; l < global.weights.size(); ++l) {
        CHECK(w.params.weights[l].data == global.weights[l].data);
    }
}

TEST_CASE("federation result ignores the order the group is listed in") {
    const Matrix d0 = random_batch(10, 4, 11);
    const Matrix d1 = random_batch(14, 4, 13);
    const Matrix d2 = random_batch(8, 4, 17);
    FedConfig cfg;
    cfg.rounds = 3;

    const std::vector<FedClient> a{{0, &d0}, {1, &d1}, {2, &d2}};
    const std::vector<FedClient> b{{2, &d2}, {0, &d0}, {1, &d1}};
    const AeParams ma = run_federation(a, cfg, 5);
    const AeParams mb = run_federation(b, cfg, 5);
    for (std::size_t l = 0; l < ma.weights.size(); ++l) {
        CHECK(ma.weights[l].data == mb.weights[l].data);
        CHECK(ma.biases[l] == mb.biases[l]);
    }
}

TEST_CASE("one full-batch round with identical data equals a centralized step") {
    const Matrix data = random_batch(16, 6, 23);
    FedConfig cfg;
    cfg.rounds = 1;
    cfg.local_epochs = 1;
    cfg.batch_size = int(data.rows); // full batch
    cfg.lr = 0.05;

    const std::vector<FedClient> group{{0, &data}, {1, &data}, {2, &data}};
    const AeParams fed = run_federation(group, cfg, 31);

    // Independent route: plain gradient step from the same init.
    const AeParams init = ae_init(data.cols, derive_seed(31, "ae_init"));
    const AeParams g = ae_grad(init, data);
    for (std::size_t l = 0; l < fed.weights.size(); ++l) {
        for (std::size_t i = 0; i < fed.weights[l].data.size(); ++i) {
            const double want = init.weights[l].data[i] - cfg.lr * g.weights[l].data[i];
            CHECK(std::abs(fed.weights[l].data[i] - want) < 1e-10);
        }
        for (std::size_t i = 0; i < fed.biases[l].size(); ++i) {
            const double want = init.biases[l][i] - cfg.lr * g.biases[l][i];
            CHECK(std::abs(fed.biases[l][i] - want) < 1e-10);
        }
    }
}

TEST_CASE("training reduces the loss and the log records every round") {
    const Matrix d0 = random_batch(20, 5, 41);
    const Matrix d1 = random_batch(20, 5, 43);
    FedConfig cfg;
    cfg.rounds = 10;
    cfg.lr = 0.05;

    std::vector<FedRoundStat> log;
    const AeParams model = run_federation({{0, &d0}, {1, &d1}}, cfg, 47, &log);
    REQUIRE(log.size() == 10);
    for (std::size_t r = 0; r < log.size(); ++r) CHECK(log[r].round == int(r));

    const AeParams init = ae_init(5, derive_seed(47, "ae_init"));
    const double before = (ae_loss(init, d0) + ae_loss(init, d1)) / 2.0;
    const double after = (ae_loss(model, d0) + ae_loss(model, d1)) / 2.0;
    CHECK(after < before - 1e-6);
}

TEST_CASE("config validation rejects degenerate setups") {
    FedConfig cfg;
    cfg.rounds = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = FedConfig{};
    cfg.local_epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = FedConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = FedConfig{};
    cfg.client_fraction = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = FedConfig{};
    cfg.client_fraction = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    CHECK_THROWS_AS(run_federation({}, FedConfig{}, 1), NumericError);
}

TEST_CASE("partial participation selects a deterministic subset per round") {
    const Matrix d0 = random_batch(10, 4, 51);
    const Matrix d1 = random_batch(10, 4, 53);
    const Matrix d2 = random_batch(10, 4, 57);
    const Matrix d3 = random_batch(10, 4, 59);
    FedConfig cfg;
    cfg.rounds = 4;
    cfg.client_fraction = 0.5;

    const std::vector<FedClient> group{{0, &d0}, {1, &d1}, {2, &d2}, {3, &d3}};
    const AeParams a = run_federation(group, cfg, 61);
    const AeParams b = run_federation(group, cfg, 61);
    for (std::size_t l = 0; l < a.weights.size(); ++l) {
        CHECK(a.weights[l].data == b.weights[l].data);
    }
}
