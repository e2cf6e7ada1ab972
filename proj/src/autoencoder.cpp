#include "fedad/autoencoder.hpp"

#include <cmath>
#include <fstream>

#include "fedad/binio.hpp"
#include "fedad/errors.hpp"
#include "fedad/rng.hpp"

namespace fedad {

std::size_t AeParams::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
        n += layer_dims[l] * layer_dims[l + 1] + layer_dims[l + 1];
    }
    return n;
}

bool AeParams::same_shape(const AeParams& other) const {
    return layer_dims == other.layer_dims;
}

AeParams ae_init(std::size_t input_dim, std::uint64_t seed,
                 const std::vector<std::size_t>& hidden) {
    if (input_dim < 1) throw ConfigError("ae_init: input_dim must be >= 1");
    AeParams p;
    p.layer_dims.push_back(input_dim);
    for (std::size_t h : hidden) p.layer_dims.push_back(h);
    p.layer_dims.push_back(input_dim);

    Rng rng(derive_seed(seed, "ae_glorot"));
    for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
        const std::size_t fan_in = p.layer_dims[l], fan_out = p.layer_dims[l + 1];
        const double limit = std::sqrt(6.0 / double(fan_in + fan_out));
        Matrix w(fan_in, fan_out);
        for (double& v : w.data) v = rng.uniform(-limit, limit);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(fan_out, 0.0);
    }
    return p;
}

namespace {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void check_input(const AeParams& params, std::size_t dim) {
    if (dim != params.input_dim()) throw NumericError("autoencoder: dimension mismatch");
}

// Forward pass keeping every layer's activation; activations[0] is the input.
std::vector<std::vector<double>> forward_all(const AeParams& params,
                                             std::span<const double> x) {
    const std::size_t n_layers = params.weights.size();
    std::vector<std::vector<double>> acts(n_layers + 1);
    acts[0].assign(x.begin(), x.end());
    for (double v : acts[0]) {
        if (!std::isfinite(v)) throw NumericError("autoencoder: non-finite input");
    }
    for (std::size_t l = 0; l < n_layers; ++l) {
        const Matrix& w = params.weights[l];
        const std::vector<double>& b = params.biases[l];
        std::vector<double> z(w.cols, 0.0);
        for (std::size_t i = 0; i < w.rows; ++i) {
            const double a = acts[l][i];
            if (a == 0.0) continue;
            const double* wr = w.row(i);
            for (std::size_t j = 0; j < w.cols; ++j) z[j] += a * wr[j];
        }
        const bool output_layer = (l + 1 == n_layers);
        for (std::size_t j = 0; j < w.cols; ++j) {
            const double v = z[j] + b[j];
            z[j] = output_layer ? sigmoid(v) : (v > 0.0 ? v : 0.0);
        }
        acts[l + 1] = std::move(z);
    }
    return acts;
}

// Accumulates one sample's backward pass into grad, scaled by `scale`.
void backward_one(const AeParams& params, const std::vector<std::vector<double>>& acts,
                  double scale, AeParams& grad) {
    const std::size_t n_layers = params.weights.size();
    const std::size_t D = params.input_dim();
    const std::vector<double>& x = acts[0];
    const std::vector<double>& y = acts[n_layers];

    // dL/dz at the output: MSE through the sigmoid.
    std::vector<double> delta(D);
    for (std::size_t j = 0; j < D; ++j) {
        delta[j] = scale * (2.0 / double(D)) * (y[j] - x[j]) * y[j] * (1.0 - y[j]);
    }

    for (std::size_t l = n_layers; l-- > 0;) {
        const Matrix& w = params.weights[l];
        Matrix& gw = grad.weights[l];
        std::vector<double>& gb = grad.biases[l];
        const std::vector<double>& a_prev = acts[l];

        for (std::size_t j = 0; j < w.cols; ++j) gb[j] += delta[j];
        for (std::size_t i = 0; i < w.rows; ++i) {
            const double a = a_prev[i];
            if (a != 0.0) {
                double* gr = gw.row(i);
                for (std::size_t j = 0; j < w.cols; ++j) gr[j] += a * delta[j];
            }
        }
        if (l == 0) break;

        std::vector<double> prev_delta(w.rows, 0.0);
        for (std::size_t i = 0; i < w.rows; ++i) {
            if (a_prev[i] <= 0.0) continue; // ReLU gate, zero at 0
            const double* wr = w.row(i);
            double s = 0.0;
            for (std::size_t j = 0; j < w.cols; ++j) s += wr[j] * delta[j];
            prev_delta[i] = s;
        }
        delta = std::move(prev_delta);
    }
}

AeParams zero_like(const AeParams& params) {
    AeParams g;
    g.layer_dims = params.layer_dims;
    for (const Matrix& w : params.weights) g.weights.emplace_back(w.rows, w.cols);
    for (const auto& b : params.biases) g.biases.emplace_back(b.size(), 0.0);
    return g;
}

} // namespace

std::vector<double> ae_forward(const AeParams& params, std::span<const double> x) {
    check_input(params, x.size());
    return forward_all(params, x).back();
}

double ae_loss(const AeParams& params, const Matrix& batch) {
    if (batch.rows == 0) throw NumericError("ae_loss: empty batch");
    check_input(params, batch.cols);
    double total = 0.0;
    for (std::size_t i = 0; i < batch.rows; ++i) {
        const auto y = ae_forward(params, batch.row_span(i));
        double se = 0.0;
        for (std::size_t j = 0; j < batch.cols; ++j) {
            const double d = y[j] - batch.at(i, j);
            se += d * d;
        }
        total += se / double(batch.cols);
    }
    return total / double(batch.rows);
}

AeParams ae_grad(const AeParams& params, const Matrix& batch) {
    if (batch.rows == 0) throw NumericError("ae_grad: empty batch");
    check_input(params, batch.cols);
    AeParams grad = zero_like(params);
    const double scale = 1.0 / double(batch.rows);
    for (std::size_t i = 0; i < batch.rows; ++i) {
        const auto acts = forward_all(params, batch.row_span(i));
        backward_one(params, acts, scale, grad);
    }
    return grad;
}

AeParams sgd_epoch(const AeParams& params, const Matrix& data, double lr,
                   std::size_t batch_size, std::uint64_t seed) {
    if (data.rows == 0) throw NumericError("sgd_epoch: empty data");
    if (batch_size == 0) throw ConfigError("sgd_epoch: batch_size must be >= 1");
    check_input(params, data.cols);

    std::vector<std::size_t> order(data.rows);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(derive_seed(seed, "sgd_shuffle"));
    rng.shuffle(order);

    AeParams p = params;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        const std::size_t end = std::min(start + batch_size, order.size());
        Matrix batch(end - start, data.cols);
        for (std::size_t k = start; k < end; ++k) {
            std::copy_n(data.row(order[k]), data.cols, batch.row(k - start));
        }
        const AeParams g = ae_grad(p, batch);
        for (std::size_t l = 0; l < p.weights.size(); ++l) {
            for (std::size_t i = 0; i < p.weights[l].data.size(); ++i) {
                p.weights[l].data[i] -= lr * g.weights[l].data[i];
            }
            for (std::size_t i = 0; i < p.biases[l].size(); ++i) {
                p.biases[l][i] -= lr * g.biases[l][i];
            }
        }
    }
    return p;
}

double anomaly_score(const AeParams& params, std::span<const double> x) {
    check_input(params, x.size());
    const auto y = ae_forward(params, x);
    double se = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double d = y[j] - x[j];
        se += d * d;
    }
    return se / double(x.size());
}

namespace {
constexpr std::uint32_t kAeMagic = 0x50454146; // "FAEP"
constexpr std::uint32_t kAeVersion = 1;
} // namespace

void save_ae(const AeParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot create checkpoint file: " + path);
    binio::put_u32(out, kAeMagic);
    binio::put_u32(out, kAeVersion);
    binio::put_u32(out, std::uint32_t(params.layer_dims.size()));
    for (std::size_t d : params.layer_dims) binio::put_u64(out, d);
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        binio::put_f64_block(out, params.weights[l].data);
        binio::put_f64_block(out, params.biases[l]);
    }
    if (!out) throw DataError("failed writing checkpoint file: " + path);
}

AeParams load_ae(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint file: " + path);
    if (binio::get_u32(in, "ae magic") != kAeMagic) {
        throw DataError("not an autoencoder checkpoint: " + path);
    }
    if (binio::get_u32(in, "ae version") != kAeVersion) {
        throw DataError("unsupported checkpoint version in: " + path);
    }
    const std::uint32_t n_dims = binio::get_u32(in, "layer count");
    if (n_dims < 2) throw DataError("checkpoint holds fewer than 2 layer dims: " + path);
    AeParams p;
    for (std::uint32_t i = 0; i < n_dims; ++i) {
        p.layer_dims.push_back(binio::get_u64(in, "layer dim"));
    }
    for (std::size_t l = 0; l + 1 < p.layer_dims.size(); ++l) {
        Matrix w(p.layer_dims[l], p.layer_dims[l + 1]);
        binio::get_f64_block(in, w.data, "weights");
        p.weights.push_back(std::move(w));
        std::vector<double> b(p.layer_dims[l + 1]);
        binio::get_f64_block(in, b, "biases");
        p.biases.push_back(std::move(b));
    }
    return p;
}

} // namespace fedad
