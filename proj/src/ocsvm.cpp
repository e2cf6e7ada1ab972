#include "fedad/ocsvm.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "fedad/binio.hpp"
#include "fedad/errors.hpp"

namespace fedad {

void OcsvmConfig::validate() const {
    if (!(nu > 0.0 && nu <= 1.0)) throw ConfigError("nu must lie in (0,1]");
    if (tol <= 0.0) throw ConfigError("tol must be positive");
    if (max_iter_factor == 0) throw ConfigError("max_iter_factor must be positive");
}

double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma) {
    if (gamma <= 0.0) throw NumericError("rbf_kernel: gamma must be positive");
    return std::exp(-gamma * squared_distance(x, y));
}

double gamma_scale(const Matrix& train) {
    if (train.rows == 0 || train.cols == 0) throw NumericError("gamma_scale: empty matrix");
    // Variance of the flattened matrix, as the mainstream implementations
    // compute it; it includes the between-feature spread, which keeps the
    // kernel wide enough for cross-client generalization.
    double mean = 0.0;
    for (double v : train.data) mean += v;
    mean /= double(train.data.size());
    double var = 0.0;
    for (double v : train.data) var += (v - mean) * (v - mean);
    var /= double(train.data.size());
    if (var <= 0.0) return 1.0 / double(train.cols);
    return 1.0 / (double(train.cols) * var);
}

OcsvmModel ocsvm_fit(const Matrix& train, const OcsvmConfig& cfg, std::uint64_t /*seed*/) {
    cfg.validate();
    const std::size_t n = train.rows;
    if (n < 2) throw DataError("ocsvm_fit: need at least 2 training samples");

    const double gamma = cfg.gamma > 0.0 ? cfg.gamma : gamma_scale(train);
    const double C = 1.0 / (cfg.nu * double(n)); // upper box bound per alpha

    // Full Gram matrix; training sets here are small by construction.
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        K[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double k = rbf_kernel(train.row_span(i), train.row_span(j), gamma);
            K[i * n + j] = k;
            K[j * n + i] = k;
        }
    }

    // Feasible start: the first floor(nu*n) points take the upper bound, the
    // next one the remainder, so that sum(alpha) = 1.
    std::vector<double> alpha(n, 0.0);
    const auto n_full = static_cast<std::size_t>(cfg.nu * double(n));
    double assigned = 0.0;
    for (std::size_t i = 0; i < n_full && i < n; ++i) {
        alpha[i] = C;
        assigned += C;
    }
    if (n_full < n && assigned < 1.0) alpha[n_full] = 1.0 - assigned;

    // Gradient of 1/2 a'Ka is g = Ka.
    std::vector<double> g(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        if (alpha[j] == 0.0) continue;
        const double aj = alpha[j];
        const double* Kj = K.data() + j * n;
        for (std::size_t k = 0; k < n; ++k) g[k] += aj * Kj[k];
    }

    const std::size_t max_iter = cfg.max_iter_factor * n;
    const double box_eps = 1e-12 * C;
    bool converged = false;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        // Maximal violating pair: i can grow (alpha_i < C) with minimal
        // gradient, j can shrink (alpha_j > 0) with maximal gradient.
        std::size_t i = n, j = n;
        double gi = std::numeric_limits<double>::infinity();
        double gj = -std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            if (alpha[k] < C - box_eps && g[k] < gi) {
                gi = g[k];
                i = k;
            }
            if (alpha[k] > box_eps && g[k] > gj) {
                gj = g[k];
                j = k;
            }
        }
        if (i == n || j == n || gj - gi <= cfg.tol) {
            converged = true;
            break;
        }

        double eta = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
        if (eta <= 1e-12) eta = 1e-12;
        double t = (gj - gi) / eta;
        t = std::min(t, C - alpha[i]);
        t = std::min(t, alpha[j]);
        alpha[i] += t;
        alpha[j] -= t;

        const double* Ki = K.data() + i * n;
        const double* Kj = K.data() + j * n;
        for (std::size_t k = 0; k < n; ++k) g[k] += t * (Ki[k] - Kj[k]);
    }

    // rho from KKT: free SVs satisfy g = rho; otherwise take the midpoint of
    // the feasible interval.
    double rho;
    {
        double free_sum = 0.0;
        std::size_t free_count = 0;
        double lb = -std::numeric_limits<double>::infinity();
        double ub = std::numeric_limits<double>::infinity();
        for (std::size_t k = 0; k < n; ++k) {
            if (alpha[k] > box_eps && alpha[k] < C - box_eps) {
                free_sum += g[k];
                ++free_count;
            } else if (alpha[k] >= C - box_eps) {
                lb = std::max(lb, g[k]);
            } else {
                ub = std::min(ub, g[k]);
            }
        }
        if (free_count > 0) {
            rho = free_sum / double(free_count);
        } else if (std::isfinite(lb) && std::isfinite(ub)) {
            rho = 0.5 * (lb + ub);
        } else {
            rho = std::isfinite(lb) ? lb : ub;
        }
    }

    OcsvmModel model;
    model.gamma = gamma;
    model.nu = cfg.nu;
    model.rho = rho;
    model.n_train = n;
    model.converged = converged;
    model.support_vectors = Matrix(0, train.cols);
    for (std::size_t k = 0; k < n; ++k) {
        if (alpha[k] > box_eps) {
            model.support_vectors.push_row(train.row_span(k));
            model.alphas.push_back(alpha[k]);
        }
    }
    return model;
}

double ocsvm_decision(const OcsvmModel& model, std::span<const double> x) {
    if (x.size() != model.support_vectors.cols) {
        throw NumericError("ocsvm_decision: dimension mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < model.support_vectors.rows; ++i) {
        s += model.alphas[i] * rbf_kernel(model.support_vectors.row_span(i), x, model.gamma);
    }
    return s - model.rho;
}

std::vector<std::uint8_t> ocsvm_predict(const OcsvmModel& model, const Matrix& data) {
    std::vector<std::uint8_t> labels(data.rows);
    for (std::size_t i = 0; i < data.rows; ++i) {
        labels[i] = ocsvm_decision(model, data.row_span(i)) >= 0.0 ? 1 : 0;
    }
    return labels;
}

namespace {
constexpr std::uint32_t kOcsvmMagic = 0x53434F46; // "FOCS"
constexpr std::uint32_t kOcsvmVersion = 1;
} // namespace

void save_ocsvm(const OcsvmModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot create model file: " + path);
    binio::put_u32(out, kOcsvmMagic);
    binio::put_u32(out, kOcsvmVersion);
    binio::put_u64(out, model.support_vectors.rows);
    binio::put_u64(out, model.support_vectors.cols);
    binio::put_f64(out, model.gamma);
    binio::put_f64(out, model.nu);
    binio::put_f64(out, model.rho);
    binio::put_u64(out, model.n_train);
    binio::put_u32(out, model.converged ? 1 : 0);
    binio::put_f64_block(out, model.alphas);
    binio::put_f64_block(out, model.support_vectors.data);
    if (!out) throw DataError("failed writing model file: " + path);
}

OcsvmModel load_ocsvm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file: " + path);
    if (binio::get_u32(in, "ocsvm magic") != kOcsvmMagic) {
        throw DataError("not an OCSVM model file: " + path);
    }
    if (binio::get_u32(in, "ocsvm version") != kOcsvmVersion) {
        throw DataError("unsupported OCSVM model version in: " + path);
    }
    OcsvmModel model;
    const std::uint64_t rows = binio::get_u64(in, "sv rows");
    const std::uint64_t cols = binio::get_u64(in, "sv cols");
    model.gamma = binio::get_f64(in, "gamma");
    model.nu = binio::get_f64(in, "nu");
    model.rho = binio::get_f64(in, "rho");
    model.n_train = binio::get_u64(in, "n_train");
    model.converged = binio::get_u32(in, "converged") != 0;
    model.alphas.resize(rows);
    binio::get_f64_block(in, model.alphas, "alphas");
    model.support_vectors = Matrix(rows, cols);
    binio::get_f64_block(in, model.support_vectors.data, "support vectors");
    return model;
}

} // namespace fedad
