#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedad/matrix.hpp"

namespace fedad {

struct OcsvmConfig {
    double nu = 0.1;               // in (0,1]; bound on training-error / support-vector fractions
    double gamma = 0.0;            // RBF width; <= 0 selects the scale heuristic
    double tol = 1e-3;             // KKT violation tolerance
    std::size_t max_iter_factor = 200; // working-set selections = factor * n_train

    void validate() const;
};

// Trained nu-one-class SVM. Immutable after fit; safe to share across threads.
struct OcsvmModel {
    Matrix support_vectors;
    std::vector<double> alphas; // dual coefficients, sum to 1
    double rho = 0.0;
    double gamma = 0.0;
    double nu = 0.0;
    std::size_t n_train = 0;
    bool converged = true;
};

// exp(-gamma * ||x - y||^2), in (0,1].
double rbf_kernel(std::span<const double> x, std::span<const double> y, double gamma);

// 1/(n_features * variance of all matrix entries); falls back to
// 1/n_features on constant data.
double gamma_scale(const Matrix& train);

// Solves the nu-OCSVM dual (minimize 1/2 a'Ka subject to 0 <= a_i <= 1/(nu n),
// sum a_i = 1) by pairwise coordinate updates on the maximal KKT-violating
// pair, ties broken by lowest index. The solver is fully deterministic; the
// seed is carried for interface stability with stochastic backends.
OcsvmModel ocsvm_fit(const Matrix& train, const OcsvmConfig& cfg, std::uint64_t seed = 0);

// f(x) = sum_i alpha_i k(sv_i, x) - rho. Positive side = inlier.
double ocsvm_decision(const OcsvmModel& model, std::span<const double> x);

// 1 = inlier (decision >= 0), 0 = outlier. One label per row.
std::vector<std::uint8_t> ocsvm_predict(const OcsvmModel& model, const Matrix& data);

// Versioned binary blob; the model-exchange payload between clients.
void save_ocsvm(const OcsvmModel& model, const std::string& path);
OcsvmModel load_ocsvm(const std::string& path);

} // namespace fedad
