#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedad/matrix.hpp"

namespace fedad {

// Fully connected autoencoder, hidden topology 64-32-64: ReLU on the hidden
// layers, sigmoid on the output. weights[l] has shape dims[l] x dims[l+1]
// (row-major, activations as row vectors). The canonical flattening order is
// layer by layer, weights row-major then bias; aggregation and checkpoints
// both rely on it.
struct AeParams {
    std::vector<std::size_t> layer_dims; // [D, 64, 32, 64, D]
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> biases;

    std::size_t input_dim() const { return layer_dims.front(); }
    std::size_t parameter_count() const;
    bool same_shape(const AeParams& other) const;
};

// Glorot-uniform weights, zero biases.
AeParams ae_init(std::size_t input_dim, std::uint64_t seed,
                 const std::vector<std::size_t>& hidden = {64, 32, 64});

// Reconstruction of one sample; every component strictly inside (0,1).
std::vector<double> ae_forward(const AeParams& params, std::span<const double> x);

// Mean over the batch of the per-sample mean squared reconstruction error.
double ae_loss(const AeParams& params, const Matrix& batch);

// Exact gradient of ae_loss by reverse-mode accumulation. ReLU subgradient at
// zero is taken as zero.
AeParams ae_grad(const AeParams& params, const Matrix& batch);

// One pass over a seeded shuffle of the data in mini-batches; the final
// partial batch is included.
AeParams sgd_epoch(const AeParams& params, const Matrix& data, double lr,
                   std::size_t batch_size, std::uint64_t seed);

// Per-sample mean squared reconstruction error; higher = more anomalous.
// Equals ae_loss on the single-row batch exactly.
double anomaly_score(const AeParams& params, std::span<const double> x);

// Checkpoint: versioned binary, layer_dims header then the flat parameters as
// little-endian 64-bit floats in the canonical flattening order.
void save_ae(const AeParams& params, const std::string& path);
AeParams load_ae(const std::string& path);

} // namespace fedad
