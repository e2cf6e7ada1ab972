#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "fedad/autoencoder.hpp"
#include "fedad/matrix.hpp"

namespace fedad {

struct FedConfig {
    int rounds = 20;
    int local_epochs = 1;
    int batch_size = 32;
    double lr = 0.01;
    double client_fraction = 1.0; // in (0,1]

    void validate() const;
};

// One federation participant: a stable id (seed derivation and aggregation
// order key) and its local training matrix.
struct FedClient {
    int id = 0;
    const Matrix* data = nullptr;
};

struct ClientUpdate {
    AeParams params;
    std::size_t n_samples = 0;
};

// E local epochs of SGD from the global snapshot; n_samples is the row count
// of local_data and becomes the aggregation weight.
ClientUpdate client_update(const AeParams& global, const Matrix& local_data,
                           const FedConfig& cfg, std::uint64_t seed);

// Coordinatewise weighted mean, weights n_k / sum(n). Updates are summed in
// the order given; callers pass them in ascending client-id order.
AeParams aggregate(const std::vector<ClientUpdate>& updates);

struct FedRoundStat {
    int round = 0;
    double mean_client_loss = 0.0; // mean training loss of the updated local models
    double global_loss = 0.0;      // weighted loss of the aggregated model
};

// Full FedAvg simulation over one community. All seeds derive from
// (experiment_seed, round, client id) so the result depends only on the member
// set, never on the execution order or on which scheme asked for it. A
// singleton group therefore reproduces plain local training exactly.
AeParams run_federation(const std::vector<FedClient>& group, const FedConfig& cfg,
                        std::uint64_t experiment_seed,
                        std::vector<FedRoundStat>* log = nullptr);

} // namespace fedad
