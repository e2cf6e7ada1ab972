#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedad/matrix.hpp"

namespace fedad {

// A labeled pool of samples. Labels are hidden from phase-I/II logic and feed
// only partitioning (as the generator of inlier/outlier splits) and evaluation.
struct LabeledDataset {
    Matrix features;             // values in [0,1]
    std::vector<int> labels;     // class id per row
    std::vector<int> class_ids;  // sorted distinct classes present
    std::size_t image_rows = 0;  // 0 when the data is not image-shaped
    std::size_t image_cols = 0;

    void validate() const; // throws DataError on broken invariants
};

struct PartitionConfig {
    int p = 5;                         // clients per inlier class
    double d = 0.10;                   // contamination fraction, in (0, 0.5)
    std::vector<int> selected_classes; // empty = all classes of the dataset
    std::size_t samples_per_client = 0; // 0 = no cap; otherwise ~cap rows per client
    std::uint64_t seed = 0;

    void validate() const; // throws ConfigError
};

// m_{c,j}: the j-th client whose inlier class is c.
struct ClientId {
    int inlier_class = 0;
    int index = 0;

    std::string label() const; // "m_<class>_<index>"
    friend auto operator<=>(const ClientId&, const ClientId&) = default;
};

struct ClientDataset {
    ClientId id;
    Matrix train;
    std::vector<std::uint8_t> truth; // 1 = outlier, 0 = inlier; evaluation only
    int inlier_class = 0;
    int outlier_class = 0;
    std::vector<std::size_t> source_rows; // rows of the source dataset, for disjointness audits
};

struct TestSet {
    Matrix features;
    std::vector<std::uint8_t> truth; // 1 = outlier
};

// Gaussian pattern per class: distinct centers at pairwise distance >= separation,
// per-dimension noise sigma, all values clamped to [0,1].
LabeledDataset synth_patterns(int n_classes, int n_per_class, int n_features,
                              double separation, double noise_sigma, std::uint64_t seed);

// Split a labeled pool into per-client contaminated training sets.
// Every selected class c is shared by p clients as their inlier class; outlier
// classes cycle through the remaining classes within each group. All clients'
// rows are globally disjoint.
std::vector<ClientDataset> partition_clients(const LabeledDataset& dataset,
                                             const PartitionConfig& cfg);

// Per-client test sets drawn from a held-out pool with the client's own
// inlier/outlier classes and the same contamination d. Sampling is without
// replacement within one client's test set.
std::vector<TestSet> make_test_sets(const LabeledDataset& test_pool,
                                    const std::vector<ClientDataset>& clients,
                                    double d, std::size_t per_client, std::uint64_t seed);

// Average pooling over factor x factor blocks of image-shaped data.
LabeledDataset avg_pool(const LabeledDataset& dataset, int factor);

} // namespace fedad
