#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedad/autoencoder.hpp"
#include "fedad/community.hpp"
#include "fedad/dataset.hpp"

namespace fedad {

// Probability that a random positive outranks a random negative, ties counted
// half: rank summation with average ranks. Truth uses 1 = positive = outlier.
double roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& truth);

struct SchemeResult {
    std::string scheme;                   // "local", "community" or "ideal"
    std::map<int, double> per_client_auc; // flat client id -> AUC
    double mean = 0.0;
    double std_dev = 0.0; // population standard deviation
};

// Per-client AUC of anomaly_score on each client's own test set under the
// given model assignment.
SchemeResult evaluate_scheme(const std::vector<ClientDataset>& clients,
                             const std::vector<TestSet>& test_sets,
                             const std::map<int, const AeParams*>& model_for_client,
                             const std::string& scheme);

struct BreakdownRow {
    int inlier_class = 0;
    std::string scheme;
    double mean = 0.0;
    double std_dev = 0.0;
    int n_clients = 0;
};

// Rows restricted to inlier classes whose detected community differs from the
// ideal group; empty when the partitions match exactly.
std::vector<BreakdownRow> breakdown_by_inlier(const std::vector<SchemeResult>& results,
                                              const std::vector<ClientDataset>& clients,
                                              const CommunityPartition& found,
                                              const CommunityPartition& ideal);

// Per-client counts of training rows by original class.
std::vector<std::map<int, int>> class_histograms(const std::vector<ClientDataset>& clients);

// Mean and population standard deviation.
std::pair<double, double> mean_std(const std::vector<double>& values);

} // namespace fedad
