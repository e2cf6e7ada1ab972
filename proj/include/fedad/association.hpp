#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fedad/matrix.hpp"
#include "fedad/ocsvm.hpp"

namespace fedad {

struct AssociationConfig {
    double q = 0.08; // association threshold on inlier-fraction difference

    // Warns (returns a message) when q leaves the recommended [0.01, 0.10]
    // band; the value is still accepted.
    std::string range_warning() const;
    void validate() const;
};

// One directed exchange: client `data_client` evaluated `model_client`'s model
// on its own data.
struct DirectedRecord {
    int model_client = 0;     // j in b_{j,i}
    int data_client = 0;      // i in b_{j,i}
    double inlier_frac = 0.0; // in_{j,i}
    bool bit = false;         // b_{j,i}
};

struct AssociationGraph {
    std::size_t n_nodes = 0;
    std::vector<std::pair<int, int>> edges;  // (min,max) pairs, sorted
    std::vector<DirectedRecord> records;     // kept for diagnostics

    bool has_edge(int a, int b) const;
    std::vector<std::vector<int>> adjacency() const;
};

// Fraction of inlier labels. Errors on an empty vector.
double inlier_fraction(const std::vector<std::uint8_t>& labels);

// True iff |in_other - in_self| <= q (both interval endpoints included).
bool association_bit(double in_self, double in_other, double q);

// One client's side of the exchange: cross-predict every peer model on the
// client's own features and record in_{j,i} and b_{j,i}. Missing peers are
// skipped (and noted on `warnings` when given). Label-free by construction:
// only features enter.
struct LocalAdResult {
    int self_id = 0;
    double in_self = 0.0;                 // in_{i,i}
    std::vector<DirectedRecord> records;  // one per reachable peer
};

LocalAdResult local_ad(int self_id, const Matrix& own_features, const OcsvmModel& own_model,
                       const std::map<int, const OcsvmModel*>& peer_models,
                       const AssociationConfig& cfg,
                       std::vector<std::string>* warnings = nullptr);

// Candidate set of client i once the reverse bits are known:
// { j : b_{j,i} AND b_{i,j} }.
std::set<int> candidate_set(const LocalAdResult& self,
                            const std::vector<LocalAdResult>& all);

// Undirected graph: edge (i,j) iff b_{j,i} AND b_{i,j}. Client ids must be
// 0..n-1. A missing directed bit counts as false (and is reported via
// `warnings` when given).
AssociationGraph build_graph(const std::vector<LocalAdResult>& all, std::size_t n_clients,
                             std::vector<std::string>* warnings = nullptr);

// Edge-list text: one "i j" pair per line.
void save_graph_edges(const AssociationGraph& graph, const std::string& path);
AssociationGraph load_graph_edges(const std::string& path, std::size_t n_nodes);

// Structured dump of the directed records (model, data, inlier_frac, bit).
void save_graph_records(const AssociationGraph& graph, const std::string& path);

} // namespace fedad
