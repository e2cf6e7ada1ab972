#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedad/association.hpp"

namespace fedad {

// Disjoint groups covering all nodes 0..n-1. Groups hold sorted member ids and
// are ordered by smallest member; singletons are allowed.
struct CommunityPartition {
    std::vector<std::vector<int>> groups;
    std::vector<int> assignment; // node -> group index

    static CommunityPartition from_assignment(const std::vector<int>& labels);
    void validate() const;
};

enum class CommunityBackend { Louvain, LabelProp };

// Greedy modularity maximization (local moves + coarsening to a fixed point)
// or seeded label propagation. Deterministic for a fixed seed; isolated nodes
// end up as singletons.
CommunityPartition detect_communities(const AssociationGraph& graph, std::uint64_t seed,
                                      CommunityBackend backend = CommunityBackend::Louvain,
                                      double resolution = 1.0);

// Chance-corrected pair-counting agreement of two labelings over the same nodes.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

struct ConfusionCell {
    int found_group = 0;
    int ideal_group = 0;
    int count = 0;
};

struct PartitionMetrics {
    double ari = 0.0;
    bool exact_match = false;
    std::vector<ConfusionCell> confusion;
};

PartitionMetrics partition_metrics(const CommunityPartition& found,
                                   const CommunityPartition& ideal);

// Text format: one "group <k>: <sorted member ids>" line per group, preceded
// by a checksum header so hand-edited files can be told apart.
void save_partition(const CommunityPartition& partition, const std::string& path);

struct LoadedPartition {
    CommunityPartition partition;
    bool internal_provenance = false; // checksum intact
};

LoadedPartition load_partition(const std::string& path, std::size_t n_nodes);

} // namespace fedad
