#include "fedad/community.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fedad/errors.hpp"
#include "fedad/rng.hpp"

namespace fedad {

CommunityPartition CommunityPartition::from_assignment(const std::vector<int>& labels) {
    std::map<int, std::vector<int>> by_label;
    for (std::size_t v = 0; v < labels.size(); ++v) by_label[labels[v]].push_back(int(v));

    std::vector<std::vector<int>> groups;
    for (auto& [label, members] : by_label) {
        std::sort(members.begin(), members.end());
        groups.push_back(std::move(members));
    }
    std::sort(groups.begin(), groups.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });

    CommunityPartition out;
    out.assignment.resize(labels.size());
    for (std::size_t g = 0; g < groups.size(); ++g) {
        for (int v : groups[g]) out.assignment[v] = int(g);
    }
    out.groups = std::move(groups);
    return out;
}

void CommunityPartition::validate() const {
    std::size_t total = 0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw NumericError("partition holds an empty group");
        for (int v : groups[g]) {
            if (v < 0 || std::size_t(v) >= assignment.size() || assignment[v] != int(g)) {
                throw NumericError("partition assignment inconsistent with groups");
            }
        }
        total += groups[g].size();
    }
    if (total != assignment.size()) throw NumericError("partition does not cover all nodes");
}

namespace {

// Weighted multigraph for the coarsening levels.
struct LevelGraph {
    std::size_t n = 0;
    std::vector<std::map<int, double>> adj; // neighbor -> weight, no self entries
    std::vector<double> self_loop;          // internal weight, counted once
    std::vector<double> degree;             // k_v; self loops count twice
    double total_weight = 0.0;              // m
};

std::vector<int> louvain_level(const LevelGraph& g, double resolution, Rng& rng) {
    std::vector<int> comm(g.n);
    std::vector<double> sigma_tot(g.n);
    for (std::size_t v = 0; v < g.n; ++v) {
        comm[v] = int(v);
        sigma_tot[v] = g.degree[v];
    }

    std::vector<std::size_t> order(g.n);
    for (std::size_t v = 0; v < g.n; ++v) order[v] = v;
    rng.shuffle(order);

    const double m = g.total_weight;
    bool improved = true;
    while (improved) {
        improved = false;
        for (std::size_t v : order) {
            const int c_old = comm[v];
            sigma_tot[c_old] -= g.degree[v];

            // Weight from v to each neighboring community (c_old included).
            std::map<int, double> w_to;
            w_to[c_old] += 0.0;
            for (const auto& [u, w] : g.adj[v]) w_to[comm[u]] += w;

            int best = c_old;
            double best_gain = w_to[c_old] - resolution * g.degree[v] * sigma_tot[c_old] / (2.0 * m);
            for (const auto& [c, w] : w_to) {
                const double gain = w - resolution * g.degree[v] * sigma_tot[c] / (2.0 * m);
                if (gain > best_gain + 1e-12 ||
                    (std::abs(gain - best_gain) <= 1e-12 && c < best)) {
                    best = c;
                    best_gain = gain;
                }
            }
            sigma_tot[best] += g.degree[v];
            if (best != c_old) {
                comm[v] = best;
                improved = true;
            }
        }
    }
    return comm;
}

} // namespace

CommunityPartition detect_communities(const AssociationGraph& graph, std::uint64_t seed,
                                      CommunityBackend backend, double resolution) {
    const std::size_t n = graph.n_nodes;
    if (n == 0) return CommunityPartition{};
    if (resolution <= 0.0) throw ConfigError("community resolution must be positive");

    std::vector<int> labels(n);
    for (std::size_t v = 0; v < n; ++v) labels[v] = int(v);
    if (graph.edges.empty()) return CommunityPartition::from_assignment(labels);

    if (backend == CommunityBackend::LabelProp) {
        auto adj = graph.adjacency();
        std::vector<std::size_t> order(n);
        for (std::size_t v = 0; v < n; ++v) order[v] = v;
        Rng rng(derive_seed(seed, "labelprop_order"));
        rng.shuffle(order);
        for (int pass = 0; pass < 100; ++pass) {
            bool changed = false;
            for (std::size_t v : order) {
                if (adj[v].empty()) continue;
                std::map<int, int> votes;
                for (int u : adj[v]) ++votes[labels[u]];
                int best = labels[v], best_count = 0;
                for (const auto& [lab, cnt] : votes) {
                    if (cnt > best_count || (cnt == best_count && lab < best)) {
                        best = lab;
                        best_count = cnt;
                    }
                }
                if (best != labels[v]) {
                    labels[v] = best;
                    changed = true;
                }
            }
            if (!changed) break;
        }
        return CommunityPartition::from_assignment(labels);
    }

    // Louvain: local moves then coarsening, repeated until stable.
    LevelGraph g;
    g.n = n;
    g.adj.resize(n);
    g.self_loop.assign(n, 0.0);
    g.degree.assign(n, 0.0);
    for (const auto& [a, b] : graph.edges) {
        g.adj[a][b] += 1.0;
        g.adj[b][a] += 1.0;
        g.degree[a] += 1.0;
        g.degree[b] += 1.0;
        g.total_weight += 1.0;
    }

    std::vector<int> node_to_comm(n);
    for (std::size_t v = 0; v < n; ++v) node_to_comm[v] = int(v);

    for (int level = 0;; ++level) {
        Rng rng(derive_seed(seed, "louvain_order", std::uint64_t(level)));
        std::vector<int> comm = louvain_level(g, resolution, rng);

        // Renumber communities densely, lowest member first.
        std::map<int, int> renumber;
        for (std::size_t v = 0; v < g.n; ++v) {
            if (!renumber.count(comm[v])) {
                const int next = int(renumber.size());
                renumber[comm[v]] = next;
            }
        }
        const std::size_t n_comms = renumber.size();
        for (std::size_t v = 0; v < g.n; ++v) comm[v] = renumber[comm[v]];
        for (std::size_t v = 0; v < n; ++v) node_to_comm[v] = comm[node_to_comm[v]];
        if (n_comms == g.n) break; // nothing merged at this level

        // Coarsen.
        LevelGraph h;
        h.n = n_comms;
        h.adj.resize(n_comms);
        h.self_loop.assign(n_comms, 0.0);
        h.degree.assign(n_comms, 0.0);
        h.total_weight = g.total_weight;
        for (std::size_t v = 0; v < g.n; ++v) {
            h.self_loop[comm[v]] += g.self_loop[v];
            for (const auto& [u, w] : g.adj[v]) {
                if (std::size_t(u) < v) continue; // visit each undirected edge once
                if (comm[u] == comm[v]) {
                    h.self_loop[comm[v]] += w;
                } else {
                    h.adj[comm[v]][comm[u]] += w;
                    h.adj[comm[u]][comm[v]] += w;
                }
            }
        }
        for (std::size_t c = 0; c < n_comms; ++c) {
            h.degree[c] = 2.0 * h.self_loop[c];
            for (const auto& [u, w] : h.adj[c]) h.degree[c] += w;
        }
        g = std::move(h);
    }
    return CommunityPartition::from_assignment(node_to_comm);
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw NumericError("adjusted_rand_index: node-set mismatch");
    if (a.empty()) throw NumericError("adjusted_rand_index: empty labelings");
    const double n = double(a.size());

    std::map<std::pair<int, int>, double> contingency;
    std::map<int, double> row, col;
    for (std::size_t i = 0; i < a.size(); ++i) {
        contingency[{a[i], b[i]}] += 1.0;
        row[a[i]] += 1.0;
        col[b[i]] += 1.0;
    }
    auto choose2 = [](double x) { return x * (x - 1.0) / 2.0; };
    double index = 0.0, sum_a = 0.0, sum_b = 0.0;
    for (const auto& [k, v] : contingency) index += choose2(v);
    for (const auto& [k, v] : row) sum_a += choose2(v);
    for (const auto& [k, v] : col) sum_b += choose2(v);

    const double expected = sum_a * sum_b / choose2(n);
    const double max_index = 0.5 * (sum_a + sum_b);
    const double denom = max_index - expected;
    if (std::abs(denom) < 1e-15) return 1.0; // both partitions degenerate and equal
    return (index - expected) / denom;
}

PartitionMetrics partition_metrics(const CommunityPartition& found,
                                   const CommunityPartition& ideal) {
    if (found.assignment.size() != ideal.assignment.size()) {
        throw NumericError("partition_metrics: node-set mismatch");
    }
    PartitionMetrics m;
    m.ari = adjusted_rand_index(found.assignment, ideal.assignment);

    auto as_sets = [](const CommunityPartition& p) {
        std::vector<std::vector<int>> s = p.groups;
        std::sort(s.begin(), s.end());
        return s;
    };
    m.exact_match = as_sets(found) == as_sets(ideal);

    std::map<std::pair<int, int>, int> cells;
    for (std::size_t v = 0; v < found.assignment.size(); ++v) {
        ++cells[{found.assignment[v], ideal.assignment[v]}];
    }
    for (const auto& [key, count] : cells) {
        m.confusion.push_back({key.first, key.second, count});
    }
    return m;
}

namespace {

std::uint64_t text_checksum(const std::string& body) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : body) h = (h ^ static_cast<unsigned char>(c)) * 0x100000001b3ULL;
    return h;
}

std::string partition_body(const CommunityPartition& p) {
    std::ostringstream body;
    for (std::size_t g = 0; g < p.groups.size(); ++g) {
        body << "group " << g << ":";
        for (int v : p.groups[g]) body << " " << v;
        body << "\n";
    }
    return body.str();
}

} // namespace

void save_partition(const CommunityPartition& partition, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot create partition file: " + path);
    const std::string body = partition_body(partition);
    char sum[32];
    std::snprintf(sum, sizeof sum, "%016llx",
                  static_cast<unsigned long long>(text_checksum(body)));
    out << "# community partition v1\n# checksum " << sum << "\n" << body;
    if (!out) throw DataError("failed writing partition file: " + path);
}

LoadedPartition load_partition(const std::string& path, std::size_t n_nodes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open partition file: " + path);

    std::string line, body, stored_checksum;
    std::vector<int> labels(n_nodes, -1);
    int group = 0;
    while (std::getline(in, line)) {
        if (line.rfind("# checksum ", 0) == 0) {
            stored_checksum = line.substr(11);
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        body += line + "\n";
        const auto colon = line.find(':');
        if (line.rfind("group ", 0) != 0 || colon == std::string::npos) {
            throw DataError("malformed partition line in " + path + ": " + line);
        }
        std::istringstream ms(line.substr(colon + 1));
        int v;
        while (ms >> v) {
            if (v < 0 || std::size_t(v) >= n_nodes) {
                throw DataError("partition member out of range in " + path);
            }
            if (labels[v] != -1) throw DataError("node assigned twice in " + path);
            labels[v] = group;
        }
        ++group;
    }
    for (std::size_t v = 0; v < n_nodes; ++v) {
        if (labels[v] == -1) throw DataError("node " + std::to_string(v) + " missing from " + path);
    }

    LoadedPartition out;
    out.partition = CommunityPartition::from_assignment(labels);
    char sum[32];
    std::snprintf(sum, sizeof sum, "%016llx",
                  static_cast<unsigned long long>(text_checksum(body)));
    out.internal_provenance = (stored_checksum == sum);
    return out;
}

} // namespace fedad
