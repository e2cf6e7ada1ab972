#include "fedad/association.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "fedad/errors.hpp"

namespace fedad {

std::string AssociationConfig::range_warning() const {
    if (q < 0.01 || q > 0.10) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "association threshold q=%.4f outside [0.01, 0.10]", q);
        return buf;
    }
    return {};
}

void AssociationConfig::validate() const {
    if (q < 0.0) throw ConfigError("association threshold q must be nonnegative");
}

double inlier_fraction(const std::vector<std::uint8_t>& labels) {
    if (labels.empty()) throw NumericError("inlier_fraction: empty label vector");
    std::size_t ones = 0;
    for (auto l : labels) ones += l ? 1 : 0;
    return double(ones) / double(labels.size());
}

bool association_bit(double in_self, double in_other, double q) {
    return in_self - q <= in_other && in_other <= in_self + q;
}

LocalAdResult local_ad(int self_id, const Matrix& own_features, const OcsvmModel& own_model,
                       const std::map<int, const OcsvmModel*>& peer_models,
                       const AssociationConfig& cfg, std::vector<std::string>* warnings) {
    cfg.validate();
    LocalAdResult res;
    res.self_id = self_id;
    res.in_self = inlier_fraction(ocsvm_predict(own_model, own_features));
    for (const auto& [peer_id, model] : peer_models) {
        if (peer_id == self_id) continue; // no self-pairing
        if (model == nullptr) {
            if (warnings) {
                warnings->push_back("client " + std::to_string(self_id) + ": missing model of peer " +
                                    std::to_string(peer_id) + ", skipped");
            }
            continue;
        }
        DirectedRecord rec;
        rec.model_client = peer_id;
        rec.data_client = self_id;
        rec.inlier_frac = inlier_fraction(ocsvm_predict(*model, own_features));
        rec.bit = association_bit(res.in_self, rec.inlier_frac, cfg.q);
        res.records.push_back(rec);
    }
    return res;
}

std::set<int> candidate_set(const LocalAdResult& self, const std::vector<LocalAdResult>& all) {
    std::map<std::pair<int, int>, bool> bit; // (model, data) -> b
    for (const auto& r : all) {
        for (const auto& rec : r.records) bit[{rec.model_client, rec.data_client}] = rec.bit;
    }
    std::set<int> out;
    for (const auto& rec : self.records) {
        const int j = rec.model_client;
        auto rev = bit.find({self.self_id, j}); // b_{i,j}: i's model on j's data
        if (rec.bit && rev != bit.end() && rev->second) out.insert(j);
    }
    return out;
}

AssociationGraph build_graph(const std::vector<LocalAdResult>& all, std::size_t n_clients,
                             std::vector<std::string>* warnings) {
    AssociationGraph g;
    g.n_nodes = n_clients;

    std::map<std::pair<int, int>, bool> bit;
    for (const auto& r : all) {
        for (const auto& rec : r.records) {
            bit[{rec.model_client, rec.data_client}] = rec.bit;
            g.records.push_back(rec);
        }
    }
    auto directed = [&](int model, int data) {
        auto it = bit.find({model, data});
        if (it == bit.end()) {
            if (warnings) {
                warnings->push_back("missing directed bit b_{" + std::to_string(model) + "," +
                                    std::to_string(data) + "}, treated as false");
            }
            return false;
        }
        return it->second;
    };

    for (std::size_t i = 0; i < n_clients; ++i) {
        for (std::size_t j = i + 1; j < n_clients; ++j) {
            const int a = int(i), b = int(j);
            if (directed(b, a) && directed(a, b)) g.edges.emplace_back(a, b);
        }
    }
    std::sort(g.edges.begin(), g.edges.end());
    std::sort(g.records.begin(), g.records.end(), [](const auto& x, const auto& y) {
        return std::pair(x.data_client, x.model_client) < std::pair(y.data_client, y.model_client);
    });
    return g;
}

bool AssociationGraph::has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    return std::binary_search(edges.begin(), edges.end(), std::pair(a, b));
}

std::vector<std::vector<int>> AssociationGraph::adjacency() const {
    std::vector<std::vector<int>> adj(n_nodes);
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    return adj;
}

void save_graph_edges(const AssociationGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot create graph file: " + path);
    for (const auto& [a, b] : graph.edges) out << a << " " << b << "\n";
    if (!out) throw DataError("failed writing graph file: " + path);
}

AssociationGraph load_graph_edges(const std::string& path, std::size_t n_nodes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open graph file: " + path);
    AssociationGraph g;
    g.n_nodes = n_nodes;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        int a, b;
        if (!(ls >> a >> b)) throw DataError("malformed edge line in " + path + ": " + line);
        if (a < 0 || b < 0 || std::size_t(a) >= n_nodes || std::size_t(b) >= n_nodes || a == b) {
            throw DataError("edge endpoints out of range in " + path + ": " + line);
        }
        if (a > b) std::swap(a, b);
        g.edges.emplace_back(a, b);
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    return g;
}

void save_graph_records(const AssociationGraph& graph, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot create records file: " + path);
    out << "data_client,model_client,inlier_frac,bit\n";
    char buf[64];
    for (const auto& r : graph.records) {
        std::snprintf(buf, sizeof buf, "%.6f", r.inlier_frac);
        out << r.data_client << "," << r.model_client << "," << buf << "," << (r.bit ? 1 : 0)
            << "\n";
    }
    if (!out) throw DataError("failed writing records file: " + path);
}

} // namespace fedad
