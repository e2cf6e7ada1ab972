#include "fedad/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "fedad/errors.hpp"
#include "fedad/rng.hpp"

namespace fedad {

void LabeledDataset::validate() const {
    if (features.rows == 0) throw DataError("dataset is empty");
    if (labels.size() != features.rows) throw DataError("label count differs from row count");
    std::set<int> ids(class_ids.begin(), class_ids.end());
    for (int l : labels) {
        if (!ids.count(l)) throw DataError("label " + std::to_string(l) + " missing from class_ids");
    }
    for (double v : features.data) {
        if (!(v >= 0.0 && v <= 1.0)) throw DataError("feature value outside [0,1]");
    }
}

void PartitionConfig::validate() const {
    if (p < 1) throw ConfigError("p must be a positive integer");
    if (!(d > 0.0 && d < 0.5)) throw ConfigError("contamination d must lie in (0, 0.5)");
}

std::string ClientId::label() const {
    return "m_" + std::to_string(inlier_class) + "_" + std::to_string(index);
}

LabeledDataset synth_patterns(int n_classes, int n_per_class, int n_features,
                              double separation, double noise_sigma, std::uint64_t seed) {
    if (n_classes < 2) throw ConfigError("synth_patterns: need at least 2 classes");
    if (n_features < 1) throw ConfigError("synth_patterns: need at least 1 feature");
    if (n_per_class < 1) throw ConfigError("synth_patterns: need at least 1 sample per class");
    if (separation < 0.0 || noise_sigma < 0.0) {
        throw ConfigError("synth_patterns: separation and noise_sigma must be nonnegative");
    }

    // Centers drawn away from the cube boundary, rejecting pairs closer than
    // the requested separation.
    Rng center_rng(derive_seed(seed, "synth_centers"));
    Matrix centers(0, std::size_t(n_features));
    std::vector<double> candidate(n_features);
    int attempts = 0;
    while (centers.rows < std::size_t(n_classes)) {
        if (++attempts > 10000 * n_classes) {
            throw ConfigError("synth_patterns: cannot place centers at the requested separation");
        }
        for (int f = 0; f < n_features; ++f) candidate[f] = center_rng.uniform(0.15, 0.85);
        bool ok = true;
        for (std::size_t c = 0; c < centers.rows && ok; ++c) {
            if (squared_distance(centers.row_span(c), candidate) < separation * separation) ok = false;
        }
        if (ok) centers.push_row(candidate);
    }

    LabeledDataset out;
    out.features = Matrix(std::size_t(n_classes) * n_per_class, std::size_t(n_features));
    out.labels.resize(out.features.rows);
    for (int c = 0; c < n_classes; ++c) {
        Rng rng(derive_seed(seed, "synth_noise", std::uint64_t(c)));
        for (int k = 0; k < n_per_class; ++k) {
            const std::size_t i = std::size_t(c) * n_per_class + k;
            double* row = out.features.row(i);
            for (int f = 0; f < n_features; ++f) {
                double v = centers.at(c, f) + (noise_sigma > 0.0 ? rng.normal(0.0, noise_sigma) : 0.0);
                row[f] = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
            }
            out.labels[i] = c;
        }
        out.class_ids.push_back(c);
    }
    out.validate();
    return out;
}

namespace {

// Outlier rows per client so that contamination stays within one sample of d.
std::size_t outlier_count(std::size_t n_in, double d) {
    const auto n = static_cast<std::size_t>(std::llround(double(n_in) * d / (1.0 - d)));
    return n == 0 ? 1 : n;
}

} // namespace

std::vector<ClientDataset> partition_clients(const LabeledDataset& dataset,
                                             const PartitionConfig& cfg) {
    cfg.validate();
    dataset.validate();

    std::vector<int> classes = cfg.selected_classes.empty() ? dataset.class_ids
                                                            : cfg.selected_classes;
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw ConfigError("partition needs at least 2 classes");
    for (int c : classes) {
        if (!std::binary_search(dataset.class_ids.begin(), dataset.class_ids.end(), c)) {
            throw DataError("selected class " + std::to_string(c) + " absent from dataset");
        }
    }

    // Per-class sample pools, seeded shuffle.
    std::map<int, std::vector<std::size_t>> pool;
    for (std::size_t i = 0; i < dataset.labels.size(); ++i) {
        pool[dataset.labels[i]].push_back(i);
    }
    for (int c : classes) {
        if (pool[c].size() < std::size_t(2 * cfg.p)) {
            throw DataError("class " + std::to_string(c) + " has fewer than 2p samples");
        }
        Rng rng(derive_seed(cfg.seed, "partition_shuffle", std::uint64_t(c)));
        rng.shuffle(pool[c]);
    }

    const std::size_t p = std::size_t(cfg.p);
    const std::size_t n_groups = classes.size();
    const std::size_t cap_in =
        cfg.samples_per_client == 0
            ? 0
            : static_cast<std::size_t>(std::llround(double(cfg.samples_per_client) * (1.0 - cfg.d)));

    // Outlier class of client j in group gi cycles through the other classes.
    auto outlier_class_of = [&](std::size_t gi, std::size_t j) {
        std::vector<int> others;
        for (std::size_t k = 0; k < n_groups; ++k) {
            if (k != gi) others.push_back(classes[k]);
        }
        return others[j % others.size()];
    };

    // Inlier budget per class starts at everything and shrinks until the
    // outlier demand of the other groups' clients also fits in the class pool.
    std::map<int, std::size_t> budget;
    for (int c : classes) budget[c] = pool[c].size();

    std::vector<std::vector<std::size_t>> n_in(n_groups, std::vector<std::size_t>(p));
    std::vector<std::vector<std::size_t>> n_out(n_groups, std::vector<std::size_t>(p));
    for (int iter = 0; iter < 64; ++iter) {
        for (std::size_t gi = 0; gi < n_groups; ++gi) {
            const std::size_t b = budget[classes[gi]];
            const std::size_t base = b / p, extra = b % p;
            for (std::size_t j = 0; j < p; ++j) {
                std::size_t share = base + (j < extra ? 1 : 0);
                if (cap_in != 0 && share > cap_in) share = cap_in;
                if (share == 0) throw DataError("class " + std::to_string(classes[gi]) +
                                                " cannot give every client an inlier share");
                n_in[gi][j] = share;
                n_out[gi][j] = outlier_count(share, cfg.d);
            }
        }
        std::map<int, std::size_t> demand;
        for (int c : classes) demand[c] = 0;
        for (std::size_t gi = 0; gi < n_groups; ++gi) {
            for (std::size_t j = 0; j < p; ++j) demand[outlier_class_of(gi, j)] += n_out[gi][j];
        }
        bool feasible = true;
        for (int c : classes) {
            if (budget[c] + demand[c] > pool[c].size()) {
                if (pool[c].size() < demand[c] + p) {
                    throw DataError("class " + std::to_string(c) +
                                    " too small for the requested p and d");
                }
                budget[c] = pool[c].size() - demand[c];
                feasible = false;
            }
        }
        if (feasible) break;
        if (iter == 63) throw DataError("partition sizing did not stabilize");
    }

    // Consume pools: inliers from the front, outliers from the back of each pool.
    std::map<int, std::size_t> in_cursor, out_cursor;
    for (int c : classes) {
        in_cursor[c] = 0;
        out_cursor[c] = pool[c].size(); // moves downward
    }

    std::vector<ClientDataset> clients;
    clients.reserve(n_groups * p);
    for (std::size_t gi = 0; gi < n_groups; ++gi) {
        const int cin = classes[gi];
        for (std::size_t j = 0; j < p; ++j) {
            const int cout = outlier_class_of(gi, j);
            const std::size_t want_in = n_in[gi][j], want_out = n_out[gi][j];
            if (in_cursor[cin] + want_in > budget[cin]) {
                throw DataError("inlier pool exhausted for class " + std::to_string(cin));
            }
            if (out_cursor[cout] < want_out ||
                out_cursor[cout] - want_out < budget[cout]) {
                throw DataError("outlier pool exhausted for class " + std::to_string(cout));
            }

            ClientDataset cd;
            cd.id = ClientId{cin, int(j)};
            cd.inlier_class = cin;
            cd.outlier_class = cout;
            cd.train = Matrix(0, dataset.features.cols);
            for (std::size_t k = 0; k < want_in; ++k) {
                const std::size_t src = pool[cin][in_cursor[cin]++];
                cd.train.push_row(dataset.features.row_span(src));
                cd.truth.push_back(0);
                cd.source_rows.push_back(src);
            }
            for (std::size_t k = 0; k < want_out; ++k) {
                const std::size_t src = pool[cout][--out_cursor[cout]];
                cd.train.push_row(dataset.features.row_span(src));
                cd.truth.push_back(1);
                cd.source_rows.push_back(src);
            }

            // Mix inliers and outliers so row order carries no label signal.
            std::vector<std::size_t> order(cd.train.rows);
            for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
            Rng rng(derive_seed(cfg.seed, "client_shuffle", std::uint64_t(cin), j));
            rng.shuffle(order);
            Matrix mixed(cd.train.rows, cd.train.cols);
            std::vector<std::uint8_t> mixed_truth(cd.truth.size());
            std::vector<std::size_t> mixed_src(cd.source_rows.size());
            for (std::size_t k = 0; k < order.size(); ++k) {
                std::copy_n(cd.train.row(order[k]), cd.train.cols, mixed.row(k));
                mixed_truth[k] = cd.truth[order[k]];
                mixed_src[k] = cd.source_rows[order[k]];
            }
            cd.train = std::move(mixed);
            cd.truth = std::move(mixed_truth);
            cd.source_rows = std::move(mixed_src);
            clients.push_back(std::move(cd));
        }
    }
    return clients;
}

std::vector<TestSet> make_test_sets(const LabeledDataset& test_pool,
                                    const std::vector<ClientDataset>& clients,
                                    double d, std::size_t per_client, std::uint64_t seed) {
    if (per_client < 2) throw ConfigError("test set size must be at least 2");
    std::map<int, std::vector<std::size_t>> pool;
    for (std::size_t i = 0; i < test_pool.labels.size(); ++i) {
        pool[test_pool.labels[i]].push_back(i);
    }

    const auto n_out = static_cast<std::size_t>(std::llround(double(per_client) * d));
    const std::size_t n_in = per_client - n_out;
    if (n_out == 0) throw ConfigError("test set size too small to hold any outlier");

    std::vector<TestSet> out;
    out.reserve(clients.size());
    for (const auto& c : clients) {
        auto in_it = pool.find(c.inlier_class);
        auto out_it = pool.find(c.outlier_class);
        if (in_it == pool.end() || in_it->second.size() < n_in) {
            throw DataError("test pool lacks class " + std::to_string(c.inlier_class));
        }
        if (out_it == pool.end() || out_it->second.size() < n_out) {
            throw DataError("test pool lacks class " + std::to_string(c.outlier_class));
        }
        // Without replacement within this client: take the head of a fresh
        // per-client shuffle of each class pool.
        Rng rng(derive_seed(seed, "test_sample", std::uint64_t(c.inlier_class),
                            std::uint64_t(c.id.index)));
        std::vector<std::size_t> in_rows = in_it->second;
        std::vector<std::size_t> out_rows = out_it->second;
        rng.shuffle(in_rows);
        rng.shuffle(out_rows);

        TestSet ts;
        ts.features = Matrix(0, test_pool.features.cols);
        for (std::size_t k = 0; k < n_in; ++k) {
            ts.features.push_row(test_pool.features.row_span(in_rows[k]));
            ts.truth.push_back(0);
        }
        for (std::size_t k = 0; k < n_out; ++k) {
            ts.features.push_row(test_pool.features.row_span(out_rows[k]));
            ts.truth.push_back(1);
        }
        out.push_back(std::move(ts));
    }
    return out;
}

LabeledDataset avg_pool(const LabeledDataset& dataset, int factor) {
    if (factor == 1) return dataset;
    if (factor < 1) throw ConfigError("pooling factor must be >= 1");
    if (dataset.image_rows == 0 || dataset.image_cols == 0) {
        throw DataError("avg_pool: dataset is not image-shaped");
    }
    if (dataset.image_rows % factor != 0 || dataset.image_cols % factor != 0) {
        throw DataError("avg_pool: image dims not divisible by pooling factor");
    }
    const std::size_t R = dataset.image_rows / factor;
    const std::size_t C = dataset.image_cols / factor;

    LabeledDataset out;
    out.labels = dataset.labels;
    out.class_ids = dataset.class_ids;
    out.image_rows = R;
    out.image_cols = C;
    out.features = Matrix(dataset.features.rows, R * C);
    const double scale = 1.0 / (double(factor) * factor);
    for (std::size_t i = 0; i < dataset.features.rows; ++i) {
        const double* src = dataset.features.row(i);
        double* dst = out.features.row(i);
        for (std::size_t r = 0; r < R; ++r) {
            for (std::size_t c = 0; c < C; ++c) {
                double s = 0.0;
                for (int dr = 0; dr < factor; ++dr) {
                    for (int dc = 0; dc < factor; ++dc) {
                        s += src[(r * factor + dr) * dataset.image_cols + c * factor + dc];
                    }
                }
                dst[r * C + c] = s * scale;
            }
        }
    }
    return out;
}

} // namespace fedad
