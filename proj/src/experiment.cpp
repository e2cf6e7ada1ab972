#include "fedad/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "fedad/binio.hpp"
#include "fedad/errors.hpp"
#include "fedad/eval.hpp"
#include "fedad/idx.hpp"
#include "fedad/rng.hpp"

namespace fedad {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an integer: " + v);
    }
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not a number: " + v);
    }
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const unsigned long long x = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key " + key + ": not an unsigned integer: " + v);
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_int(key, item));
    }
    return out;
}

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ",";
        s += std::to_string(v[i]);
    }
    return s;
}

} // namespace

void ExperimentConfig::validate() const {
    if (pool != 1 && pool != 2 && pool != 4) throw ConfigError("data.pool must be 1, 2 or 4");
    if (p_list.empty()) throw ConfigError("partition.p must list at least one value");
    for (int p : p_list) {
        if (p < 1) throw ConfigError("partition.p entries must be positive");
    }
    PartitionConfig pc;
    pc.p = p_list.front();
    pc.d = d;
    pc.validate();
    if (nu < 0.0 || nu > 1.0) throw ConfigError("ocsvm.nu must lie in [0,1] (0 = use d)");
    if (gamma < 0.0) throw ConfigError("ocsvm.gamma must be >= 0 (0 = scale heuristic)");
    if (gamma_scale_mult <= 0.0) throw ConfigError("ocsvm.gamma_scale_mult must be positive");
    OcsvmConfig oc;
    oc.nu = effective_nu();
    oc.gamma = gamma;
    oc.tol = ocsvm_tol;
    oc.max_iter_factor = ocsvm_max_iter_factor;
    oc.validate();
    AssociationConfig ac;
    ac.q = q;
    ac.validate();
    const std::string warn = ac.range_warning();
    if (!warn.empty()) std::cerr << "warning: " << warn << "\n";
    if (community_resolution <= 0.0) throw ConfigError("community.resolution must be positive");
    fed.validate();
    if (fed.lr <= 0.0) throw ConfigError("fed.lr must be positive");
    if (test_per_client < 2) throw ConfigError("eval.test_per_client must be >= 2");
    if (source == DataSource::Idx) {
        if (idx_train_images.empty() || idx_train_labels.empty() || idx_test_images.empty() ||
            idx_test_labels.empty()) {
            throw ConfigError("idx source needs all four data.idx.* paths");
        }
    } else {
        if (synth_classes < 2) throw ConfigError("data.synth.classes must be >= 2");
        if (synth_per_class < 2) throw ConfigError("data.synth.per_class must be >= 2");
        if (synth_test_per_class < 1) throw ConfigError("data.synth.test_per_class must be >= 1");
        if (synth_features < 1) throw ConfigError("data.synth.features must be >= 1");
        if (synth_separation < 0.0 || synth_noise_sigma < 0.0) {
            throw ConfigError("data.synth.separation and noise_sigma must be >= 0");
        }
    }
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "data.source") {
            if (val == "synthetic") cfg.source = DataSource::Synthetic;
            else if (val == "idx") cfg.source = DataSource::Idx;
            else throw ConfigError("data.source must be synthetic or idx");
        } else if (key == "data.pool") cfg.pool = parse_int(key, val);
        else if (key == "data.synth.classes") cfg.synth_classes = parse_int(key, val);
        else if (key == "data.synth.per_class") cfg.synth_per_class = parse_int(key, val);
        else if (key == "data.synth.test_per_class") cfg.synth_test_per_class = parse_int(key, val);
        else if (key == "data.synth.features") cfg.synth_features = parse_int(key, val);
        else if (key == "data.synth.separation") cfg.synth_separation = parse_double(key, val);
        else if (key == "data.synth.noise_sigma") cfg.synth_noise_sigma = parse_double(key, val);
        else if (key == "data.idx.train_images") cfg.idx_train_images = val;
        else if (key == "data.idx.train_labels") cfg.idx_train_labels = val;
        else if (key == "data.idx.test_images") cfg.idx_test_images = val;
        else if (key == "data.idx.test_labels") cfg.idx_test_labels = val;
        else if (key == "partition.p") cfg.p_list = parse_int_list(key, val);
        else if (key == "partition.d") cfg.d = parse_double(key, val);
        else if (key == "partition.classes") cfg.selected_classes = parse_int_list(key, val);
        else if (key == "partition.samples_per_client")
            cfg.samples_per_client = parse_u64(key, val);
        else if (key == "ocsvm.nu") cfg.nu = parse_double(key, val);
        else if (key == "ocsvm.gamma") cfg.gamma = parse_double(key, val);
        else if (key == "ocsvm.gamma_scale_mult") cfg.gamma_scale_mult = parse_double(key, val);
        else if (key == "ocsvm.tol") cfg.ocsvm_tol = parse_double(key, val);
        else if (key == "ocsvm.max_iter_factor") cfg.ocsvm_max_iter_factor = parse_u64(key, val);
        else if (key == "assoc.q") cfg.q = parse_double(key, val);
        else if (key == "community.backend") {
            if (val == "louvain") cfg.community_backend = CommunityBackend::Louvain;
            else if (val == "labelprop") cfg.community_backend = CommunityBackend::LabelProp;
            else throw ConfigError("community.backend must be louvain or labelprop");
        } else if (key == "community.resolution") cfg.community_resolution = parse_double(key, val);
        else if (key == "fed.rounds") cfg.fed.rounds = parse_int(key, val);
        else if (key == "fed.epochs") cfg.fed.local_epochs = parse_int(key, val);
        else if (key == "fed.batch") cfg.fed.batch_size = parse_int(key, val);
        else if (key == "fed.lr") cfg.fed.lr = parse_double(key, val);
        else if (key == "fed.client_fraction") cfg.fed.client_fraction = parse_double(key, val);
        else if (key == "eval.test_per_client") cfg.test_per_client = parse_u64(key, val);
        else if (key == "seed") cfg.seed = parse_u64(key, val);
        else throw ConfigError("unknown config key: " + key);
    }
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string print_config(const ExperimentConfig& cfg) {
    std::ostringstream o;
    o << "# experiment configuration\n";
    o << "data.source = " << (cfg.source == DataSource::Idx ? "idx" : "synthetic")
      << "  # synthetic | idx\n";
    o << "data.pool = " << cfg.pool << "  # average-pooling factor for image data: 1 | 2 | 4\n";
    o << "data.synth.classes = " << cfg.synth_classes << "\n";
    o << "data.synth.per_class = " << cfg.synth_per_class << "  # training pool per class\n";
    o << "data.synth.test_per_class = " << cfg.synth_test_per_class << "  # held-out pool per class\n";
    o << "data.synth.features = " << cfg.synth_features << "\n";
    o << "data.synth.separation = " << fmt("%g", cfg.synth_separation)
      << "  # min pairwise center distance\n";
    o << "data.synth.noise_sigma = " << fmt("%g", cfg.synth_noise_sigma) << "\n";
    o << "data.idx.train_images = " << cfg.idx_train_images << "\n";
    o << "data.idx.train_labels = " << cfg.idx_train_labels << "\n";
    o << "data.idx.test_images = " << cfg.idx_test_images << "\n";
    o << "data.idx.test_labels = " << cfg.idx_test_labels << "\n";
    o << "partition.p = " << join_ints(cfg.p_list) << "  # clients per inlier class; list = sweep\n";
    o << "partition.d = " << fmt("%g", cfg.d) << "  # contamination, in (0, 0.5)\n";
    o << "partition.classes = " << join_ints(cfg.selected_classes) << "  # empty = all classes\n";
    o << "partition.samples_per_client = " << cfg.samples_per_client << "  # 0 = use full pools\n";
    o << "ocsvm.nu = " << fmt("%g", cfg.nu) << "  # 0 = use contamination d\n";
    o << "ocsvm.gamma = " << fmt("%g", cfg.gamma) << "  # 0 = scale heuristic\n";
    o << "ocsvm.gamma_scale_mult = " << fmt("%g", cfg.gamma_scale_mult)
      << "  # multiplier on the scale heuristic\n";
    o << "ocsvm.tol = " << fmt("%g", cfg.ocsvm_tol) << "\n";
    o << "ocsvm.max_iter_factor = " << cfg.ocsvm_max_iter_factor << "\n";
    o << "assoc.q = " << fmt("%g", cfg.q) << "  # association threshold, recommended [0.01, 0.10]\n";
    o << "community.backend = "
      << (cfg.community_backend == CommunityBackend::Louvain ? "louvain" : "labelprop")
      << "  # louvain | labelprop\n";
    o << "community.resolution = " << fmt("%g", cfg.community_resolution) << "\n";
    o << "fed.rounds = " << cfg.fed.rounds << "\n";
    o << "fed.epochs = " << cfg.fed.local_epochs << "  # local epochs per round\n";
    o << "fed.batch = " << cfg.fed.batch_size << "\n";
    o << "fed.lr = " << fmt("%g", cfg.fed.lr) << "\n";
    o << "fed.client_fraction = " << fmt("%g", cfg.fed.client_fraction) << "\n";
    o << "eval.test_per_client = " << cfg.test_per_client << "\n";
    o << "seed = " << cfg.seed << "\n";
    return o.str();
}

// ---------------------------------------------------------------------------
// Clients artifact

namespace {
constexpr std::uint32_t kClientsMagic = 0x43444146; // "FADC"
constexpr std::uint32_t kClientsVersion = 1;
} // namespace

void save_clients(const ClientsArtifact& art, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot create clients artifact: " + path);
    binio::put_u32(out, kClientsMagic);
    binio::put_u32(out, kClientsVersion);
    binio::put_u64(out, art.n_features);
    binio::put_u64(out, art.classes.size());
    for (int c : art.classes) binio::put_u64(out, std::uint64_t(c));
    binio::put_u64(out, art.clients.size());
    for (std::size_t i = 0; i < art.clients.size(); ++i) {
        const ClientDataset& cd = art.clients[i];
        binio::put_u64(out, std::uint64_t(cd.inlier_class));
        binio::put_u64(out, std::uint64_t(cd.outlier_class));
        binio::put_u64(out, std::uint64_t(cd.id.index));
        binio::put_u64(out, cd.train.rows);
        binio::put_f64_block(out, cd.train.data);
        for (auto t : cd.truth) out.put(char(t));
        for (std::size_t s : cd.source_rows) binio::put_u64(out, s);
        const TestSet& ts = art.test_sets[i];
        binio::put_u64(out, ts.features.rows);
        binio::put_f64_block(out, ts.features.data);
        for (auto t : ts.truth) out.put(char(t));
    }
    if (!out) throw DataError("failed writing clients artifact: " + path);
}

ClientsArtifact load_clients(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open clients artifact: " + path);
    if (binio::get_u32(in, "clients magic") != kClientsMagic) {
        throw DataError("not a clients artifact: " + path);
    }
    if (binio::get_u32(in, "clients version") != kClientsVersion) {
        throw DataError("unsupported clients artifact version in: " + path);
    }
    ClientsArtifact art;
    art.n_features = binio::get_u64(in, "n_features");
    const std::uint64_t n_classes = binio::get_u64(in, "class count");
    for (std::uint64_t i = 0; i < n_classes; ++i) {
        art.classes.push_back(int(binio::get_u64(in, "class id")));
    }
    const std::uint64_t n_clients = binio::get_u64(in, "client count");
    for (std::uint64_t i = 0; i < n_clients; ++i) {
        ClientDataset cd;
        cd.inlier_class = int(binio::get_u64(in, "inlier class"));
        cd.outlier_class = int(binio::get_u64(in, "outlier class"));
        cd.id = ClientId{cd.inlier_class, int(binio::get_u64(in, "client index"))};
        const std::uint64_t rows = binio::get_u64(in, "train rows");
        cd.train = Matrix(rows, art.n_features);
        binio::get_f64_block(in, cd.train.data, "train data");
        cd.truth.resize(rows);
        for (auto& t : cd.truth) t = std::uint8_t(in.get());
        cd.source_rows.resize(rows);
        for (auto& s : cd.source_rows) s = binio::get_u64(in, "source row");
        TestSet ts;
        const std::uint64_t trows = binio::get_u64(in, "test rows");
        ts.features = Matrix(trows, art.n_features);
        binio::get_f64_block(in, ts.features.data, "test data");
        ts.truth.resize(trows);
        for (auto& t : ts.truth) t = std::uint8_t(in.get());
        if (!in) throw DataError("truncated clients artifact: " + path);
        art.clients.push_back(std::move(cd));
        art.test_sets.push_back(std::move(ts));
    }
    return art;
}

CommunityPartition ideal_partition(const std::vector<ClientDataset>& clients) {
    std::vector<int> labels(clients.size());
    for (std::size_t c = 0; c < clients.size(); ++c) labels[c] = clients[c].inlier_class;
    return CommunityPartition::from_assignment(labels);
}

// ---------------------------------------------------------------------------
// Stages

namespace {

namespace fs = std::filesystem;

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
    return (fs::path(cfg.out_dir) / name).string();
}

std::string clients_path(const ExperimentConfig& cfg, int p) {
    return path_in(cfg, "clients_p" + std::to_string(p) + ".bin");
}
std::string edges_path(const ExperimentConfig& cfg, int p) {
    return path_in(cfg, "graph_p" + std::to_string(p) + ".edges");
}
std::string records_path(const ExperimentConfig& cfg, int p) {
    return path_in(cfg, "phase1_p" + std::to_string(p) + ".csv");
}
std::string partition_path(const ExperimentConfig& cfg, int p) {
    return path_in(cfg, "partition_p" + std::to_string(p) + ".txt");
}
std::string fed_log_path(const ExperimentConfig& cfg, int p) {
    return path_in(cfg, "fed_log_p" + std::to_string(p) + ".csv");
}

std::string model_path(const ExperimentConfig& cfg, int p, const std::string& scheme,
                       const std::string& key) {
    return path_in(cfg, "ae_p" + std::to_string(p) + "_" + scheme + "_" + key + ".bin");
}

// Loads the source data once per stage invocation.
struct SourceData {
    LabeledDataset train;
    LabeledDataset test;
};

SourceData load_source(const ExperimentConfig& cfg) {
    SourceData s;
    if (cfg.source == DataSource::Idx) {
        s.train = load_idx(cfg.idx_train_images, cfg.idx_train_labels);
        s.test = load_idx(cfg.idx_test_images, cfg.idx_test_labels);
        if (cfg.pool != 1) {
            s.train = avg_pool(s.train, cfg.pool);
            s.test = avg_pool(s.test, cfg.pool);
        }
        return s;
    }
    // One synthetic pool per class, split into train/test halves so that both
    // share the same class centers.
    const int total = cfg.synth_per_class + cfg.synth_test_per_class;
    const LabeledDataset all =
        synth_patterns(cfg.synth_classes, total, cfg.synth_features, cfg.synth_separation,
                       cfg.synth_noise_sigma, derive_seed(cfg.seed, "synth"));
    auto take = [&](bool test_half) {
        LabeledDataset out;
        out.class_ids = all.class_ids;
        out.features = Matrix(0, all.features.cols);
        std::map<int, int> seen;
        for (std::size_t i = 0; i < all.features.rows; ++i) {
            const int k = seen[all.labels[i]]++;
            const bool is_test = k >= cfg.synth_per_class;
            if (is_test == test_half) {
                out.features.push_row(all.features.row_span(i));
                out.labels.push_back(all.labels[i]);
            }
        }
        return out;
    };
    s.train = take(false);
    s.test = take(true);
    return s;
}

void stage_partition(const ExperimentConfig& cfg) {
    const SourceData src = load_source(cfg);
    for (int p : cfg.p_list) {
        PartitionConfig pc;
        pc.p = p;
        pc.d = cfg.d;
        pc.selected_classes = cfg.selected_classes;
        pc.samples_per_client = cfg.samples_per_client;
        pc.seed = cfg.seed;

        ClientsArtifact art;
        art.clients = partition_clients(src.train, pc);
        art.test_sets =
            make_test_sets(src.test, art.clients, cfg.d, cfg.test_per_client, cfg.seed);
        art.n_features = src.train.features.cols;
        std::set<int> classes;
        for (const auto& c : art.clients) classes.insert(c.inlier_class);
        art.classes.assign(classes.begin(), classes.end());
        save_clients(art, clients_path(cfg, p));
    }
}

void stage_phase1(const ExperimentConfig& cfg) {
    for (int p : cfg.p_list) {
        const ClientsArtifact art = load_clients(clients_path(cfg, p));
        const std::size_t n = art.clients.size();

        OcsvmConfig oc;
        oc.nu = cfg.effective_nu();
        oc.tol = cfg.ocsvm_tol;
        oc.max_iter_factor = cfg.ocsvm_max_iter_factor;

        std::vector<OcsvmModel> models;
        models.reserve(n);
        for (std::size_t c = 0; c < n; ++c) {
            oc.gamma = cfg.gamma > 0.0
                           ? cfg.gamma
                           : cfg.gamma_scale_mult * gamma_scale(art.clients[c].train);
            models.push_back(
                ocsvm_fit(art.clients[c].train, oc, derive_seed(cfg.seed, "ocsvm", c)));
        }
        std::map<int, const OcsvmModel*> peers;
        for (std::size_t c = 0; c < n; ++c) peers[int(c)] = &models[c];

        AssociationConfig ac;
        ac.q = cfg.q;
        std::vector<LocalAdResult> locals;
        locals.reserve(n);
        std::vector<std::string> warnings;
        for (std::size_t c = 0; c < n; ++c) {
            locals.push_back(local_ad(int(c), art.clients[c].train, models[c], peers, ac,
                                      &warnings));
        }
        const AssociationGraph graph = build_graph(locals, n, &warnings);
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        save_graph_edges(graph, edges_path(cfg, p));
        save_graph_records(graph, records_path(cfg, p));
    }
}

void stage_communities(const ExperimentConfig& cfg) {
    for (int p : cfg.p_list) {
        const ClientsArtifact art = load_clients(clients_path(cfg, p));
        const AssociationGraph graph = load_graph_edges(edges_path(cfg, p), art.clients.size());
        const CommunityPartition found =
            detect_communities(graph, derive_seed(cfg.seed, "community", std::uint64_t(p)),
                               cfg.community_backend, cfg.community_resolution);
        save_partition(found, partition_path(cfg, p));
    }
}

void stage_train(const ExperimentConfig& cfg) {
    for (int p : cfg.p_list) {
        const ClientsArtifact art = load_clients(clients_path(cfg, p));
        const LoadedPartition found = load_partition(partition_path(cfg, p), art.clients.size());
        const CommunityPartition ideal = ideal_partition(art.clients);

        std::ofstream log(fed_log_path(cfg, p));
        if (!log) throw DataError("cannot create fed log: " + fed_log_path(cfg, p));
        log << "scheme,group,round,mean_client_loss,global_loss\n";

        auto train_group = [&](const std::vector<int>& members, const std::string& scheme,
                               const std::string& key, bool with_log) {
            std::vector<FedClient> group;
            for (int c : members) group.push_back({c, &art.clients[c].train});
            std::vector<FedRoundStat> stats;
            const AeParams model =
                run_federation(group, cfg.fed, cfg.seed, with_log ? &stats : nullptr);
            for (const auto& s : stats) {
                log << scheme << "," << key << "," << s.round << ","
                    << fmt("%.9f", s.mean_client_loss) << "," << fmt("%.9f", s.global_loss)
                    << "\n";
            }
            save_ae(model, model_path(cfg, p, scheme, key));
        };

        for (std::size_t g = 0; g < found.partition.groups.size(); ++g) {
            train_group(found.partition.groups[g], "community", "g" + std::to_string(g), true);
        }
        for (const auto& group : ideal.groups) {
            const int cin = art.clients[group.front()].inlier_class;
            train_group(group, "ideal", "c" + std::to_string(cin), true);
        }
        for (std::size_t c = 0; c < art.clients.size(); ++c) {
            train_group({int(c)}, "local", art.clients[c].id.label(), false);
        }
    }
}

struct EvalOutcome {
    int p = 0;
    SchemeResult local, community, ideal;
    CommunityPartition found;
    bool internal_provenance = true;
    CommunityPartition ideal_part;
    PartitionMetrics metrics;
    std::vector<BreakdownRow> breakdown;
    std::vector<std::map<int, int>> histograms;
    std::vector<ClientId> client_ids;
    std::size_t edge_count = 0;
};

EvalOutcome evaluate_one(const ExperimentConfig& cfg, int p) {
    const ClientsArtifact art = load_clients(clients_path(cfg, p));
    const std::size_t n = art.clients.size();
    EvalOutcome out;
    out.p = p;
    const LoadedPartition lp = load_partition(partition_path(cfg, p), n);
    out.found = lp.partition;
    out.internal_provenance = lp.internal_provenance;
    out.ideal_part = ideal_partition(art.clients);
    out.metrics = partition_metrics(out.found, out.ideal_part);
    out.edge_count = load_graph_edges(edges_path(cfg, p), n).edges.size();

    // Load every checkpoint, then map clients to storage slots per scheme.
    std::vector<AeParams> storage;
    std::map<int, std::size_t> local_slot, group_slot, ideal_slot;
    for (std::size_t c = 0; c < n; ++c) {
        storage.push_back(load_ae(model_path(cfg, p, "local", art.clients[c].id.label())));
        local_slot[int(c)] = storage.size() - 1;
    }
    for (std::size_t g = 0; g < out.found.groups.size(); ++g) {
        storage.push_back(load_ae(model_path(cfg, p, "community", "g" + std::to_string(g))));
        group_slot[int(g)] = storage.size() - 1;
    }
    for (const auto& group : out.ideal_part.groups) {
        const int cin = art.clients[group.front()].inlier_class;
        storage.push_back(load_ae(model_path(cfg, p, "ideal", "c" + std::to_string(cin))));
        ideal_slot[cin] = storage.size() - 1;
    }
    std::map<int, const AeParams*> local_models, community_models, ideal_models;
    for (std::size_t c = 0; c < n; ++c) {
        local_models[int(c)] = &storage[local_slot.at(int(c))];
        community_models[int(c)] = &storage[group_slot.at(out.found.assignment[c])];
        ideal_models[int(c)] = &storage[ideal_slot.at(art.clients[c].inlier_class)];
    }

    out.local = evaluate_scheme(art.clients, art.test_sets, local_models, "local");
    out.community = evaluate_scheme(art.clients, art.test_sets, community_models, "community");
    out.ideal = evaluate_scheme(art.clients, art.test_sets, ideal_models, "ideal");
    out.breakdown = breakdown_by_inlier({out.local, out.community, out.ideal}, art.clients,
                                        out.found, out.ideal_part);
    out.histograms = class_histograms(art.clients);
    for (const auto& c : art.clients) out.client_ids.push_back(c.id);
    return out;
}

void write_reports(const ExperimentConfig& cfg, const std::vector<EvalOutcome>& outcomes) {
    std::ofstream communities(path_in(cfg, "communities.csv"));
    communities << "p,group,members\n";
    std::ofstream summary(path_in(cfg, "auc_summary.csv"));
    summary << "p,scheme,mean,std\n";
    std::ofstream breakdown(path_in(cfg, "auc_breakdown.csv"));
    breakdown << "p,c_in,scheme,mean,std\n";
    std::ofstream histograms(path_in(cfg, "histograms.csv"));
    histograms << "p,client,class,count\n";
    std::ofstream report(path_in(cfg, "report.txt"));
    if (!communities || !summary || !breakdown || !histograms || !report) {
        throw DataError("cannot create report files under " + cfg.out_dir);
    }

    report << "federated anomaly detection report\n";
    report << "===================================\n\n";
    report << "std convention: population (N)\n";
    report << "master seed: " << cfg.seed << "\n\n";
    report << "config:\n";
    std::istringstream cfg_echo(print_config(cfg));
    std::string line;
    while (std::getline(cfg_echo, line)) report << "  " << line << "\n";
    report << "\n";

    for (const EvalOutcome& o : outcomes) {
        const std::string p = std::to_string(o.p);
        for (std::size_t g = 0; g < o.found.groups.size(); ++g) {
            std::string members;
            for (int c : o.found.groups[g]) {
                if (!members.empty()) members += " ";
                members += o.client_ids[c].label();
            }
            communities << p << "," << g << "," << members << "\n";
        }
        for (const SchemeResult* r : {&o.local, &o.community, &o.ideal}) {
            summary << p << "," << r->scheme << "," << fmt("%.6f", r->mean) << ","
                    << fmt("%.6f", r->std_dev) << "\n";
        }
        for (const BreakdownRow& row : o.breakdown) {
            breakdown << p << "," << row.inlier_class << "," << row.scheme << ","
                      << fmt("%.6f", row.mean) << "," << fmt("%.6f", row.std_dev) << "\n";
        }
        for (std::size_t c = 0; c < o.histograms.size(); ++c) {
            for (const auto& [cls, count] : o.histograms[c]) {
                histograms << p << "," << o.client_ids[c].label() << "," << cls << "," << count
                           << "\n";
            }
        }

        report << "[p = " << p << "]\n";
        report << "clients: " << o.client_ids.size() << "\n";
        report << "association edges: " << o.edge_count << "\n";
        report << "partition provenance: " << (o.internal_provenance ? "internal" : "external")
               << "\n";
        report << "communities found: " << o.found.groups.size() << " (ideal "
               << o.ideal_part.groups.size() << ")\n";
        for (std::size_t g = 0; g < o.found.groups.size(); ++g) {
            // Composition by inlier class, e.g. "G_2 = 5x c4 + 5x c9".
            std::map<int, int> comp;
            for (int c : o.found.groups[g]) ++comp[o.client_ids[c].inlier_class];
            report << "  G_" << g << " (size " << o.found.groups[g].size() << "):";
            for (const auto& [cls, cnt] : comp) {
                report << " " << cnt << "x class " << cls;
            }
            report << "\n";
        }
        report << "ARI vs ideal: " << fmt("%.6f", o.metrics.ari) << "\n";
        report << "exact match: " << (o.metrics.exact_match ? "yes" : "no") << "\n";
        report << "auc per scheme (mean +- std over " << o.client_ids.size() << " clients):\n";
        for (const SchemeResult* r : {&o.local, &o.community, &o.ideal}) {
            report << "  " << r->scheme << ": " << fmt("%.4f", r->mean) << " +- "
                   << fmt("%.4f", r->std_dev) << "\n";
        }
        if (o.breakdown.empty()) {
            report << "mismatched inlier classes: none\n";
        } else {
            report << "mismatched inlier classes:\n";
            for (const BreakdownRow& row : o.breakdown) {
                report << "  C_in=" << row.inlier_class << " " << row.scheme << ": "
                       << fmt("%.4f", row.mean) << " +- " << fmt("%.4f", row.std_dev) << " ("
                       << row.n_clients << " clients)\n";
            }
        }
        report << "\n";
    }
}

void stage_evaluate(const ExperimentConfig& cfg) {
    std::vector<EvalOutcome> outcomes;
    for (int p : cfg.p_list) outcomes.push_back(evaluate_one(cfg, p));
    write_reports(cfg, outcomes);
}

} // namespace

const std::vector<std::string> kStageNames = {"partition", "phase1", "communities", "train",
                                              "evaluate"};

void run_stage(const ExperimentConfig& cfg, const std::string& stage) {
    cfg.validate();
    std::filesystem::create_directories(cfg.out_dir);
    try {
        if (stage == "partition") stage_partition(cfg);
        else if (stage == "phase1") stage_phase1(cfg);
        else if (stage == "communities") stage_communities(cfg);
        else if (stage == "train") stage_train(cfg);
        else if (stage == "evaluate") stage_evaluate(cfg);
        else throw ConfigError("unknown stage: " + stage);
    } catch (const ConfigError&) {
        throw;
    } catch (const DataError& e) {
        throw DataError("stage " + stage + ": " + e.what());
    } catch (const NumericError& e) {
        throw NumericError("stage " + stage + ": " + e.what());
    }
}

void run_full(const ExperimentConfig& cfg) {
    for (const auto& stage : kStageNames) run_stage(cfg, stage);
}

} // namespace fedad
