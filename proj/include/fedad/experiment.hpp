#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fedad/association.hpp"
#include "fedad/community.hpp"
#include "fedad/dataset.hpp"
#include "fedad/fedavg.hpp"
#include "fedad/ocsvm.hpp"

namespace fedad {

enum class DataSource { Synthetic, Idx };

// Every knob of one experiment. Loaded from a flat key=value text file;
// unknown keys are rejected, defaults are documented by print_config().
struct ExperimentConfig {
    DataSource source = DataSource::Synthetic;
    int pool = 1; // average-pooling factor for image data: 1, 2 or 4

    // synthetic source
    int synth_classes = 4;
    int synth_per_class = 4000;
    int synth_test_per_class = 500;
    int synth_features = 16;
    double synth_separation = 0.5;
    double synth_noise_sigma = 0.05;

    // idx source
    std::string idx_train_images, idx_train_labels;
    std::string idx_test_images, idx_test_labels;

    std::vector<int> p_list = {5};
    double d = 0.10;
    std::vector<int> selected_classes; // empty = all
    std::size_t samples_per_client = 0;

    double nu = 0.0;              // 0 = use contamination d
    double gamma = 0.0;           // 0 = scale heuristic per client
    double gamma_scale_mult = 1.0; // multiplier on the scale heuristic
    double ocsvm_tol = 1e-3;
    std::size_t ocsvm_max_iter_factor = 200;

    double q = 0.08;
    CommunityBackend community_backend = CommunityBackend::Louvain;
    double community_resolution = 1.0;

    FedConfig fed;
    std::size_t test_per_client = 200;

    std::uint64_t seed = 7;
    std::string out_dir = "out";

    void validate() const; // throws ConfigError; q-range warnings go to stderr
    double effective_nu() const { return nu > 0.0 ? nu : d; }
};

// Parses the key=value config text. Keys absent from the file keep their
// defaults; unknown keys throw ConfigError.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config_file(const std::string& path);

// Canonical config text for --print-config and the report echo.
std::string print_config(const ExperimentConfig& cfg);

// Saved output of the partition stage: everything later stages need.
struct ClientsArtifact {
    std::size_t n_features = 0;
    std::vector<int> classes;
    std::vector<ClientDataset> clients;
    std::vector<TestSet> test_sets;
};

void save_clients(const ClientsArtifact& art, const std::string& path);
ClientsArtifact load_clients(const std::string& path);

// Ground-truth grouping by inlier class, in flat client-id space.
CommunityPartition ideal_partition(const std::vector<ClientDataset>& clients);

extern const std::vector<std::string> kStageNames; // partition, phase1, communities, train, evaluate

// Runs one named stage from the artifacts already present in cfg.out_dir.
void run_stage(const ExperimentConfig& cfg, const std::string& stage);

// Full pipeline: every stage in order, all artifacts and reports written
// under cfg.out_dir. Identical to running the stages one by one.
void run_full(const ExperimentConfig& cfg);

} // namespace fedad
