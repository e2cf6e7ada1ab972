#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "fedad/association.hpp"
#include "fedad/dataset.hpp"
#include "fedad/errors.hpp"

using namespace fedad;

namespace {

// Phase-I inputs for a small synthetic scenario.
struct Phase1 {
    std::vector<ClientDataset> clients;
    std::vector<OcsvmModel> models;
    std::vector<LocalAdResult> locals;
};

Phase1 run_phase1(int n_classes, int p, double q, std::uint64_t seed) {
    const LabeledDataset data = synth_patterns(n_classes, 400, 16, 0.5, 0.05, seed);
    PartitionConfig pc;
    pc.p = p;
    pc.d = 0.10;
    pc.seed = seed;
    Phase1 out;
    out.clients = partition_clients(data, pc);

    OcsvmConfig oc;
    oc.nu = 0.10;
    for (const auto& c : out.clients) out.models.push_back(ocsvm_fit(c.train, oc, seed));

    std::map<int, const OcsvmModel*> peers;
    for (std::size_t c = 0; c < out.models.size(); ++c) peers[int(c)] = &out.models[c];
    AssociationConfig ac;
    ac.q = q;
    for (std::size_t c = 0; c < out.clients.size(); ++c) {
        out.locals.push_back(local_ad(int(c), out.clients[c].train, out.models[c], peers, ac));
    }
    return out;
}

} // namespace

TEST_CASE("inlier_fraction counts ones") {
    CHECK(inlier_fraction({1, 1, 1, 1, 1, 1, 1, 1, 1, 0}) == doctest::Approx(0.9));
    CHECK(inlier_fraction({0, 0, 0, 0, 0}) == doctest::Approx(0.0));
    CHECK(inlier_fraction({1, 1, 1}) == doctest::Approx(1.0));
    CHECK_THROWS_AS(inlier_fraction({}), NumericError);
}

TEST_CASE("association_bit uses a closed interval") {
    CHECK(association_bit(0.90, 0.85, 0.08));
    CHECK_FALSE(association_bit(0.90, 0.81, 0.08));
    CHECK(association_bit(0.42, 0.42, 0.0));
    // Exactly representable endpoints stay included.
    CHECK(association_bit(0.75, 0.5, 0.25));
    CHECK(association_bit(0.75, 1.0, 0.25));
    CHECK_FALSE(association_bit(0.75, 0.4999999999, 0.25));
}

TEST_CASE("clients sharing an inlier class become mutual candidates") {
    const Phase1 ph = run_phase1(2, 2, 0.08, 17);
    REQUIRE(ph.clients.size() == 4);

    // Clients 0 and 1 share class 0; clients 2 and 3 share class 1.
    const auto cands0 = candidate_set(ph.locals[0], ph.locals);
    CHECK(cands0.count(1));
    CHECK_FALSE(cands0.count(0)); // never a candidate of itself
    CHECK_FALSE(cands0.count(2));
    CHECK_FALSE(cands0.count(3));

    const auto cands2 = candidate_set(ph.locals[2], ph.locals);
    CHECK(cands2.count(3));
    CHECK_FALSE(cands2.count(0));
}

TEST_CASE("exchange count covers all ordered pairs without self-pairs") {
    const Phase1 ph = run_phase1(3, 2, 0.08, 29);
    const std::size_t n = ph.clients.size();
    std::size_t directed = 0;
    for (const auto& l : ph.locals) {
        for (const auto& rec : l.records) {
            CHECK(rec.data_client == l.self_id);
            CHECK(rec.model_client != l.self_id);
            ++directed;
        }
    }
    CHECK(directed == n * (n - 1));
}

TEST_CASE("graph is symmetric and grows monotonically with q") {
    const Phase1 base = run_phase1(4, 3, 0.08, 31);
    const std::size_t n = base.clients.size();

    // Rebuild graphs at increasing thresholds from the same directed records.
    auto rebuilt = [&](double q) {
        std::vector<LocalAdResult> locals = base.locals;
        for (auto& l : locals) {
            for (auto& rec : l.records) rec.bit = association_bit(l.in_self, rec.inlier_frac, q);
        }
        return build_graph(locals, n);
    };
    const AssociationGraph g1 = rebuilt(0.01);
    const AssociationGraph g5 = rebuilt(0.05);
    const AssociationGraph g10 = rebuilt(0.10);
    for (const auto& e : g1.edges) CHECK(g5.has_edge(e.first, e.second));
    for (const auto& e : g5.edges) CHECK(g10.has_edge(e.first, e.second));

    for (const auto& [a, b] : g10.edges) {
        CHECK(g10.has_edge(a, b));
        CHECK(g10.has_edge(b, a)); // adjacency is undirected
        CHECK(a < b);
    }
}

TEST_CASE("build_graph needs mutual agreement") {
    LocalAdResult l0, l1, l2;
    l0.self_id = 0;
    l1.self_id = 1;
    l2.self_id = 2;
    auto rec = [](int model, int data, bool bit) {
        return DirectedRecord{model, data, 0.9, bit};
    };
    SUBCASE("all bits true gives a triangle") {
        l0.records = {rec(1, 0, true), rec(2, 0, true)};
        l1.records = {rec(0, 1, true), rec(2, 1, true)};
        l2.records = {rec(0, 2, true), rec(1, 2, true)};
        const auto g = build_graph({l0, l1, l2}, 3);
        CHECK(g.edges.size() == 3);
    }
    SUBCASE("one-directional agreement yields no edge") {
        l0.records = {rec(1, 0, true)};
        l1.records = {rec(0, 1, false)};
        const auto g = build_graph({l0, l1}, 2);
        CHECK(g.edges.empty());
    }
    SUBCASE("zero clients give an empty graph") {
        const auto g = build_graph({}, 0);
        CHECK(g.edges.empty());
        CHECK(g.n_nodes == 0);
    }
    SUBCASE("missing directed bits count as false and are reported") {
        l0.records = {rec(1, 0, true)};
        l1.records = {}; // b_{0,1} missing
        std::vector<std::string> warnings;
        const auto g = build_graph({l0, l1}, 2, &warnings);
        CHECK(g.edges.empty());
        CHECK(!warnings.empty());
    }
}

TEST_CASE("missing peer models are skipped with a warning") {
    const Phase1 ph = run_phase1(2, 1, 0.08, 41);
    std::map<int, const OcsvmModel*> peers;
    peers[1] = nullptr;
    peers[2] = &ph.models[1];
    AssociationConfig ac;
    std::vector<std::string> warnings;
    const auto res = local_ad(0, ph.clients[0].train, ph.models[0], peers, ac, &warnings);
    CHECK(res.records.size() == 1); // nullptr peer skipped
    CHECK(warnings.size() == 1);
}

TEST_CASE("edge list files round trip") {
    const Phase1 ph = run_phase1(2, 2, 0.08, 53);
    const auto g = build_graph(ph.locals, ph.clients.size());
    const auto path = (std::filesystem::temp_directory_path() / "fedad_graph.edges").string();
    save_graph_edges(g, path);
    const auto r = load_graph_edges(path, ph.clients.size());
    CHECK(r.edges == g.edges);

    const auto rec_path = (std::filesystem::temp_directory_path() / "fedad_ph1.csv").string();
    save_graph_records(g, rec_path);
    CHECK(std::filesystem::file_size(rec_path) > 0);
}
