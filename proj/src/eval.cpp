#include "fedad/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fedad/errors.hpp"

namespace fedad {

double roc_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& truth) {
    if (scores.size() != truth.size()) throw NumericError("roc_auc: length mismatch");
    std::size_t n_pos = 0;
    for (auto t : truth) n_pos += t ? 1 : 0;
    const std::size_t n = scores.size();
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) {
        throw NumericError("roc_auc: truth holds a single class, AUC undefined");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // Average ranks over tied score runs, summed over positives.
    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (double(i + 1) + double(j + 1));
        for (std::size_t k = i; k <= j; ++k) {
            if (truth[order[k]]) pos_rank_sum += avg_rank;
        }
        i = j + 1;
    }
    const double u = pos_rank_sum - double(n_pos) * (double(n_pos) + 1.0) / 2.0;
    return u / (double(n_pos) * double(n_neg));
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
    if (values.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= double(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= double(values.size());
    return {mean, std::sqrt(var)};
}

SchemeResult evaluate_scheme(const std::vector<ClientDataset>& clients,
                             const std::vector<TestSet>& test_sets,
                             const std::map<int, const AeParams*>& model_for_client,
                             const std::string& scheme) {
    if (clients.size() != test_sets.size()) {
        throw NumericError("evaluate_scheme: client/test set count mismatch");
    }
    SchemeResult res;
    res.scheme = scheme;
    std::vector<double> aucs;
    for (std::size_t c = 0; c < clients.size(); ++c) {
        const auto it = model_for_client.find(int(c));
        if (it == model_for_client.end() || it->second == nullptr) {
            throw NumericError("evaluate_scheme: missing model for client " + std::to_string(c));
        }
        const TestSet& ts = test_sets[c];
        std::vector<double> scores(ts.features.rows);
        for (std::size_t i = 0; i < ts.features.rows; ++i) {
            scores[i] = anomaly_score(*it->second, ts.features.row_span(i));
        }
        const double auc = roc_auc(scores, ts.truth);
        res.per_client_auc[int(c)] = auc;
        aucs.push_back(auc);
    }
    std::tie(res.mean, res.std_dev) = mean_std(aucs);
    return res;
}

std::vector<BreakdownRow> breakdown_by_inlier(const std::vector<SchemeResult>& results,
                                              const std::vector<ClientDataset>& clients,
                                              const CommunityPartition& found,
                                              const CommunityPartition& ideal) {
    // An inlier class is mismatched when no detected community equals its
    // ideal group exactly.
    std::set<std::vector<int>> found_sets(found.groups.begin(), found.groups.end());

    std::vector<BreakdownRow> rows;
    for (const auto& members : ideal.groups) {
        if (found_sets.count(members)) continue; // detected community matches I_{C_in}
        const int cin = clients[members.front()].inlier_class;
        for (const SchemeResult& r : results) {
            std::vector<double> aucs;
            for (int c : members) aucs.push_back(r.per_client_auc.at(c));
            const auto [mean, sd] = mean_std(aucs);
            rows.push_back({cin, r.scheme, mean, sd, int(aucs.size())});
        }
    }
    return rows;
}

std::vector<std::map<int, int>> class_histograms(const std::vector<ClientDataset>& clients) {
    std::vector<std::map<int, int>> out;
    out.reserve(clients.size());
    for (const auto& c : clients) {
        std::map<int, int> hist;
        for (std::size_t i = 0; i < c.truth.size(); ++i) {
            ++hist[c.truth[i] ? c.outlier_class : c.inlier_class];
        }
        out.push_back(std::move(hist));
    }
    return out;
}

} // namespace fedad
