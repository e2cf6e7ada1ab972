#include "fedad/fedavg.hpp"

#include <algorithm>
#include <cmath>

#include "fedad/errors.hpp"
#include "fedad/rng.hpp"

namespace fedad {

void FedConfig::validate() const {
    if (rounds < 1) throw ConfigError("fed rounds must be >= 1");
    if (local_epochs < 1) throw ConfigError("fed local_epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("fed batch_size must be >= 1");
    if (lr < 0.0) throw ConfigError("fed lr must be nonnegative");
    if (!(client_fraction > 0.0 && client_fraction <= 1.0)) {
        throw ConfigError("fed client_fraction must lie in (0,1]");
    }
}

ClientUpdate client_update(const AeParams& global, const Matrix& local_data,
                           const FedConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    if (local_data.rows == 0) throw NumericError("client_update: empty local data");
    AeParams p = global;
    for (int e = 0; e < cfg.local_epochs; ++e) {
        p = sgd_epoch(p, local_data, cfg.lr, std::size_t(cfg.batch_size),
                      derive_seed(seed, "fed_epoch", std::uint64_t(e)));
    }
    return {std::move(p), local_data.rows};
}

AeParams aggregate(const std::vector<ClientUpdate>& updates) {
    if (updates.empty()) throw NumericError("aggregate: empty update list");
    for (const auto& u : updates) {
        if (!u.params.same_shape(updates.front().params)) {
            throw NumericError("aggregate: parameter shape mismatch");
        }
    }
    double total = 0.0;
    for (const auto& u : updates) total += double(u.n_samples);
    if (total <= 0.0) throw NumericError("aggregate: zero total weight");

    AeParams out = updates.front().params;
    const double w0 = double(updates.front().n_samples) / total;
    for (auto& w : out.weights) {
        for (double& v : w.data) v *= w0;
    }
    for (auto& b : out.biases) {
        for (double& v : b) v *= w0;
    }
    for (std::size_t k = 1; k < updates.size(); ++k) {
        const double wk = double(updates[k].n_samples) / total;
        const AeParams& p = updates[k].params;
        for (std::size_t l = 0; l < out.weights.size(); ++l) {
            for (std::size_t i = 0; i < out.weights[l].data.size(); ++i) {
                out.weights[l].data[i] += wk * p.weights[l].data[i];
            }
            for (std::size_t i = 0; i < out.biases[l].size(); ++i) {
                out.biases[l][i] += wk * p.biases[l][i];
            }
        }
    }
    return out;
}

AeParams run_federation(const std::vector<FedClient>& group, const FedConfig& cfg,
                        std::uint64_t experiment_seed, std::vector<FedRoundStat>* log) {
    cfg.validate();
    if (group.empty()) throw NumericError("run_federation: empty group");
    for (const auto& c : group) {
        if (c.data == nullptr || c.data->rows == 0) {
            throw NumericError("run_federation: client without data");
        }
    }

    std::vector<FedClient> members = group;
    std::sort(members.begin(), members.end(),
              [](const FedClient& a, const FedClient& b) { return a.id < b.id; });

    // One shared init for every federation of the experiment: schemes with
    // identical member sets then produce identical models.
    AeParams global = ae_init(members.front().data->cols,
                              derive_seed(experiment_seed, "ae_init"));

    const auto n_selected = static_cast<std::size_t>(
        std::ceil(cfg.client_fraction * double(members.size())));

    for (int round = 0; round < cfg.rounds; ++round) {
        std::vector<const FedClient*> selected;
        if (n_selected >= members.size()) {
            for (const auto& m : members) selected.push_back(&m);
        } else {
            std::vector<std::size_t> idx(members.size());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            Rng rng(derive_seed(experiment_seed, "fed_select", std::uint64_t(round)));
            rng.shuffle(idx);
            idx.resize(n_selected);
            std::sort(idx.begin(), idx.end());
            for (std::size_t i : idx) selected.push_back(&members[i]);
        }

        std::vector<ClientUpdate> updates;
        updates.reserve(selected.size());
        double loss_sum = 0.0;
        for (const FedClient* c : selected) {
            auto u = client_update(global, *c->data, cfg,
                                   derive_seed(experiment_seed, "fed_client",
                                               std::uint64_t(round), std::uint64_t(c->id)));
            if (log) loss_sum += ae_loss(u.params, *c->data);
            updates.push_back(std::move(u));
        }
        global = aggregate(updates);

        if (log) {
            FedRoundStat stat;
            stat.round = round;
            stat.mean_client_loss = loss_sum / double(selected.size());
            double weighted = 0.0, total = 0.0;
            for (const FedClient* c : selected) {
                weighted += ae_loss(global, *c->data) * double(c->data->rows);
                total += double(c->data->rows);
            }
            stat.global_loss = weighted / total;
            log->push_back(stat);
        }
    }
    return global;
}

} // namespace fedad
