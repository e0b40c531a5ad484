#include "modelmesh/federation.hpp"

#include <algorithm>
#include <cmath>

#include "modelmesh/errors.hpp"
#include "modelmesh/log.hpp"
#include "modelmesh/model.hpp"
#include "modelmesh/rng.hpp"

namespace modelmesh {

void validate(const FLConfig& cfg) {
    if (cfg.num_rounds == 0) throw ConfigError("num_rounds must be positive");
    if (cfg.clients_per_round == 0) throw ConfigError("clients_per_round must be positive");
    validate(cfg.local);
    if (!(cfg.round_deadline > 0.0) || !std::isfinite(cfg.round_deadline))
        throw ConfigError("round_deadline must be positive and finite");
}

void to_json(nlohmann::json& j, const FLConfig& cfg) {
    j = nlohmann::json{{"num_rounds", cfg.num_rounds},
                       {"clients_per_round", cfg.clients_per_round},
                       {"local", cfg.local},
                       {"round_deadline", cfg.round_deadline}};
}

void from_json(const nlohmann::json& j, FLConfig& cfg) {
    cfg = FLConfig{};
    if (j.contains("num_rounds")) j.at("num_rounds").get_to(cfg.num_rounds);
    if (j.contains("clients_per_round")) j.at("clients_per_round").get_to(cfg.clients_per_round);
    if (j.contains("local")) j.at("local").get_to(cfg.local);
    if (j.contains("round_deadline")) j.at("round_deadline").get_to(cfg.round_deadline);
}

std::string to_string(DropReason r) {
    switch (r) {
        case DropReason::unavailable: return "unavailable";
        case DropReason::deadline: return "deadline";
    }
    throw ConfigError("unknown drop reason");
}

void to_json(nlohmann::json& j, const RoundReport& r) {
    nlohmann::json dropped = nlohmann::json::array();
    for (const auto& [id, reason] : r.dropped)
        dropped.push_back({{"client", id}, {"reason", to_string(reason)}});
    j = nlohmann::json{{"round", r.round_index},
                       {"selected", r.selected},
                       {"completed", r.completed},
                       {"dropped", std::move(dropped)},
                       {"round_duration", r.round_duration},
                       {"global_eval", r.global_eval}};
}

std::vector<uint32_t> select_clients(const std::vector<uint32_t>& available, uint32_t k,
                                     uint32_t round, uint64_t seed) {
    if (available.size() <= k) {
        std::vector<uint32_t> all = available;
        std::sort(all.begin(), all.end());
        return all;
    }
    Rng rng(derive_seed(seed, "round", round));
    // Partial Fisher-Yates: the first k slots end up a uniform sample.
    std::vector<uint32_t> pool = available;
    for (uint32_t i = 0; i < k; ++i) {
        const uint64_t j = i + rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    std::sort(pool.begin(), pool.end());
    return pool;
}

Model aggregate(const std::vector<std::pair<Model, uint64_t>>& updates) {
    if (updates.empty()) throw AggregationError("aggregate requires at least one update");
    const Model& head = updates.front().first;
    uint64_t total = 0;
    for (const auto& [model, n] : updates) {
        if (model.arch != head.arch) throw ArchError("aggregate: architecture mismatch");
        if (model.params.size() != head.params.size())
            throw ArchError("aggregate: parameter count mismatch");
        if (n == 0) throw AggregationError("aggregate: zero-sample update");
        total += n;
    }
    Model out = zero_model(head.arch);
    for (const auto& [model, n] : updates) {
        const double w = static_cast<double>(n) / static_cast<double>(total);
        for (size_t i = 0; i < out.params.size(); ++i) out.params[i] += w * model.params[i];
    }
    return out;
}

namespace {

std::vector<uint32_t> resolve_participants(const FederatedDataset& ds,
                                           std::span<const uint32_t> participants) {
    std::vector<uint32_t> ids;
    if (participants.empty()) {
        ids.resize(ds.clients.size());
        for (uint32_t i = 0; i < ids.size(); ++i) ids[i] = i;
    } else {
        ids.assign(participants.begin(), participants.end());
        std::sort(ids.begin(), ids.end());
        for (uint32_t id : ids)
            if (id >= ds.clients.size())
                throw PreconditionError("participant id out of range");
    }
    return ids;
}

}  // namespace

double default_round_deadline(const FederatedDataset& ds, const TrainConfig& local,
                              uint64_t model_bytes, std::span<const uint32_t> participants) {
    const std::vector<uint32_t> ids = resolve_participants(ds, participants);
    if (ids.empty()) throw PreconditionError("deadline needs a nonempty population");
    const ClientProfile ref{0, default_device(DeviceClass::high), always_on_trace()};
    std::vector<double> durations;
    durations.reserve(ids.size());
    for (uint32_t id : ids)
        durations.push_back(simulate_client_time(ref, ds.clients[id].size(), local.epochs,
                                                 model_bytes));
    std::sort(durations.begin(), durations.end());
    // Nearest-rank p90: the ceil(0.9 n)-th smallest.
    const size_t rank = static_cast<size_t>(
        std::ceil(0.9 * static_cast<double>(durations.size())));
    return durations[rank - 1];
}

FLResult run_fl(const FederatedDataset& ds, const std::vector<ClientProfile>& profiles,
                const FLConfig& cfg, const Model& init,
                std::span<const uint32_t> participants) {
    validate(cfg);
    validate(init);
    if (profiles.size() != ds.clients.size())
        throw PreconditionError("one profile per client required");
    const std::vector<uint32_t> ids = resolve_participants(ds, participants);
    if (ids.empty()) throw PreconditionError("run_fl needs a nonempty population");
    const uint64_t model_bytes = serialize_model(init).size();

    FLResult result;
    result.global = init;
    result.rounds.reserve(cfg.num_rounds);
    double clock = 0.0;

    for (uint32_t round = 0; round < cfg.num_rounds; ++round) {
        RoundReport report;
        report.round_index = round;

        std::vector<uint32_t> available;
        for (uint32_t id : ids)
            if (is_available(profiles[id], clock, clock)) available.push_back(id);

        report.selected =
            select_clients(available, cfg.clients_per_round, round, cfg.selection_seed);

        std::vector<std::pair<Model, uint64_t>> updates;
        double slowest_completer = 0.0;
        for (uint32_t id : report.selected) {
            const ClientDataset& data = ds.clients[id];
            const double duration = simulate_client_time(
                profiles[id], data.size(), cfg.local.epochs, model_bytes);
            if (duration > cfg.round_deadline) {
                report.dropped.emplace_back(id, DropReason::deadline);
                continue;
            }
            if (!is_available(profiles[id], clock, clock + duration)) {
                report.dropped.emplace_back(id, DropReason::unavailable);
                continue;
            }
            TrainConfig local = cfg.local;
            local.seed = derive_seed(derive_seed(cfg.local.seed, "round", round), "client", id);
            updates.emplace_back(sgd_train(result.global, data, local), data.size());
            report.completed.push_back(id);
            slowest_completer = std::max(slowest_completer, duration);
        }

        if (!updates.empty()) {
            result.global = aggregate(updates);
            report.round_duration = std::min(cfg.round_deadline, slowest_completer);
        } else {
            // Nobody reported back; the global model carries over unchanged.
            report.round_duration = cfg.round_deadline;
        }

        report.global_eval = evaluate(result.global, ds.public_holdout, "public_holdout");
        clock += report.round_duration;
        log_debug("round " + std::to_string(round) + ": " +
                  std::to_string(report.completed.size()) + "/" +
                  std::to_string(report.selected.size()) + " completed, acc=" +
                  std::to_string(report.global_eval.overall_accuracy));
        result.rounds.push_back(std::move(report));
    }

    result.total_virtual_seconds = clock;
    return result;
}

}  // namespace modelmesh
