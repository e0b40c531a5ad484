#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "modelmesh/datagen.hpp"
#include "modelmesh/heterogeneity.hpp"
#include "modelmesh/ml.hpp"

namespace modelmesh {

struct FLConfig {
    uint32_t num_rounds = 50;
    uint32_t clients_per_round = 10;
    TrainConfig local;
    double round_deadline = 0.0;  // seconds; must be resolved (> 0) before run_fl
    uint64_t selection_seed = 0;
};

void validate(const FLConfig& cfg);

// round_deadline <= 0 in a config file means "use the p90 default".
void to_json(nlohmann::json& j, const FLConfig& cfg);
void from_json(const nlohmann::json& j, FLConfig& cfg);

enum class DropReason { unavailable, deadline };

std::string to_string(DropReason r);

struct RoundReport {
    uint32_t round_index = 0;
    std::vector<uint32_t> selected;
    std::vector<uint32_t> completed;
    std::vector<std::pair<uint32_t, DropReason>> dropped;
    double round_duration = 0.0;
    QualityReport global_eval;
};

void to_json(nlohmann::json& j, const RoundReport& r);

// Uniform sample without replacement from `available`, deterministic in
// (seed, round); returns everything if the pool is undersized. Result is in
// ascending id order.
std::vector<uint32_t> select_clients(const std::vector<uint32_t>& available, uint32_t k,
                                     uint32_t round, uint64_t seed);

// FedAvg: params = sum_k (n_k / sum n) * params_k.
Model aggregate(const std::vector<std::pair<Model, uint64_t>>& updates);

// 90th percentile (nearest rank) of the participants' simulated durations on
// the uniform-case device; the deadline default, shared across scenarios.
double default_round_deadline(const FederatedDataset& ds, const TrainConfig& local,
                              uint64_t model_bytes, std::span<const uint32_t> participants);

struct FLResult {
    Model global;
    std::vector<RoundReport> rounds;
    double total_virtual_seconds = 0.0;
};

// Round protocol over simulated clients: login availability at the round
// start, selection, local training, deadline/availability drops, FedAvg over
// completers, holdout evaluation, virtual clock advance.
// `participants` restricts the population (empty span = all clients).
FLResult run_fl(const FederatedDataset& ds, const std::vector<ClientProfile>& profiles,
                const FLConfig& cfg, const Model& init,
                std::span<const uint32_t> participants = {});

}  // namespace modelmesh
