#pragma once

#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "modelmesh/discovery.hpp"
#include "modelmesh/ml.hpp"
#include "modelmesh/model.hpp"
#include "modelmesh/vault.hpp"

namespace modelmesh {

struct DistillConfig {
    double temperature = 2.0;
    double mix = 0.7;  // λ: weight of the soft-target term
    uint32_t epochs = 5;
    uint32_t batch_size = 32;
    double learning_rate = 0.05;
    uint64_t seed = 0;
};

void validate(const DistillConfig& cfg);
void to_json(nlohmann::json& j, const DistillConfig& cfg);
void from_json(const nlohmann::json& j, DistillConfig& cfg);

struct MddConfig {
    TrainConfig pretrain{.epochs = 5};
    Query query;
    DistillConfig distill;
};

void validate(const MddConfig& cfg);

// loss = (1-λ)·CE(labels, softmax(z_s)) + λ·T²·KL(softmax(z_t/T) ‖ softmax(z_s/T)),
// mean over the batch; gradient w.r.t. the student only.
std::pair<double, std::vector<double>> distill_loss_and_grad(const Model& student,
                                                             const Model& teacher,
                                                             const ClientDataset& batch,
                                                             const DistillConfig& cfg);

// Same batching contract as sgd_train, stepping on the distillation loss.
Model distill_train(const Model& student, const Model& teacher, const ClientDataset& data,
                    const DistillConfig& cfg);

struct MddProvenance {
    std::string outcome;  // "distilled" or "no-teacher"
    std::optional<ModelId> teacher_id;
    std::optional<double> teacher_score;
    std::string query_text;
    std::optional<std::string> exclude_owner;
    uint64_t pretrain_seed = 0;
    uint64_t distill_seed = 0;
};

void to_json(nlohmann::json& j, const MddProvenance& p);

// Pretrain on local data, look for a teacher in the vault, distill it in on
// local data. The teacher stays frozen.
std::pair<Model, MddProvenance> run_mdd(const ClientDataset& party_data, const Vault& vault,
                                        const MddConfig& cfg, const Model& init);

}  // namespace modelmesh
