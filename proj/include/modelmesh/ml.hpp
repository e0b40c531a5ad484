#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "modelmesh/model.hpp"

namespace modelmesh {

struct ClientDataset {
    Matrix features;               // n_samples x input_dim
    std::vector<uint32_t> labels;  // class indices
    uint32_t num_classes = 2;

    size_t size() const { return labels.size(); }

    bool operator==(const ClientDataset&) const = default;
};

void validate(const ClientDataset& ds);

struct TrainConfig {
    uint32_t epochs = 1;
    uint32_t batch_size = 32;
    double learning_rate = 0.05;
    uint64_t seed = 0;
};

void validate(const TrainConfig& cfg);

// Seeds never live in config files (they are derived per run), so JSON
// carries epochs/batch_size/learning_rate only.
void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

struct QualityReport {
    double overall_accuracy = 0.0;
    // One entry per class of the evaluation dataset; nullopt where the class
    // has no samples (serialized as JSON null).
    std::vector<std::optional<double>> per_class_accuracy;
    std::string eval_dataset_id;
    uint64_t num_eval_samples = 0;

    bool operator==(const QualityReport&) const = default;
};

void to_json(nlohmann::json& j, const QualityReport& q);
void from_json(const nlohmann::json& j, QualityReport& q);

// Pre-softmax logits, one row per sample. MLP hidden activations are ReLU.
Matrix forward(const Model& model, const Matrix& features);

// Numerically stable softmax (max subtraction).
std::vector<double> softmax(std::span<const double> logits);

std::vector<double> log_softmax(std::span<const double> logits);

// Mean cross-entropy over the batch plus its gradient w.r.t. model.params.
std::pair<double, std::vector<double>> ce_loss_and_grad(const Model& model,
                                                        const ClientDataset& batch);

// Mini-batch SGD: epochs x ceil(n/batch_size) steps. Batch membership comes
// from a per-epoch permutation keyed by (cfg.seed, epoch); within a batch,
// samples are visited in ascending dataset order so gradient sums have a
// canonical order. The input model is not modified.
Model sgd_train(const Model& model, const ClientDataset& data, const TrainConfig& cfg);

// Argmax prediction with ties broken toward the lowest class index.
QualityReport evaluate(const Model& model, const ClientDataset& data,
                       const std::string& eval_dataset_id = "");

namespace detail {

// Gradient callback for the shared SGD loop: fills `grad` (pre-sized to the
// model's param count) for the given batch, returns the batch loss.
using GradFn = std::function<double(const Model& model, std::span<const uint32_t> batch,
                                    std::vector<double>& grad)>;

Model run_sgd(const Model& model, const ClientDataset& data, uint32_t epochs,
              uint32_t batch_size, double learning_rate, uint64_t seed, const GradFn& grad_fn);

// Forward pass over a subset of rows, keeping per-layer activations
// (activations[0] is the input batch; the last entry is the logits).
std::vector<Matrix> forward_activations(const Model& model, const ParamLayout& layout,
                                        const Matrix& features, std::span<const uint32_t> idx);

// Backpropagate d(loss)/d(logits) through the cached activations into a
// flat gradient over model.params (accumulated, caller zeroes beforehand).
void backprop_from_dlogits(const Model& model, const ParamLayout& layout,
                           const std::vector<Matrix>& activations, const Matrix& dlogits,
                           std::vector<double>& grad);

// CE loss and gradient over a row subset; shared by ce_loss_and_grad and the
// training loops.
double ce_loss_and_grad_indexed(const Model& model, const ParamLayout& layout,
                                const Matrix& features, std::span<const uint32_t> labels_all,
                                std::span<const uint32_t> idx, std::vector<double>& grad);

}  // namespace detail

}  // namespace modelmesh
