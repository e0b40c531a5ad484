#include "modelmesh/ml.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modelmesh/rng.hpp"

namespace modelmesh {

void validate(const ClientDataset& ds) {
    if (ds.features.data.size() != ds.features.rows * ds.features.cols)
        throw ShapeError("dataset feature matrix is malformed");
    if (ds.labels.size() != ds.features.rows)
        throw ShapeError("labels length " + std::to_string(ds.labels.size()) +
                         " != n_samples " + std::to_string(ds.features.rows));
    if (ds.num_classes < 2) throw ConfigError("dataset num_classes must be >= 2");
    for (const uint32_t y : ds.labels)
        if (y >= ds.num_classes)
            throw ShapeError("label " + std::to_string(y) + " out of range [0, " +
                             std::to_string(ds.num_classes) + ")");
}

void validate(const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(cfg.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
    j = nlohmann::json{{"epochs", cfg.epochs},
                       {"batch_size", cfg.batch_size},
                       {"learning_rate", cfg.learning_rate}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
    cfg = TrainConfig{};
    if (j.contains("epochs")) j.at("epochs").get_to(cfg.epochs);
    if (j.contains("batch_size")) j.at("batch_size").get_to(cfg.batch_size);
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(cfg.learning_rate);
}

void to_json(nlohmann::json& j, const QualityReport& q) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& a : q.per_class_accuracy) {
        if (a.has_value())
            per.push_back(*a);
        else
            per.push_back(nullptr);
    }
    j = nlohmann::json{{"overall_accuracy", q.overall_accuracy},
                       {"per_class_accuracy", per},
                       {"eval_dataset_id", q.eval_dataset_id},
                       {"num_eval_samples", q.num_eval_samples}};
}

void from_json(const nlohmann::json& j, QualityReport& q) {
    q.overall_accuracy = j.at("overall_accuracy").get<double>();
    q.per_class_accuracy.clear();
    for (const auto& v : j.at("per_class_accuracy")) {
        if (v.is_null())
            q.per_class_accuracy.push_back(std::nullopt);
        else
            q.per_class_accuracy.push_back(v.get<double>());
    }
    q.eval_dataset_id = j.at("eval_dataset_id").get<std::string>();
    q.num_eval_samples = j.at("num_eval_samples").get<uint64_t>();
}

namespace detail {

std::vector<Matrix> forward_activations(const Model& model, const ParamLayout& layout,
                                        const Matrix& features, std::span<const uint32_t> idx) {
    const size_t n = idx.size();
    std::vector<Matrix> acts;
    acts.reserve(layout.shapes.size() + 1);

    Matrix input(n, features.cols);
    for (size_t i = 0; i < n; ++i) {
        const double* src = features.row(idx[i]);
        std::copy(src, src + features.cols, input.row(i));
    }
    acts.push_back(std::move(input));

    for (size_t l = 0; l < layout.shapes.size(); ++l) {
        const auto [in, out] = layout.shapes[l];
        const double* w = model.params.data() + layout.weight_offset[l];
        const double* b = model.params.data() + layout.bias_offset[l];
        const Matrix& a = acts.back();
        Matrix z(n, out);
        for (size_t i = 0; i < n; ++i) {
            const double* ai = a.row(i);
            double* zi = z.row(i);
            for (uint32_t o = 0; o < out; ++o) {
                const double* wo = w + static_cast<size_t>(o) * in;
                double acc = b[o];
                for (uint32_t k = 0; k < in; ++k) acc += wo[k] * ai[k];
                zi[o] = acc;
            }
        }
        const bool is_last = (l + 1 == layout.shapes.size());
        if (!is_last) {
            for (double& v : z.data) v = v > 0.0 ? v : 0.0;  // ReLU
        }
        acts.push_back(std::move(z));
    }
    return acts;
}

void backprop_from_dlogits(const Model& model, const ParamLayout& layout,
                           const std::vector<Matrix>& activations, const Matrix& dlogits,
                           std::vector<double>& grad) {
    const size_t num_layers = layout.shapes.size();
    const size_t n = dlogits.rows;
    Matrix dz = dlogits;
    for (size_t l = num_layers; l-- > 0;) {
        const auto [in, out] = layout.shapes[l];
        const Matrix& a_prev = activations[l];
        double* gw = grad.data() + layout.weight_offset[l];
        double* gb = grad.data() + layout.bias_offset[l];
        for (size_t i = 0; i < n; ++i) {
            const double* dzi = dz.row(i);
            const double* ai = a_prev.row(i);
            for (uint32_t o = 0; o < out; ++o) {
                const double d = dzi[o];
                if (d == 0.0) continue;
                double* gwo = gw + static_cast<size_t>(o) * in;
                for (uint32_t k = 0; k < in; ++k) gwo[k] += d * ai[k];
                gb[o] += d;
            }
        }
        if (l == 0) break;
        // Propagate into the previous hidden layer through its ReLU.
        const double* w = model.params.data() + layout.weight_offset[l];
        Matrix dprev(n, in);
        for (size_t i = 0; i < n; ++i) {
            const double* dzi = dz.row(i);
            const double* ai = a_prev.row(i);
            double* dpi = dprev.row(i);
            for (uint32_t k = 0; k < in; ++k) {
                if (ai[k] <= 0.0) continue;  // ReLU gate (a > 0 iff z > 0)
                double acc = 0.0;
                for (uint32_t o = 0; o < out; ++o)
                    acc += dzi[o] * w[static_cast<size_t>(o) * in + k];
                dpi[k] = acc;
            }
        }
        dz = std::move(dprev);
    }
}

double ce_loss_and_grad_indexed(const Model& model, const ParamLayout& layout,
                                const Matrix& features, std::span<const uint32_t> labels_all,
                                std::span<const uint32_t> idx, std::vector<double>& grad) {
    const size_t n = idx.size();
    const uint32_t classes = model.arch.num_classes;
    const auto acts = forward_activations(model, layout, features, idx);
    const Matrix& logits = acts.back();

    double loss = 0.0;
    Matrix dlogits(n, classes);
    for (size_t i = 0; i < n; ++i) {
        const uint32_t y = labels_all[idx[i]];
        std::span<const double> zi(logits.row(i), classes);
        const auto lsm = log_softmax(zi);
        loss += -lsm[y];
        double* di = dlogits.row(i);
        for (uint32_t c = 0; c < classes; ++c)
            di[c] = (std::exp(lsm[c]) - (c == y ? 1.0 : 0.0)) / static_cast<double>(n);
    }
    backprop_from_dlogits(model, layout, acts, dlogits, grad);
    return loss / static_cast<double>(n);
}

Model run_sgd(const Model& model, const ClientDataset& data, uint32_t epochs,
              uint32_t batch_size, double learning_rate, uint64_t seed,
              const GradFn& grad_fn) {
    validate(model);
    validate(data);
    if (data.size() == 0) throw PreconditionError("cannot train on an empty dataset");
    if (data.features.cols != model.arch.input_dim)
        throw ShapeError("dataset input_dim " + std::to_string(data.features.cols) +
                         " != arch input_dim " + std::to_string(model.arch.input_dim));
    if (data.num_classes != model.arch.num_classes)
        throw ShapeError("dataset num_classes != arch num_classes");

    Model out = model;
    const uint32_t n = static_cast<uint32_t>(data.size());
    std::vector<double> grad(out.params.size());
    for (uint32_t epoch = 0; epoch < epochs; ++epoch) {
        auto perm = random_permutation(n, derive_seed(seed, "epoch", epoch));
        for (uint32_t start = 0; start < n; start += batch_size) {
            const uint32_t len = std::min(batch_size, n - start);
            std::span<uint32_t> batch(perm.data() + start, len);
            // Canonical visit order inside the batch; the shuffle decides
            // membership only.
            std::sort(batch.begin(), batch.end());
            std::fill(grad.begin(), grad.end(), 0.0);
            grad_fn(out, batch, grad);
            for (size_t i = 0; i < out.params.size(); ++i)
                out.params[i] -= learning_rate * grad[i];
        }
    }
    return out;
}

}  // namespace detail

Matrix forward(const Model& model, const Matrix& features) {
    validate(model);
    if (features.cols != model.arch.input_dim)
        throw ShapeError("features cols " + std::to_string(features.cols) +
                         " != arch input_dim " + std::to_string(model.arch.input_dim));
    const ParamLayout layout = ParamLayout::of(model.arch);
    std::vector<uint32_t> idx(features.rows);
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<uint32_t>(i);
    auto acts = detail::forward_activations(model, layout, features, idx);
    return std::move(acts.back());
}

std::vector<double> softmax(std::span<const double> logits) {
    const auto lsm = log_softmax(logits);
    std::vector<double> p(lsm.size());
    for (size_t i = 0; i < lsm.size(); ++i) p[i] = std::exp(lsm[i]);
    return p;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    double mx = -std::numeric_limits<double>::infinity();
    for (const double z : logits) mx = std::max(mx, z);
    double sum = 0.0;
    for (const double z : logits) sum += std::exp(z - mx);
    const double lse = mx + std::log(sum);
    std::vector<double> out(logits.size());
    for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
    return out;
}

std::pair<double, std::vector<double>> ce_loss_and_grad(const Model& model,
                                                        const ClientDataset& batch) {
    validate(model);
    validate(batch);
    if (batch.size() == 0) throw PreconditionError("loss of an empty batch is undefined");
    if (batch.features.cols != model.arch.input_dim)
        throw ShapeError("batch input_dim != arch input_dim");
    if (batch.num_classes != model.arch.num_classes)
        throw ShapeError("batch num_classes != arch num_classes");
    const ParamLayout layout = ParamLayout::of(model.arch);
    std::vector<uint32_t> idx(batch.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<uint32_t>(i);
    std::vector<double> grad(model.params.size(), 0.0);
    const double loss =
        detail::ce_loss_and_grad_indexed(model, layout, batch.features, batch.labels, idx, grad);
    return {loss, std::move(grad)};
}

Model sgd_train(const Model& model, const ClientDataset& data, const TrainConfig& cfg) {
    validate(cfg);
    const ParamLayout layout = ParamLayout::of(model.arch);
    return detail::run_sgd(model, data, cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.seed,
                           [&layout, &data](const Model& m, std::span<const uint32_t> batch,
                                            std::vector<double>& grad) {
                               return detail::ce_loss_and_grad_indexed(
                                   m, layout, data.features, data.labels, batch, grad);
                           });
}

QualityReport evaluate(const Model& model, const ClientDataset& data,
                       const std::string& eval_dataset_id) {
    validate(model);
    validate(data);
    if (data.size() == 0) throw PreconditionError("cannot evaluate on an empty dataset");
    if (data.features.cols != model.arch.input_dim)
        throw ShapeError("dataset input_dim != arch input_dim");
    if (data.num_classes != model.arch.num_classes)
        throw ShapeError("dataset num_classes != arch num_classes");

    const Matrix logits = forward(model, data.features);
    const uint32_t classes = data.num_classes;
    std::vector<uint64_t> total(classes, 0), correct(classes, 0);
    for (size_t i = 0; i < data.size(); ++i) {
        const double* zi = logits.row(i);
        uint32_t pred = 0;
        for (uint32_t c = 1; c < classes; ++c)
            if (zi[c] > zi[pred]) pred = c;  // ties keep the lowest index
        const uint32_t y = data.labels[i];
        ++total[y];
        if (pred == y) ++correct[y];
    }

    QualityReport report;
    report.eval_dataset_id = eval_dataset_id;
    report.num_eval_samples = data.size();
    uint64_t correct_sum = 0;
    for (uint32_t c = 0; c < classes; ++c) {
        correct_sum += correct[c];
        if (total[c] == 0)
            report.per_class_accuracy.push_back(std::nullopt);
        else
            report.per_class_accuracy.push_back(static_cast<double>(correct[c]) /
                                                static_cast<double>(total[c]));
    }
    report.overall_accuracy = static_cast<double>(correct_sum) / static_cast<double>(data.size());
    return report;
}

}  // namespace modelmesh
