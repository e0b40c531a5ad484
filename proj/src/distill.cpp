#include "modelmesh/distill.hpp"

#include <cmath>

#include "modelmesh/errors.hpp"
#include "modelmesh/log.hpp"

namespace modelmesh {

void validate(const DistillConfig& cfg) {
    if (!(cfg.temperature > 0)) throw ConfigError("temperature must be > 0");
    if (!(cfg.mix >= 0.0 && cfg.mix <= 1.0)) throw ConfigError("mix must lie in [0, 1]");
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(cfg.learning_rate > 0)) throw ConfigError("learning_rate must be > 0");
}

void to_json(nlohmann::json& j, const DistillConfig& cfg) {
    j = nlohmann::json{{"temperature", cfg.temperature}, {"mix", cfg.mix},
                       {"epochs", cfg.epochs},           {"batch_size", cfg.batch_size},
                       {"learning_rate", cfg.learning_rate}};
}

void from_json(const nlohmann::json& j, DistillConfig& cfg) {
    cfg = DistillConfig{};
    if (j.contains("temperature")) j.at("temperature").get_to(cfg.temperature);
    if (j.contains("mix")) j.at("mix").get_to(cfg.mix);
    if (j.contains("epochs")) j.at("epochs").get_to(cfg.epochs);
    if (j.contains("batch_size")) j.at("batch_size").get_to(cfg.batch_size);
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(cfg.learning_rate);
}

void validate(const MddConfig& cfg) {
    validate(cfg.pretrain);
    validate(cfg.query);
    validate(cfg.distill);
}

namespace {

void check_compatible(const Model& student, const Model& teacher) {
    if (student.arch.input_dim != teacher.arch.input_dim ||
        student.arch.num_classes != teacher.arch.num_classes)
        throw ArchError("student and teacher disagree on input_dim or num_classes");
}

// Shared with distill_train: batch rows are given as indices into `features`.
double distill_grad_indexed(const Model& student, const ParamLayout& layout,
                            const Matrix& teacher_logits, const Matrix& features,
                            std::span<const uint32_t> labels_all, std::span<const uint32_t> idx,
                            const DistillConfig& cfg, std::vector<double>& grad) {
    const size_t n = idx.size();
    const uint32_t classes = student.arch.num_classes;
    const double T = cfg.temperature;
    const double lam = cfg.mix;

    const auto acts = detail::forward_activations(student, layout, features, idx);
    const Matrix& logits = acts.back();

    double loss = 0.0;
    Matrix dlogits(n, classes);
    std::vector<double> scaled_s(classes), scaled_t(classes);
    for (size_t i = 0; i < n; ++i) {
        std::span<const double> zs(logits.row(i), classes);
        const uint32_t y = labels_all[idx[i]];
        const auto lsm = log_softmax(zs);

        for (uint32_t c = 0; c < classes; ++c) scaled_s[c] = zs[c] / T;
        const double* zt = teacher_logits.row(idx[i]);
        for (uint32_t c = 0; c < classes; ++c) scaled_t[c] = zt[c] / T;
        const auto lsm_s_T = log_softmax(scaled_s);
        const auto lsm_t_T = log_softmax(scaled_t);

        // (1-λ)·CE + λ·T²·KL(p_t^T ‖ p_s^T)
        double kl = 0.0;
        for (uint32_t c = 0; c < classes; ++c) {
            const double pt = std::exp(lsm_t_T[c]);
            kl += pt * (lsm_t_T[c] - lsm_s_T[c]);
        }
        loss += (1.0 - lam) * -lsm[y] + lam * T * T * kl;

        double* di = dlogits.row(i);
        for (uint32_t c = 0; c < classes; ++c) {
            const double ps = std::exp(lsm[c]);
            const double ps_T = std::exp(lsm_s_T[c]);
            const double pt_T = std::exp(lsm_t_T[c]);
            const double hard = (1.0 - lam) * (ps - (c == y ? 1.0 : 0.0));
            const double soft = lam * T * (ps_T - pt_T);
            di[c] = (hard + soft) / static_cast<double>(n);
        }
    }
    detail::backprop_from_dlogits(student, layout, acts, dlogits, grad);
    return loss / static_cast<double>(n);
}

}  // namespace

std::pair<double, std::vector<double>> distill_loss_and_grad(const Model& student,
                                                             const Model& teacher,
                                                             const ClientDataset& batch,
                                                             const DistillConfig& cfg) {
    validate(student);
    validate(teacher);
    validate(batch);
    validate(cfg);
    check_compatible(student, teacher);
    if (batch.size() == 0) throw PreconditionError("loss of an empty batch is undefined");
    if (batch.features.cols != student.arch.input_dim)
        throw ShapeError("batch input_dim != arch input_dim");
    if (batch.num_classes != student.arch.num_classes)
        throw ShapeError("batch num_classes != arch num_classes");

    if (cfg.mix == 0.0) return ce_loss_and_grad(student, batch);

    const ParamLayout layout = ParamLayout::of(student.arch);
    const Matrix teacher_logits = forward(teacher, batch.features);
    std::vector<uint32_t> idx(batch.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<uint32_t>(i);
    std::vector<double> grad(student.params.size(), 0.0);
    const double loss = distill_grad_indexed(student, layout, teacher_logits, batch.features,
                                             batch.labels, idx, cfg, grad);
    return {loss, std::move(grad)};
}

Model distill_train(const Model& student, const Model& teacher, const ClientDataset& data,
                    const DistillConfig& cfg) {
    validate(cfg);
    validate(teacher);
    check_compatible(student, teacher);
    if (cfg.epochs == 0) {
        validate(student);
        return student;
    }

    if (cfg.mix == 0.0) {
        // Pure hard-label training; reuse the CE path bit for bit.
        TrainConfig plain{cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.seed};
        return sgd_train(student, data, plain);
    }

    const ParamLayout layout = ParamLayout::of(student.arch);
    const Matrix teacher_logits = forward(teacher, data.features);
    return detail::run_sgd(
        student, data, cfg.epochs, cfg.batch_size, cfg.learning_rate, cfg.seed,
        [&](const Model& m, std::span<const uint32_t> batch, std::vector<double>& grad) {
            return distill_grad_indexed(m, layout, teacher_logits, data.features, data.labels,
                                        batch, cfg, grad);
        });
}

void to_json(nlohmann::json& j, const MddProvenance& p) {
    j = nlohmann::json{{"outcome", p.outcome},
                       {"query", p.query_text},
                       {"pretrain_seed", p.pretrain_seed},
                       {"distill_seed", p.distill_seed}};
    j["teacher_id"] = p.teacher_id ? nlohmann::json(*p.teacher_id) : nlohmann::json(nullptr);
    j["teacher_score"] =
        p.teacher_score ? nlohmann::json(*p.teacher_score) : nlohmann::json(nullptr);
    j["exclude_owner"] =
        p.exclude_owner ? nlohmann::json(*p.exclude_owner) : nlohmann::json(nullptr);
}

std::pair<Model, MddProvenance> run_mdd(const ClientDataset& party_data, const Vault& vault,
                                        const MddConfig& cfg, const Model& init) {
    validate(cfg);
    MddProvenance prov;
    prov.query_text = serialize_query(cfg.query);
    prov.exclude_owner = cfg.query.exclude_owner;
    prov.pretrain_seed = cfg.pretrain.seed;
    prov.distill_seed = cfg.distill.seed;

    const Model local = sgd_train(init, party_data, cfg.pretrain);

    const std::optional<MatchResult> found = match(cfg.query, vault.list_entries());
    if (!found) {
        prov.outcome = "no-teacher";
        return {local, prov};
    }

    prov.outcome = "distilled";
    prov.teacher_id = found->id;
    prov.teacher_score = found->score;
    const Model teacher = vault.fetch(found->id);
    Model student = distill_train(local, teacher, party_data, cfg.distill);
    log_debug("mdd: distilled teacher " + found->id.substr(0, 12) + "...");
    return {std::move(student), prov};
}

}  // namespace modelmesh
