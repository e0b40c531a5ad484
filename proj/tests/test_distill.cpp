#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "modelmesh/distill.hpp"
#include "modelmesh/errors.hpp"
#include "modelmesh/ml.hpp"
#include "modelmesh/rng.hpp"
#include "modelmesh/vault.hpp"

#include "helpers.hpp"

using namespace modelmesh;
using modelmesh::testing::TempDir;
using modelmesh::testing::random_dataset;
using modelmesh::testing::random_model;

namespace {

ArchDescriptor lr_arch(uint32_t in, uint32_t classes) {
    ArchDescriptor a;
    a.kind = ArchKind::logistic_regression;
    a.input_dim = in;
    a.num_classes = classes;
    return a;
}

ArchDescriptor mlp_arch(uint32_t in, std::vector<uint32_t> hidden, uint32_t classes) {
    ArchDescriptor a;
    a.kind = ArchKind::mlp;
    a.input_dim = in;
    a.hidden_dims = std::move(hidden);
    a.num_classes = classes;
    return a;
}

double fd_loss(const Model& student, const Model& teacher, const ClientDataset& batch,
               const DistillConfig& cfg) {
    return distill_loss_and_grad(student, teacher, batch, cfg).first;
}

Query permissive_query(const ArchDescriptor& arch, std::optional<std::string> exclude) {
    Query q;
    q.required_arch = arch;
    q.predicates.push_back({Metric::overall_accuracy, 0, PredicateOp::ge, 0.0});
    q.exclude_owner = std::move(exclude);
    return q;
}

}  // namespace

TEST_CASE("mix zero reduces the loss to plain cross-entropy") {
    Rng rng(11);
    const Model student = random_model(lr_arch(4, 3), rng);
    const Model teacher = random_model(lr_arch(4, 3), rng);
    const ClientDataset batch = random_dataset(9, 4, 3, rng);

    DistillConfig cfg;
    cfg.mix = 0.0;
    cfg.temperature = 3.0;
    const auto [loss, grad] = distill_loss_and_grad(student, teacher, batch, cfg);
    const auto [ce_loss, ce_grad] = ce_loss_and_grad(student, batch);
    CHECK(loss == ce_loss);
    CHECK(grad == ce_grad);
}

TEST_CASE("self-distillation at full mix is a fixed point") {
    Rng rng(12);
    const Model m = random_model(mlp_arch(3, {4}, 3), rng);
    const ClientDataset batch = random_dataset(8, 3, 3, rng);

    DistillConfig cfg;
    cfg.mix = 1.0;
    for (const double T : {1.0, 2.0, 4.0}) {
        CAPTURE(T);
        cfg.temperature = T;
        const auto [loss, grad] = distill_loss_and_grad(m, m, batch, cfg);
        CHECK(loss == 0.0);
        CHECK(grad == std::vector<double>(m.params.size(), 0.0));
    }

    SUBCASE("training against oneself changes nothing") {
        cfg.temperature = 2.0;
        cfg.epochs = 3;
        cfg.batch_size = 4;
        cfg.seed = 99;
        const Model trained = distill_train(m, m, batch, cfg);
        CHECK(trained.params == m.params);
    }
}

TEST_CASE("analytic distillation gradients match central differences") {
    Rng rng(13);
    const double h = 1e-6;
    const std::vector<ArchDescriptor> archs = {lr_arch(3, 4), mlp_arch(2, {3}, 3)};
    for (const ArchDescriptor& arch : archs) {
        const Model student = random_model(arch, rng);
        const Model teacher = random_model(arch, rng);
        const ClientDataset batch = random_dataset(6, arch.input_dim, arch.num_classes, rng);
        for (const double T : {1.0, 2.0, 4.0}) {
            for (const double lam : {0.3, 0.7, 1.0}) {
                CAPTURE(arch.hidden_dims.size());
                CAPTURE(T);
                CAPTURE(lam);
                DistillConfig cfg;
                cfg.temperature = T;
                cfg.mix = lam;
                const auto [loss, grad] = distill_loss_and_grad(student, teacher, batch, cfg);
                CHECK(std::isfinite(loss));

                double err_sq = 0.0, norm_sq = 0.0;
                for (size_t p = 0; p < student.params.size(); ++p) {
                    Model bumped = student;
                    bumped.params[p] += h;
                    const double up = fd_loss(bumped, teacher, batch, cfg);
                    bumped.params[p] = student.params[p] - h;
                    const double down = fd_loss(bumped, teacher, batch, cfg);
                    const double fd = (up - down) / (2.0 * h);
                    err_sq += (grad[p] - fd) * (grad[p] - fd);
                    norm_sq += grad[p] * grad[p];
                }
                CHECK(std::sqrt(err_sq) / std::max(1.0, std::sqrt(norm_sq)) < 1e-7);
            }
        }
    }
}

TEST_CASE("mix zero training is plain SGD") {
    Rng rng(14);
    const Model student = random_model(lr_arch(5, 3), rng);
    const Model teacher = random_model(lr_arch(5, 3), rng);
    const ClientDataset data = random_dataset(40, 5, 3, rng);

    DistillConfig cfg;
    cfg.mix = 0.0;
    cfg.temperature = 4.0;
    cfg.epochs = 3;
    cfg.batch_size = 16;
    cfg.learning_rate = 0.1;
    cfg.seed = 71;
    const Model distilled = distill_train(student, teacher, data, cfg);
    const Model plain = sgd_train(student, data, TrainConfig{3, 16, 0.1, 71});
    CHECK(distilled.params == plain.params);
}

TEST_CASE("zero epochs return the student untouched") {
    Rng rng(15);
    const Model student = random_model(lr_arch(4, 2), rng);
    const Model teacher = random_model(lr_arch(4, 2), rng);
    const ClientDataset data = random_dataset(10, 4, 2, rng);

    DistillConfig cfg;
    cfg.epochs = 0;
    cfg.mix = 0.7;
    const Model out = distill_train(student, teacher, data, cfg);
    CHECK(out.params == student.params);
    CHECK(out.arch == student.arch);
}

TEST_CASE("distill_train is deterministic and leaves the teacher frozen") {
    Rng rng(16);
    const Model student = random_model(mlp_arch(4, {5}, 3), rng);
    const Model teacher = random_model(lr_arch(4, 3), rng);
    const ClientDataset data = random_dataset(30, 4, 3, rng);

    DistillConfig cfg;
    cfg.temperature = 2.0;
    cfg.mix = 0.6;
    cfg.epochs = 2;
    cfg.batch_size = 8;
    cfg.learning_rate = 0.05;
    cfg.seed = 5;

    const std::vector<double> teacher_before = teacher.params;
    const Model once = distill_train(student, teacher, data, cfg);
    const Model twice = distill_train(student, teacher, data, cfg);
    CHECK(once.params == twice.params);
    CHECK(teacher.params == teacher_before);
    CHECK(once.params != student.params);

    SUBCASE("a different seed trains a different model") {
        cfg.seed = 6;
        CHECK(distill_train(student, teacher, data, cfg).params != once.params);
    }
}

TEST_CASE("student and teacher must agree on the io contract") {
    Rng rng(17);
    const Model student = random_model(lr_arch(4, 3), rng);
    const ClientDataset data = random_dataset(10, 4, 3, rng);
    DistillConfig cfg;

    const Model wrong_in = random_model(lr_arch(5, 3), rng);
    const Model wrong_classes = random_model(lr_arch(4, 4), rng);
    CHECK_THROWS_AS(distill_train(student, wrong_in, data, cfg), ArchError);
    CHECK_THROWS_AS(distill_train(student, wrong_classes, data, cfg), ArchError);
    CHECK_THROWS_AS(distill_loss_and_grad(student, wrong_in, data, cfg), ArchError);

    // Cross-family distillation with matching io is allowed.
    const Model mlp_teacher = random_model(mlp_arch(4, {6}, 3), rng);
    cfg.epochs = 1;
    cfg.batch_size = 4;
    CHECK_NOTHROW(distill_train(student, mlp_teacher, data, cfg));
}

TEST_CASE("distillation settings are validated") {
    DistillConfig cfg;
    CHECK_NOTHROW(validate(cfg));
    cfg.temperature = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = DistillConfig{};
    cfg.mix = -0.1;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg.mix = 1.1;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = DistillConfig{};
    cfg.batch_size = 0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);
    cfg = DistillConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(validate(cfg), ConfigError);

    SUBCASE("json round-trip keeps the tunables and omits the seed") {
        DistillConfig tuned;
        tuned.temperature = 4.0;
        tuned.mix = 0.25;
        tuned.epochs = 7;
        tuned.batch_size = 16;
        tuned.learning_rate = 0.01;
        tuned.seed = 123;
        nlohmann::json j = tuned;
        CHECK_FALSE(j.contains("seed"));
        const DistillConfig back = j.get<DistillConfig>();
        CHECK(back.temperature == tuned.temperature);
        CHECK(back.mix == tuned.mix);
        CHECK(back.epochs == tuned.epochs);
        CHECK(back.batch_size == tuned.batch_size);
        CHECK(back.learning_rate == tuned.learning_rate);
        CHECK(back.seed == 0);
    }
}

TEST_CASE("run_mdd without a teacher falls back to local training") {
    TempDir dir("mdd-none");
    Vault vault(dir.path / "vault");
    Rng rng(18);
    vault.register_public_dataset("public", random_dataset(40, 4, 3, rng));

    const ArchDescriptor arch = lr_arch(4, 3);
    const Model init = random_model(arch, rng, 0.1);
    const ClientDataset party = random_dataset(25, 4, 3, rng);

    MddConfig cfg;
    cfg.pretrain = TrainConfig{2, 8, 0.05, 31};
    cfg.query = permissive_query(arch, "party-3");
    cfg.distill.temperature = 2.0;
    cfg.distill.mix = 0.5;
    cfg.distill.epochs = 2;
    cfg.distill.batch_size = 8;
    cfg.distill.seed = 32;

    const auto [model, prov] = run_mdd(party, vault, cfg, init);
    CHECK(prov.outcome == "no-teacher");
    CHECK_FALSE(prov.teacher_id.has_value());
    CHECK_FALSE(prov.teacher_score.has_value());
    CHECK(prov.query_text == serialize_query(cfg.query));
    CHECK(prov.exclude_owner == std::optional<std::string>("party-3"));
    CHECK(prov.pretrain_seed == 31);
    CHECK(prov.distill_seed == 32);
    CHECK(model.params == sgd_train(init, party, cfg.pretrain).params);

    const nlohmann::json j = prov;
    CHECK(j.at("outcome") == "no-teacher");
    CHECK(j.at("teacher_id").is_null());
    CHECK(j.at("teacher_score").is_null());
    CHECK(j.at("exclude_owner") == "party-3");
}

TEST_CASE("run_mdd distills the matched teacher") {
    TempDir dir("mdd-teacher");
    Vault vault(dir.path / "vault");
    Rng rng(19);
    vault.register_public_dataset("public", random_dataset(40, 4, 3, rng));

    const ArchDescriptor arch = lr_arch(4, 3);
    const Model teacher = random_model(arch, rng);
    const ModelId teacher_id = vault.store(teacher, "other", {"fl"}, 1.0);

    const Model init = random_model(arch, rng, 0.1);
    const ClientDataset party = random_dataset(25, 4, 3, rng);

    MddConfig cfg;
    cfg.pretrain = TrainConfig{2, 8, 0.05, 41};
    cfg.query = permissive_query(arch, "party-0");
    cfg.distill.temperature = 4.0;
    cfg.distill.mix = 0.5;
    cfg.distill.epochs = 2;
    cfg.distill.batch_size = 8;
    cfg.distill.seed = 42;

    const auto [model, prov] = run_mdd(party, vault, cfg, init);
    CHECK(prov.outcome == "distilled");
    REQUIRE(prov.teacher_id.has_value());
    CHECK(*prov.teacher_id == teacher_id);
    REQUIRE(prov.teacher_score.has_value());
    CHECK(*prov.teacher_score == vault.entry(teacher_id).quality.overall_accuracy);

    const Model pretrained = sgd_train(init, party, cfg.pretrain);
    const Model expected = distill_train(pretrained, vault.fetch(teacher_id), party, cfg.distill);
    CHECK(model.params == expected.params);

    SUBCASE("a vault holding only one's own model gives no teacher") {
        MddConfig own = cfg;
        own.query.exclude_owner = "other";
        const auto [fallback, own_prov] = run_mdd(party, vault, own, init);
        CHECK(own_prov.outcome == "no-teacher");
        CHECK(fallback.params == pretrained.params);
    }
    SUBCASE("provenance json names the teacher") {
        const nlohmann::json j = prov;
        CHECK(j.at("outcome") == "distilled");
        CHECK(j.at("teacher_id") == teacher_id);
        CHECK(j.at("query") == prov.query_text);
    }
}
