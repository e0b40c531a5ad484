// Acceptance gate: ten end-to-end checks over the bundled configs, one
// pass/fail line each; the process exits nonzero if any check fails.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "modelmesh/bytes.hpp"
#include "modelmesh/datagen.hpp"
#include "modelmesh/discovery.hpp"
#include "modelmesh/distill.hpp"
#include "modelmesh/errors.hpp"
#include "modelmesh/experiment.hpp"
#include "modelmesh/federation.hpp"
#include "modelmesh/ml.hpp"
#include "modelmesh/model.hpp"
#include "modelmesh/rng.hpp"
#include "modelmesh/service.hpp"
#include "modelmesh/vault.hpp"

#include "../helpers.hpp"

using namespace modelmesh;
using modelmesh::testing::TempDir;
using modelmesh::testing::random_dataset;
using modelmesh::testing::random_model;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

ExperimentConfig bundled_config(const std::string& name) {
    return load_experiment_config(std::filesystem::path(MODELMESH_CONFIG_DIR) / name);
}

std::string slurp(const std::filesystem::path& path) {
    const std::vector<uint8_t> raw = read_file(path);
    return std::string(raw.begin(), raw.end());
}

ArchDescriptor small_arch(Rng& rng, bool mlp) {
    ArchDescriptor arch;
    arch.kind = mlp ? ArchKind::mlp : ArchKind::logistic_regression;
    arch.input_dim = 2 + static_cast<uint32_t>(rng.below(7));
    arch.num_classes = 2 + static_cast<uint32_t>(rng.below(7));
    if (mlp) arch.hidden_dims = {2 + static_cast<uint32_t>(rng.below(7))};
    return arch;
}

// Relative error between an analytic gradient and its central-difference
// estimate of `loss_at`.
double gradient_rel_err(const std::vector<double>& grad, const Model& model,
                        const std::function<double(const Model&)>& loss_at) {
    const double h = 1e-6;
    double err_sq = 0.0, norm_sq = 0.0;
    for (size_t p = 0; p < model.params.size(); ++p) {
        Model bumped = model;
        bumped.params[p] += h;
        const double up = loss_at(bumped);
        bumped.params[p] = model.params[p] - h;
        const double down = loss_at(bumped);
        const double fd = (up - down) / (2.0 * h);
        err_sq += (grad[p] - fd) * (grad[p] - fd);
        norm_sq += grad[p] * grad[p];
    }
    return std::sqrt(err_sq) / std::max(1.0, std::sqrt(norm_sq));
}

Outcome criterion_gradients() {
    const auto t0 = std::chrono::steady_clock::now();
    Rng rng(101);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        const ArchDescriptor arch = small_arch(rng, i % 2 == 1);
        const Model model = random_model(arch, rng);
        const ClientDataset batch =
            random_dataset(4 + rng.below(5), arch.input_dim, arch.num_classes, rng);
        const auto [loss, grad] = ce_loss_and_grad(model, batch);
        (void)loss;
        worst = std::max(worst, gradient_rel_err(grad, model, [&](const Model& m) {
                             return ce_loss_and_grad(m, batch).first;
                         }));
    }
    const double temperatures[] = {1.0, 2.0, 4.0};
    const double mixes[] = {0.3, 0.7, 1.0};
    for (int i = 0; i < 20; ++i) {
        const ArchDescriptor arch = small_arch(rng, i % 2 == 0);
        const Model student = random_model(arch, rng);
        const Model teacher = random_model(arch, rng);
        const ClientDataset batch =
            random_dataset(4 + rng.below(5), arch.input_dim, arch.num_classes, rng);
        DistillConfig cfg;
        cfg.temperature = temperatures[i % 3];
        cfg.mix = mixes[(i / 3) % 3];
        const auto [loss, grad] = distill_loss_and_grad(student, teacher, batch, cfg);
        (void)loss;
        worst = std::max(worst, gradient_rel_err(grad, student, [&](const Model& m) {
                             return distill_loss_and_grad(m, teacher, batch, cfg).first;
                         }));
    }
    const double elapsed = seconds_since(t0);
    Outcome o;
    o.pass = worst < 1e-5 && elapsed < 10.0;
    o.detail = "worst rel err " + format_double(worst) + ", " + fmt(elapsed) + "s";
    return o;
}

Outcome criterion_fedavg() {
    Rng rng(202);
    double worst = 0.0;
    for (int inst = 0; inst < 50; ++inst) {
        const ArchDescriptor arch = small_arch(rng, inst % 2 == 0);
        const size_t k = 1 + rng.below(6);
        std::vector<std::pair<Model, uint64_t>> updates;
        for (size_t i = 0; i < k; ++i)
            updates.emplace_back(random_model(arch, rng), 1 + rng.below(1000));

        const Model agg = aggregate(updates);
        uint64_t total = 0;
        for (const auto& [m, n] : updates) total += n;
        for (size_t p = 0; p < agg.params.size(); ++p) {
            double weighted = 0.0;
            for (const auto& [m, n] : updates)
                weighted += static_cast<double>(n) * m.params[p];
            worst = std::max(worst,
                             std::abs(agg.params[p] - weighted / static_cast<double>(total)));
        }

        const Model alone = aggregate({updates[0]});
        if (alone.params != updates[0].first.params)
            return {false, "single-update aggregation is not the identity"};
        if (k >= 2) {
            auto swapped = updates;
            std::swap(swapped[0], swapped[1]);
            if (aggregate(swapped).params != agg.params)
                return {false, "aggregation is not symmetric under a swap"};
        }
    }
    Outcome o;
    o.pass = worst <= 1e-12;
    o.detail = "worst deviation from the brute-force mean " + format_double(worst);
    return o;
}

Outcome criterion_discovery() {
    Rng rng(303);
    const std::vector<std::string> owners = {"alice", "bob", "carol"};
    int matched = 0;
    for (int inst = 0; inst < 200; ++inst) {
        std::vector<ArchDescriptor> archs;
        Rng arch_rng(400 + inst % 7);
        archs.push_back(small_arch(arch_rng, false));
        archs.push_back(small_arch(arch_rng, true));

        std::vector<VaultEntry> entries;
        const size_t n = 1 + rng.below(25);
        for (size_t i = 0; i < n; ++i) {
            VaultEntry e;
            e.id = "id-" + std::to_string(rng.below(1000));  // collisions force tie-breaks
            e.owner = owners[i % owners.size()];
            e.arch = archs[rng.below(archs.size())];
            e.quality.overall_accuracy = static_cast<double>(rng.below(5)) / 4.0;
            for (uint32_t c = 0; c < e.arch.num_classes; ++c)
                e.quality.per_class_accuracy.push_back(
                    rng.next_double() < 0.1
                        ? std::nullopt
                        : std::optional<double>(static_cast<double>(rng.below(5)) / 4.0));
            e.quality.eval_dataset_id = "public";
            e.quality.num_eval_samples = 50;
            entries.push_back(std::move(e));
        }

        Query q;
        q.required_arch = archs[rng.below(archs.size())];
        const size_t preds = 1 + rng.below(3);
        for (size_t p = 0; p < preds; ++p) {
            Predicate pred;
            if (rng.next_double() < 0.5) {
                pred.metric = Metric::overall_accuracy;
            } else {
                pred.metric = Metric::class_accuracy;
                pred.class_index = static_cast<uint32_t>(rng.below(q.required_arch.num_classes));
            }
            pred.op = rng.next_double() < 0.5 ? PredicateOp::ge : PredicateOp::gt;
            pred.threshold = static_cast<double>(rng.below(5)) / 4.0;
            q.predicates.push_back(pred);
        }
        if (rng.next_double() < 0.3) q.exclude_owner = owners[rng.below(owners.size())];

        // Reference: exhaustive scan with by-hand predicate evaluation.
        std::optional<MatchResult> want;
        for (const VaultEntry& e : entries) {
            if (e.arch != q.required_arch) continue;
            if (q.exclude_owner && e.owner == *q.exclude_owner) continue;
            double margin_sum = 0.0;
            bool all = true;
            std::vector<bool> sats;
            for (const Predicate& p : q.predicates) {
                std::optional<double> value;
                if (p.metric == Metric::overall_accuracy)
                    value = e.quality.overall_accuracy;
                else if (p.class_index < e.quality.per_class_accuracy.size())
                    value = e.quality.per_class_accuracy[p.class_index];
                const bool ok = value.has_value() &&
                                (p.op == PredicateOp::ge ? *value >= p.threshold
                                                         : *value > p.threshold);
                sats.push_back(ok);
                all = all && ok;
                if (ok) margin_sum += *value - p.threshold;
            }
            if (!all) continue;
            MatchResult r;
            r.id = e.id;
            r.score = margin_sum / static_cast<double>(q.predicates.size());
            r.satisfied = std::move(sats);
            if (!want || r.score > want->score ||
                (r.score == want->score && r.id < want->id))
                want = std::move(r);
        }

        const std::optional<MatchResult> got = match(q, entries);
        if (got.has_value() != want.has_value())
            return {false, "presence disagrees with the scan on instance " +
                               std::to_string(inst)};
        if (!got) continue;
        ++matched;
        if (got->id != want->id || got->score != want->score ||
            got->satisfied != want->satisfied)
            return {false, "winner disagrees with the scan on instance " +
                               std::to_string(inst)};
        for (const bool s : got->satisfied)
            if (!s) return {false, "a returned model violates a predicate"};
    }
    return {matched > 30, std::to_string(matched) + "/200 instances had a match"};
}

Outcome criterion_determinism() {
    ExperimentConfig cfg = bundled_config("small.json");
    TempDir first("accept-det-a");
    TempDir second("accept-det-b");

    const auto t0 = std::chrono::steady_clock::now();
    cfg.output_dir = (first.path / "out").string();
    run_experiment(cfg);
    const double single_run = seconds_since(t0);

    cfg.output_dir = (second.path / "out").string();
    run_experiment(cfg);

    const bool same_results = slurp(first.path / "out" / "results.csv") ==
                              slurp(second.path / "out" / "results.csv");
    const bool same_rounds = slurp(first.path / "out" / "rounds.jsonl") ==
                             slurp(second.path / "out" / "rounds.jsonl");
    Outcome o;
    o.pass = same_results && same_rounds && single_run < 300.0;
    o.detail = std::string(same_results ? "results.csv identical" : "results.csv DIFFERS") +
               ", " + (same_rounds ? "rounds.jsonl identical" : "rounds.jsonl DIFFERS") +
               ", " + fmt(single_run) + "s per run";
    return o;
}

Outcome criterion_heterogeneity() {
    ExperimentConfig cfg = bundled_config("small.json");
    std::vector<double> u_finals, h_finals;
    TempDir dir("accept-hetero");
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.master_seed = seed;
        cfg.output_dir = (dir.path / ("seed_" + std::to_string(seed))).string();
        run_hetero_sweep(cfg);
        std::ifstream csv(std::filesystem::path(cfg.output_dir) / "hetero_results.csv");
        std::string line;
        std::getline(csv, line);  // header
        while (std::getline(csv, line)) {
            std::stringstream row(line);
            std::string scenario, acc, time;
            std::getline(row, scenario, ',');
            std::getline(row, acc, ',');
            std::getline(row, time, ',');
            if (scenario == "U") u_finals.push_back(std::stod(acc));
            if (scenario == "H") h_finals.push_back(std::stod(acc));
        }
    }
    const auto median = [](std::vector<double> xs) {
        std::sort(xs.begin(), xs.end());
        return xs[xs.size() / 2];
    };
    const auto variance = [](const std::vector<double>& xs) {
        double mean = 0.0;
        for (const double x : xs) mean += x;
        mean /= static_cast<double>(xs.size());
        double sq = 0.0;
        for (const double x : xs) sq += (x - mean) * (x - mean);
        return sq / static_cast<double>(xs.size() - 1);
    };
    const double med_u = median(u_finals), med_h = median(h_finals);
    const double var_u = variance(u_finals), var_h = variance(h_finals);
    Outcome o;
    o.pass = (med_u - med_h >= 0.03) && (var_h > var_u);
    o.detail = "median U " + fmt(med_u) + " vs H " + fmt(med_h) + " (gap " +
               fmt(med_u - med_h) + ", need >= 0.03), variance U " + format_double(var_u) +
               " vs H " + format_double(var_h) + " (need H > U)";
    return o;
}

struct RunMeans {
    std::vector<std::pair<uint32_t, double>> ind;  // (epochs, mean accuracy)
    double fl = 0.0;
    double mdd = 0.0;
};

RunMeans means_of(const ExperimentResult& result) {
    RunMeans m;
    for (const ResultsRow& row : result.rows) {
        if (row.approach == "IND") m.ind.emplace_back(row.local_epochs, row.mean_accuracy);
        if (row.approach == "FL") m.fl = row.mean_accuracy;
        if (row.approach == "MDD") m.mdd = row.mean_accuracy;
    }
    return m;
}

Outcome criterion_mdd_efficacy() {
    const auto t0 = std::chrono::steady_clock::now();
    ExperimentConfig cfg = bundled_config("mdd_lr.json");
    TempDir dir("accept-mdd");
    std::vector<RunMeans> runs;
    for (uint64_t seed = 1; seed <= 5; ++seed) {
        cfg.master_seed = seed;
        cfg.output_dir = (dir.path / ("seed_" + std::to_string(seed))).string();
        runs.push_back(means_of(run_experiment(cfg)));
    }
    double mdd_mean = 0.0, fl_mean = 0.0;
    std::vector<double> ind_means(runs[0].ind.size(), 0.0);
    for (const RunMeans& r : runs) {
        mdd_mean += r.mdd;
        fl_mean += r.fl;
        for (size_t e = 0; e < r.ind.size(); ++e) ind_means[e] += r.ind[e].second;
    }
    mdd_mean /= 5.0;
    fl_mean /= 5.0;
    for (double& v : ind_means) v /= 5.0;
    const double ind_best = *std::max_element(ind_means.begin(), ind_means.end());
    const double ind_at_5 = ind_means[0];
    const double elapsed = seconds_since(t0);

    Outcome o;
    o.pass = (mdd_mean >= std::max(ind_best, fl_mean) - 0.005) &&
             (mdd_mean - ind_at_5 >= 0.01) && elapsed < 900.0;
    o.detail = "MDD " + fmt(mdd_mean) + " vs best IND " + fmt(ind_best) + ", FL " +
               fmt(fl_mean) + ", IND@5 " + fmt(ind_at_5) + ", " + fmt(elapsed) + "s";
    return o;
}

Outcome criterion_reduction() {
    ExperimentConfig cfg = bundled_config("small.json");
    TempDir dir("accept-reduce");
    cfg.output_dir = (dir.path / "out").string();
    cfg.mdd.distill.mix = 0.0;
    cfg.mdd.distill.epochs = 0;
    Experiment experiment(cfg);

    const auto independent_bytes = [&](uint32_t id, size_t j) {
        const TrainConfig tc{cfg.mdd.pretrain.epochs, cfg.mdd.pretrain.batch_size,
                             cfg.mdd.pretrain.learning_rate,
                             derive_seed(cfg.master_seed, "ind", id)};
        return serialize_model(
            sgd_train(experiment.initial_model(), experiment.splits()[j].train, tc));
    };

    std::vector<MddProvenance> empty_vault_prov;
    experiment.mdd_phase(&empty_vault_prov);
    for (const MddProvenance& p : empty_vault_prov)
        if (p.outcome != "no-teacher") return {false, "expected no teacher in an empty vault"};
    const auto& parties = experiment.ind_parties();
    for (size_t j = 0; j < parties.size(); ++j) {
        const auto path = dir.path / "out" / ("mdd/party_" + std::to_string(parties[j]) + ".mmv");
        if (read_file(path) != independent_bytes(parties[j], j))
            return {false, "no-teacher output differs from independent training"};
    }

    experiment.vault().store(experiment.initial_model(), "fl-server", {"fl", "global"}, 0.0);
    std::vector<MddProvenance> teacher_prov;
    experiment.mdd_phase(&teacher_prov);
    for (const MddProvenance& p : teacher_prov)
        if (p.outcome != "distilled") return {false, "stored teacher was not matched"};
    for (size_t j = 0; j < parties.size(); ++j) {
        const auto path = dir.path / "out" / ("mdd/party_" + std::to_string(parties[j]) + ".mmv");
        if (read_file(path) != independent_bytes(parties[j], j))
            return {false, "zeroed distillation changed the trained model"};
    }
    return {true, std::to_string(parties.size()) +
                      " parties bit-identical with and without a stored teacher"};
}

Outcome criterion_vault_integrity() {
    TempDir dir("accept-vault");
    Vault vault(dir.path / "vault");
    Rng rng(808);
    vault.register_public_dataset("public", random_dataset(30, 3, 2, rng));
    const ArchDescriptor arch = [] {
        ArchDescriptor a;
        a.kind = ArchKind::logistic_regression;
        a.input_dim = 3;
        a.num_classes = 2;
        return a;
    }();

    std::vector<ModelId> ids;
    for (int i = 0; i < 1000; ++i) {
        const Model m = random_model(arch, rng);
        const std::vector<uint8_t> bytes = serialize_model(m);
        const ModelId id = vault.store(m, "owner-" + std::to_string(i % 7), {},
                                       static_cast<double>(i));
        if (serialize_model(vault.fetch(id)) != bytes)
            return {false, "round-trip " + std::to_string(i) + " altered the bytes"};
        ids.push_back(id);
    }

    size_t corruptions = 0;
    for (size_t i = 0; i < ids.size(); ++i) {
        const auto blob = dir.path / "vault" / "blobs" / ids[i];
        const std::vector<uint8_t> original = read_file(blob);
        std::vector<size_t> positions;
        if (i < 50) {
            positions.resize(original.size());
            for (size_t p = 0; p < positions.size(); ++p) positions[p] = p;
        } else {
            positions.push_back(rng.below(original.size()));
        }
        for (const size_t pos : positions) {
            std::vector<uint8_t> damaged = original;
            damaged[pos] ^= 0xff;
            write_file_atomic(blob, damaged);
            ++corruptions;
            try {
                (void)vault.fetch(ids[i]);
                return {false, "corruption at byte " + std::to_string(pos) + " of blob " +
                                   std::to_string(i) + " went undetected"};
            } catch (const IntegrityError&) {
            }
        }
        write_file_atomic(blob, original);
        if (i % 100 == 0 && serialize_model(vault.fetch(ids[i])) != original)
            return {false, "restore failed for blob " + std::to_string(i)};
    }
    return {true, "1000 round-trips clean, " + std::to_string(corruptions) +
                      " injected corruptions all detected"};
}

Outcome criterion_wire() {
    TempDir dir_a("accept-wire-a");
    TempDir dir_b("accept-wire-b");
    Vault served(dir_a.path / "vault");
    Vault mirror(dir_b.path / "vault");
    const auto make_ds = [] {
        Rng rng(909);
        return random_dataset(40, 4, 3, rng);
    };
    served.register_public_dataset("public", make_ds());
    mirror.register_public_dataset("public", make_ds());
    const ArchDescriptor arch = [] {
        ArchDescriptor a;
        a.kind = ArchKind::logistic_regression;
        a.input_dim = 4;
        a.num_classes = 3;
        return a;
    }();

    VaultService remote(served);
    VaultService local(mirror);
    const uint16_t port = remote.start("127.0.0.1", 0);

    Rng rng(910);
    size_t compared = 0;
    {
        WireClient client("127.0.0.1", port);
        std::vector<ModelId> ids;
        const std::vector<std::string> owners = {"alice", "bob"};
        for (int i = 0; i < 140; ++i) {
            nlohmann::json req;
            const uint64_t pick = rng.below(5);
            const std::string rid = "req-" + std::to_string(i);
            if (pick == 0 || ids.empty()) {
                const Model m = random_model(arch, rng);
                req = {{"v", kProtocolVersion},
                       {"op", "store"},
                       {"payload",
                        {{"model_b64", base64_encode(serialize_model(m))},
                         {"owner", owners[rng.below(owners.size())]},
                         {"stored_at", static_cast<double>(i)}}},
                       {"request_id", rid}};
            } else if (pick == 1) {
                const std::string id =
                    rng.next_double() < 0.7 ? ids[rng.below(ids.size())] : std::string(64, 'b');
                req = {{"v", kProtocolVersion},
                       {"op", "fetch"},
                       {"payload", {{"id", id}}},
                       {"request_id", rid}};
            } else if (pick == 2) {
                req = {{"v", kProtocolVersion},
                       {"op", "query"},
                       {"payload",
                        {{"text", "arch:lr:4:-:3 & overall>=" +
                                      std::to_string(rng.below(3) * 0.25)}}},
                       {"request_id", rid}};
            } else if (pick == 3) {
                req = {{"v", kProtocolVersion},
                       {"op", "list"},
                       {"payload", nlohmann::json::object()},
                       {"request_id", rid}};
            } else {
                const Model m = random_model(arch, rng);
                req = {{"v", kProtocolVersion},
                       {"op", "eval"},
                       {"payload", {{"model_b64", base64_encode(serialize_model(m))}}},
                       {"request_id", rid}};
            }
            const std::string body = req.dump();
            client.send_raw(std::vector<uint8_t>(body.begin(), body.end()));
            const nlohmann::json wire = client.read_response();
            const nlohmann::json direct = local.handle(req);
            if (wire != direct)
                return {false, "wire and in-process responses diverge on op " +
                                   req.at("op").get<std::string>()};
            ++compared;
            if (wire.at("ok") == true && req.at("op") == "store")
                ids.push_back(wire.at("result").at("id").get<std::string>());
        }

        // Malformed frames: garbage JSON keeps the connection alive.
        const std::string garbage = "\xff not json at all";
        client.send_raw(std::vector<uint8_t>(garbage.begin(), garbage.end()));
        const nlohmann::json err = client.read_response();
        if (err.at("ok") != false || err.at("error").at("code") != "format")
            return {false, "a garbage frame did not produce a format error"};
        const nlohmann::json alive = client.call("list", nlohmann::json::object(), "alive");
        if (alive.at("ok") != true) return {false, "connection died after a garbage frame"};
    }

    // A fresh connection still works after the previous one closed.
    WireClient fresh("127.0.0.1", port);
    if (fresh.call("list", nlohmann::json::object(), "fresh").at("ok") != true)
        return {false, "service refused a fresh connection"};
    remote.stop();
    return {true, std::to_string(compared) + " wire ops identical to in-process dispatch"};
}

Outcome criterion_analogues() {
    Outcome o;
    o.pass = true;
    std::string expected_header;
    for (const std::string name : {"femnist_analogue.json", "reddit_analogue.json"}) {
        ExperimentConfig cfg = bundled_config(name);
        TempDir dir("accept-analogue");
        double mdd_mean = 0.0, ind5_mean = 0.0;
        std::string header;
        for (uint64_t seed = 1; seed <= 5; ++seed) {
            cfg.master_seed = seed;
            cfg.output_dir = (dir.path / (name + "-" + std::to_string(seed))).string();
            const RunMeans means = means_of(run_experiment(cfg));
            mdd_mean += means.mdd / 5.0;
            ind5_mean += means.ind[0].second / 5.0;
            std::ifstream csv(std::filesystem::path(cfg.output_dir) / "results.csv");
            std::getline(csv, header);
        }
        if (expected_header.empty()) expected_header = header;
        if (header != expected_header) {
            o.pass = false;
            o.detail += name + " report schema diverges; ";
            continue;
        }
        const bool ok = mdd_mean >= ind5_mean;
        o.pass = o.pass && ok;
        o.detail += name.substr(0, name.find('_')) + " MDD " + fmt(mdd_mean) + " vs IND@5 " +
                    fmt(ind5_mean) + (ok ? "" : " SHORTFALL") + "; ";
    }
    if (!o.detail.empty()) o.detail.resize(o.detail.size() - 2);
    return o;
}

}  // namespace

int main() {
    struct Criterion {
        int number;
        const char* label;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "analytic gradients match central differences", criterion_gradients},
        {2, "federated averaging matches the brute-force mean", criterion_fedavg},
        {3, "discovery matches the exhaustive scan", criterion_discovery},
        {4, "experiment runs are byte-reproducible", criterion_determinism},
        {5, "heterogeneity degrades federated accuracy", criterion_heterogeneity},
        {6, "distilled discovery beats isolation and federation", criterion_mdd_efficacy},
        {7, "zeroed distillation reduces to independent training", criterion_reduction},
        {8, "vault round-trips preserve bytes and detect corruption", criterion_vault_integrity},
        {9, "the wire protocol mirrors in-process dispatch", criterion_wire},
        {10, "class-scale analogues keep the advantage", criterion_analogues},
    };

    bool all_pass = true;
    for (const Criterion& c : criteria) {
        Outcome outcome;
        try {
            outcome = c.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("unexpected exception: ") + e.what()};
        }
        all_pass = all_pass && outcome.pass;
        std::cout << (outcome.pass ? "[PASS]" : "[FAIL]") << " criterion " << c.number << ": "
                  << c.label;
        if (!outcome.detail.empty()) std::cout << " (" << outcome.detail << ")";
        std::cout << std::endl;
    }
    return all_pass ? 0 : 1;
}
