#include "modelmesh/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>

#include "modelmesh/bytes.hpp"
#include "modelmesh/errors.hpp"
#include "modelmesh/log.hpp"
#include "modelmesh/rng.hpp"

namespace modelmesh {

void to_json(nlohmann::json& j, const IndSettings& s) {
    j = nlohmann::json{{"batch_size", s.batch_size},
                       {"learning_rate", s.learning_rate},
                       {"epoch_grid", s.epoch_grid}};
}

void from_json(const nlohmann::json& j, IndSettings& s) {
    s = IndSettings{};
    if (j.contains("batch_size")) j.at("batch_size").get_to(s.batch_size);
    if (j.contains("learning_rate")) j.at("learning_rate").get_to(s.learning_rate);
    if (j.contains("epoch_grid")) j.at("epoch_grid").get_to(s.epoch_grid);
}

void to_json(nlohmann::json& j, const MddSettings& s) {
    j = nlohmann::json{{"pretrain", s.pretrain},
                       {"query", {{"text", s.query_text}}},
                       {"distill", s.distill}};
}

void from_json(const nlohmann::json& j, MddSettings& s) {
    s = MddSettings{};
    if (j.contains("pretrain")) j.at("pretrain").get_to(s.pretrain);
    if (j.contains("query")) {
        const auto& q = j.at("query");
        if (q.is_string())
            s.query_text = q.get<std::string>();
        else
            s.query_text = q.value("text", std::string{});
    }
    if (j.contains("distill")) j.at("distill").get_to(s.distill);
}

void to_json(nlohmann::json& j, const ExperimentConfig& cfg) {
    nlohmann::json data = cfg.data;
    data.erase("seed");  // derived from master_seed, never configured
    j = nlohmann::json{{"data", std::move(data)},
                       {"scenario", cfg.scenario},
                       {"arch", cfg.arch},
                       {"fl", cfg.fl},
                       {"ind", cfg.ind},
                       {"mdd", cfg.mdd},
                       {"num_ind_parties", cfg.num_ind_parties},
                       {"output_dir", cfg.output_dir},
                       {"master_seed", cfg.master_seed}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& cfg) {
    static const std::set<std::string> kKnown = {"data", "scenario", "arch",
                                                "fl",   "ind",      "mdd",
                                                "num_ind_parties", "output_dir", "master_seed"};
    for (const auto& [key, value] : j.items())
        if (!kKnown.contains(key)) throw ConfigError("unknown config key '" + key + "'");

    cfg = ExperimentConfig{};
    j.at("data").get_to(cfg.data);
    if (j.contains("scenario")) {
        const auto& s = j.at("scenario");
        if (s.is_string())
            cfg.scenario = Scenario::make(scenario_kind_from_string(s.get<std::string>()));
        else
            s.get_to(cfg.scenario);
    }
    if (j.contains("arch")) {
        const auto& a = j.at("arch");
        cfg.arch.kind = arch_kind_from_string(a.value("kind", std::string("lr")));
        cfg.arch.hidden_dims = a.value("hidden_dims", std::vector<uint32_t>{});
        cfg.arch.input_dim = a.value("input_dim", 0u);
        cfg.arch.num_classes = a.value("num_classes", 0u);
    }
    if (j.contains("fl")) j.at("fl").get_to(cfg.fl);
    if (j.contains("ind")) j.at("ind").get_to(cfg.ind);
    if (j.contains("mdd")) j.at("mdd").get_to(cfg.mdd);
    if (j.contains("num_ind_parties")) j.at("num_ind_parties").get_to(cfg.num_ind_parties);
    if (j.contains("output_dir")) j.at("output_dir").get_to(cfg.output_dir);
    if (j.contains("master_seed")) j.at("master_seed").get_to(cfg.master_seed);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
    const std::vector<uint8_t> raw = read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(raw.begin(), raw.end());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    ExperimentConfig cfg = j.get<ExperimentConfig>();
    validate(cfg);
    return cfg;
}

void validate(const ExperimentConfig& cfg) {
    validate(cfg.data);
    validate(cfg.scenario);
    if (cfg.fl.num_rounds == 0) throw ConfigError("fl.num_rounds must be positive");
    if (cfg.fl.clients_per_round == 0) throw ConfigError("fl.clients_per_round must be positive");
    validate(cfg.fl.local);
    if (cfg.ind.batch_size == 0) throw ConfigError("ind.batch_size must be positive");
    if (!(cfg.ind.learning_rate > 0)) throw ConfigError("ind.learning_rate must be > 0");
    if (cfg.ind.epoch_grid.empty()) throw ConfigError("ind.epoch_grid must be nonempty");
    for (const uint32_t e : cfg.ind.epoch_grid)
        if (e == 0) throw ConfigError("ind.epoch_grid entries must be positive");
    validate(cfg.mdd.pretrain);
    validate(cfg.mdd.distill);
    if (cfg.num_ind_parties == 0) throw ConfigError("num_ind_parties must be positive");
    if (cfg.num_ind_parties >= cfg.data.num_clients)
        throw ConfigError("num_ind_parties must leave clients for FL");
    if (cfg.output_dir.empty()) throw ConfigError("output_dir must be nonempty");
}

PartySplit split_party(const ClientDataset& ds, uint64_t seed) {
    validate(ds);
    const uint32_t n = static_cast<uint32_t>(ds.size());
    const uint32_t n_train = static_cast<uint32_t>(std::floor(0.8 * n));
    if (n_train == 0 || n_train == n)
        throw PreconditionError("party of " + std::to_string(n) + " samples cannot be split 80/20");
    const std::vector<uint32_t> perm = random_permutation(n, seed);

    const auto gather = [&](uint32_t lo, uint32_t hi) {
        ClientDataset part;
        part.num_classes = ds.num_classes;
        part.features = Matrix(hi - lo, ds.features.cols);
        part.labels.reserve(hi - lo);
        for (uint32_t i = lo; i < hi; ++i) {
            const uint32_t src = perm[i];
            std::copy(ds.features.row(src), ds.features.row(src) + ds.features.cols,
                      part.features.row(i - lo));
            part.labels.push_back(ds.labels[src]);
        }
        return part;
    };
    return PartySplit{gather(0, n_train), gather(n_train, n)};
}

std::vector<uint32_t> pick_parties(uint32_t num_clients, uint32_t count, uint64_t seed) {
    std::vector<uint32_t> ids(num_clients);
    for (uint32_t i = 0; i < num_clients; ++i) ids[i] = i;
    if (count >= num_clients) return ids;
    Rng rng(seed);
    for (uint32_t i = 0; i < count; ++i) {
        const uint64_t j = i + rng.below(num_clients - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(count);
    std::sort(ids.begin(), ids.end());
    return ids;
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, ptr);
}

void append_results_rows(const std::filesystem::path& csv, const std::vector<ResultsRow>& rows,
                         size_t num_parties) {
    const bool fresh = !std::filesystem::exists(csv);
    std::ofstream out(csv, std::ios::app);
    if (!out) throw IoError("cannot open " + csv.string());
    if (fresh) {
        out << "approach,local_epochs,mean_accuracy";
        for (size_t p = 0; p < num_parties; ++p) out << ",acc_party_" << p;
        out << "\n";
    }
    for (const ResultsRow& row : rows) {
        if (row.per_party.size() != num_parties)
            throw PreconditionError("results row has the wrong party count");
        out << row.approach << "," << row.local_epochs << "," << format_double(row.mean_accuracy);
        for (const double acc : row.per_party) out << "," << format_double(acc);
        out << "\n";
    }
}

namespace {

double mean_of(const std::vector<double>& xs) {
    double sum = 0.0;
    for (const double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    write_file_atomic(path,
                      std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
}

std::string default_query_text(const ArchDescriptor& arch) {
    Query q;
    q.required_arch = arch;
    q.predicates.push_back(Predicate{Metric::overall_accuracy, 0, PredicateOp::ge, 0.0});
    return serialize_query(q);
}

Model load_model_file(const std::filesystem::path& path) {
    return deserialize_model(read_file(path));
}

}  // namespace

Experiment::Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    validate(cfg_);
    if (cfg_.arch.input_dim == 0) cfg_.arch.input_dim = cfg_.data.input_dim;
    if (cfg_.arch.num_classes == 0) cfg_.arch.num_classes = cfg_.data.num_classes;
    validate(cfg_.arch);
    if (cfg_.arch.input_dim != cfg_.data.input_dim ||
        cfg_.arch.num_classes != cfg_.data.num_classes)
        throw ConfigError("architecture does not fit the generated data");

    cfg_.data.seed = derive_seed(cfg_.master_seed, "data");
    ds_ = generate(cfg_.data);
    profiles_ = assign_profiles(cfg_.data.num_clients, cfg_.scenario,
                                derive_seed(cfg_.master_seed, "profiles"));
    ind_parties_ =
        pick_parties(cfg_.data.num_clients, cfg_.num_ind_parties,
                     derive_seed(cfg_.master_seed, "ind-parties"));
    std::set<uint32_t> reserved(ind_parties_.begin(), ind_parties_.end());
    for (uint32_t id = 0; id < cfg_.data.num_clients; ++id)
        if (!reserved.contains(id)) fl_participants_.push_back(id);

    init_ = init_model(cfg_.arch, derive_seed(cfg_.master_seed, "init"));

    splits_.reserve(ind_parties_.size());
    for (const uint32_t id : ind_parties_)
        splits_.push_back(split_party(ds_.clients[id], derive_seed(cfg_.master_seed, "split", id)));

    deadline_ = cfg_.fl.round_deadline > 0.0
                    ? cfg_.fl.round_deadline
                    : default_round_deadline(ds_, cfg_.fl.local, serialize_model(init_).size(),
                                             fl_participants_);

    if (cfg_.mdd.query_text.empty()) cfg_.mdd.query_text = default_query_text(cfg_.arch);
    parse_query(cfg_.mdd.query_text);  // surface bad queries before any training
}

std::filesystem::path Experiment::out(const std::string& rel) const {
    return std::filesystem::path(cfg_.output_dir) / rel;
}

Vault& Experiment::vault() {
    if (!vault_) {
        vault_ = std::make_unique<Vault>(out("vault"));
        vault_->register_public_dataset("public_holdout", ds_.public_holdout);
    }
    return *vault_;
}

void Experiment::write_config_echo() const {
    std::filesystem::create_directories(cfg_.output_dir);
    write_text_file(out("config.json"), nlohmann::json(cfg_).dump(2) + "\n");
}

void Experiment::save_dataset() const {
    std::filesystem::create_directories(cfg_.output_dir);
    save(ds_, out("dataset.mmd"));
}

ResultsRow Experiment::fl_phase() {
    std::filesystem::create_directories(cfg_.output_dir);
    FLConfig flcfg = cfg_.fl;
    flcfg.round_deadline = deadline_;
    flcfg.selection_seed = derive_seed(cfg_.master_seed, "fl-select");
    flcfg.local.seed = derive_seed(cfg_.master_seed, "fl-local");

    FLResult result = run_fl(ds_, profiles_, flcfg, init_, fl_participants_);

    std::string lines;
    for (const RoundReport& round : result.rounds)
        lines += nlohmann::json(round).dump() + "\n";
    write_text_file(out("rounds.jsonl"), lines);
    write_file_atomic(out("fl_global.mmv"), serialize_model(result.global));

    vault().store(result.global, "fl-server", {"fl", "global"}, result.total_virtual_seconds);
    fl_end_time_ = result.total_virtual_seconds;
    fl_final_accuracy_ = result.rounds.back().global_eval.overall_accuracy;

    ResultsRow row{"FL", 0, 0.0, {}};
    for (const PartySplit& split : splits_)
        row.per_party.push_back(evaluate(result.global, split.test).overall_accuracy);
    row.mean_accuracy = mean_of(row.per_party);
    log_info("fl: holdout acc " + format_double(fl_final_accuracy_) + ", party-test mean " +
             format_double(row.mean_accuracy));
    return row;
}

std::vector<ResultsRow> Experiment::ind_phase() const {
    std::vector<ResultsRow> rows;
    for (const uint32_t epochs : cfg_.ind.epoch_grid) {
        ResultsRow row{"IND", epochs, 0.0, {}};
        for (size_t j = 0; j < ind_parties_.size(); ++j) {
            const uint32_t id = ind_parties_[j];
            const TrainConfig tc{epochs, cfg_.ind.batch_size, cfg_.ind.learning_rate,
                                 derive_seed(cfg_.master_seed, "ind", id)};
            const Model model = sgd_train(init_, splits_[j].train, tc);
            const auto dir = out("ind/party_" + std::to_string(id));
            std::filesystem::create_directories(dir);
            write_file_atomic(dir / ("epochs_" + std::to_string(epochs) + ".mmv"),
                              serialize_model(model));
            row.per_party.push_back(evaluate(model, splits_[j].test).overall_accuracy);
        }
        row.mean_accuracy = mean_of(row.per_party);
        log_info("ind@" + std::to_string(epochs) + ": mean " + format_double(row.mean_accuracy));
        rows.push_back(std::move(row));
    }
    return rows;
}

ResultsRow Experiment::mdd_phase(std::vector<MddProvenance>* provenance_out) {
    Vault& v = vault();
    std::filesystem::create_directories(out("mdd"));
    ResultsRow row{"MDD", cfg_.mdd.pretrain.epochs, 0.0, {}};
    for (size_t j = 0; j < ind_parties_.size(); ++j) {
        const uint32_t id = ind_parties_[j];
        MddConfig mcfg;
        mcfg.pretrain = cfg_.mdd.pretrain;
        mcfg.pretrain.seed = derive_seed(cfg_.master_seed, "ind", id);
        mcfg.distill = cfg_.mdd.distill;
        mcfg.distill.seed = derive_seed(cfg_.master_seed, "mdd-distill", id);
        mcfg.query = parse_query(cfg_.mdd.query_text);
        mcfg.query.exclude_owner = "party-" + std::to_string(id);

        auto [student, provenance] = run_mdd(splits_[j].train, v, mcfg, init_);
        write_file_atomic(out("mdd/party_" + std::to_string(id) + ".mmv"),
                          serialize_model(student));
        write_text_file(out("mdd/party_" + std::to_string(id) + ".provenance.json"),
                        nlohmann::json(provenance).dump(2) + "\n");
        row.per_party.push_back(evaluate(student, splits_[j].test).overall_accuracy);
        if (provenance_out) provenance_out->push_back(std::move(provenance));
    }
    row.mean_accuracy = mean_of(row.per_party);
    log_info("mdd@" + std::to_string(row.local_epochs) + ": mean " +
             format_double(row.mean_accuracy));
    return row;
}

ExperimentResult Experiment::run_all() {
    write_config_echo();
    save_dataset();
    std::filesystem::remove(out("results.csv"));

    ExperimentResult result;
    result.ind_parties = ind_parties_;

    const ResultsRow fl_row = fl_phase();
    std::vector<ResultsRow> ind_rows = ind_phase();
    const ResultsRow mdd_row = mdd_phase(&result.mdd_provenance);

    result.rows = std::move(ind_rows);
    result.rows.push_back(fl_row);
    result.rows.push_back(mdd_row);
    append_results_rows(out("results.csv"), result.rows, ind_parties_.size());

    result.fl_final_accuracy = fl_final_accuracy_;
    result.fl_virtual_seconds = fl_end_time_;
    return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    Experiment experiment(cfg);
    return experiment.run_all();
}

void run_hetero_sweep(const ExperimentConfig& cfg) {
    validate(cfg);
    ExperimentConfig base = cfg;
    base.data.seed = derive_seed(base.master_seed, "data");
    const FederatedDataset ds = generate(base.data);
    const Model init = init_model(
        [&] {
            ArchDescriptor arch = base.arch;
            if (arch.input_dim == 0) arch.input_dim = base.data.input_dim;
            if (arch.num_classes == 0) arch.num_classes = base.data.num_classes;
            validate(arch);
            return arch;
        }(),
        derive_seed(base.master_seed, "init"));

    FLConfig flcfg = base.fl;
    flcfg.selection_seed = derive_seed(base.master_seed, "fl-select");
    flcfg.local.seed = derive_seed(base.master_seed, "fl-local");
    if (!(flcfg.round_deadline > 0.0))
        flcfg.round_deadline =
            default_round_deadline(ds, flcfg.local, serialize_model(init).size(), {});

    std::string csv = "scenario,final_accuracy,total_virtual_seconds\n";
    for (const ScenarioKind kind :
         {ScenarioKind::U, ScenarioKind::BH, ScenarioKind::DH, ScenarioKind::H}) {
        const Scenario scenario = Scenario::make(kind);
        const auto profiles = assign_profiles(base.data.num_clients, scenario,
                                              derive_seed(base.master_seed, "profiles"));
        const FLResult result = run_fl(ds, profiles, flcfg, init, {});

        const auto dir = std::filesystem::path(base.output_dir) / "hetero" / to_string(kind);
        std::filesystem::create_directories(dir);
        std::string lines;
        for (const RoundReport& round : result.rounds)
            lines += nlohmann::json(round).dump() + "\n";
        write_text_file(dir / "rounds.jsonl", lines);

        csv += to_string(kind) + "," +
               format_double(result.rounds.back().global_eval.overall_accuracy) + "," +
               format_double(result.total_virtual_seconds) + "\n";
        log_info("hetero " + to_string(kind) + ": final acc " +
                 format_double(result.rounds.back().global_eval.overall_accuracy));
    }
    write_text_file(std::filesystem::path(base.output_dir) / "hetero_results.csv", csv);
}

void write_report(const ExperimentConfig& cfg) {
    Experiment experiment(cfg);
    const auto& parties = experiment.ind_parties();
    const auto& splits = experiment.splits();
    const auto out = [&](const std::string& rel) {
        return std::filesystem::path(cfg.output_dir) / rel;
    };

    std::vector<ResultsRow> rows;
    for (const uint32_t epochs : cfg.ind.epoch_grid) {
        ResultsRow row{"IND", epochs, 0.0, {}};
        for (size_t j = 0; j < parties.size(); ++j) {
            const auto path = out("ind/party_" + std::to_string(parties[j]) + "/epochs_" +
                                  std::to_string(epochs) + ".mmv");
            row.per_party.push_back(
                evaluate(load_model_file(path), splits[j].test).overall_accuracy);
        }
        row.mean_accuracy = mean_of(row.per_party);
        rows.push_back(std::move(row));
    }
    {
        const Model global = load_model_file(out("fl_global.mmv"));
        ResultsRow row{"FL", 0, 0.0, {}};
        for (const PartySplit& split : splits)
            row.per_party.push_back(evaluate(global, split.test).overall_accuracy);
        row.mean_accuracy = mean_of(row.per_party);
        rows.push_back(std::move(row));
    }
    {
        ResultsRow row{"MDD", cfg.mdd.pretrain.epochs, 0.0, {}};
        for (size_t j = 0; j < parties.size(); ++j) {
            const auto path = out("mdd/party_" + std::to_string(parties[j]) + ".mmv");
            row.per_party.push_back(
                evaluate(load_model_file(path), splits[j].test).overall_accuracy);
        }
        row.mean_accuracy = mean_of(row.per_party);
        rows.push_back(std::move(row));
    }
    std::filesystem::remove(out("comparison.csv"));
    append_results_rows(out("comparison.csv"), rows, parties.size());

    if (std::filesystem::exists(out("hetero"))) {
        double u_max = 0.0;
        struct ScenarioSummary {
            std::string name;
            double final_acc = 0.0;
            double max_acc = 0.0;
        };
        std::vector<ScenarioSummary> summaries;
        for (const ScenarioKind kind :
             {ScenarioKind::U, ScenarioKind::BH, ScenarioKind::DH, ScenarioKind::H}) {
            const auto path = out("hetero/" + to_string(kind) + "/rounds.jsonl");
            if (!std::filesystem::exists(path)) continue;
            const std::vector<uint8_t> raw = read_file(path);
            ScenarioSummary s{to_string(kind)};
            size_t start = 0;
            while (start < raw.size()) {
                size_t end = start;
                while (end < raw.size() && raw[end] != '\n') ++end;
                const auto line = nlohmann::json::parse(raw.begin() + start, raw.begin() + end);
                const double acc = line.at("global_eval").at("overall_accuracy").get<double>();
                s.final_acc = acc;
                s.max_acc = std::max(s.max_acc, acc);
                start = end + 1;
            }
            if (kind == ScenarioKind::U) u_max = s.max_acc;
            summaries.push_back(std::move(s));
        }
        if (!(u_max > 0.0)) throw PreconditionError("hetero report needs a U run with accuracy");
        std::string csv =
            "scenario,final_accuracy,max_accuracy,normalized_final_accuracy,"
            "normalized_max_accuracy\n";
        for (const ScenarioSummary& s : summaries)
            csv += s.name + "," + format_double(s.final_acc) + "," + format_double(s.max_acc) +
                   "," + format_double(s.final_acc / u_max) + "," +
                   format_double(s.max_acc / u_max) + "\n";
        write_text_file(out("normalized.csv"), csv);
    }
}

}  // namespace modelmesh
