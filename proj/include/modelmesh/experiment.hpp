#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "modelmesh/datagen.hpp"
#include "modelmesh/distill.hpp"
#include "modelmesh/federation.hpp"
#include "modelmesh/heterogeneity.hpp"
#include "modelmesh/vault.hpp"

namespace modelmesh {

struct IndSettings {
    uint32_t batch_size = 32;
    double learning_rate = 0.05;
    std::vector<uint32_t> epoch_grid{5, 10, 25, 50, 100};
};

void to_json(nlohmann::json& j, const IndSettings& s);
void from_json(const nlohmann::json& j, IndSettings& s);

struct MddSettings {
    TrainConfig pretrain{.epochs = 5};
    std::string query_text;  // empty: "best overall accuracy for this arch"
    DistillConfig distill;
};

void to_json(nlohmann::json& j, const MddSettings& s);
void from_json(const nlohmann::json& j, MddSettings& s);

// The one JSON document driving every CLI subcommand. All randomness is
// derived from master_seed through labeled seeds (see derive_seed), so a run
// is a pure function of this struct.
struct ExperimentConfig {
    SyntheticSpec data;  // data.seed is ignored; the run derives it
    Scenario scenario = Scenario::make(ScenarioKind::U);
    ArchDescriptor arch;  // input_dim/num_classes may be 0 = "take from data"
    FLConfig fl;
    IndSettings ind;
    MddSettings mdd;
    uint32_t num_ind_parties = 10;
    std::string output_dir = "out";
    uint64_t master_seed = 1;
};

void to_json(nlohmann::json& j, const ExperimentConfig& cfg);
void from_json(const nlohmann::json& j, ExperimentConfig& cfg);

ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void validate(const ExperimentConfig& cfg);

// 80/20 train/test by a seed-keyed permutation; train gets the first
// floor(0.8 n) permuted rows.
struct PartySplit {
    ClientDataset train;
    ClientDataset test;
};

PartySplit split_party(const ClientDataset& ds, uint64_t seed);

// `count` distinct client ids, uniform without replacement, ascending.
std::vector<uint32_t> pick_parties(uint32_t num_clients, uint32_t count, uint64_t seed);

struct ResultsRow {
    std::string approach;  // IND | FL | MDD
    uint32_t local_epochs = 0;
    double mean_accuracy = 0.0;
    std::vector<double> per_party;
};

// results.csv / comparison.csv schema:
// approach,local_epochs,mean_accuracy,acc_party_0,...  Appends, writing the
// header only when the file is new.
void append_results_rows(const std::filesystem::path& csv, const std::vector<ResultsRow>& rows,
                         size_t num_parties);

// Shortest decimal form that round-trips to the same double.
std::string format_double(double v);

struct ExperimentResult {
    std::vector<uint32_t> ind_parties;
    std::vector<ResultsRow> rows;  // IND rows (ascending epochs), FL, MDD
    double fl_final_accuracy = 0.0;
    double fl_virtual_seconds = 0.0;
    std::vector<MddProvenance> mdd_provenance;  // one per party
};

// Shared state and the per-subcommand phases. Construction derives all seeds
// and regenerates the dataset; phases write their artifacts under output_dir.
class Experiment {
  public:
    explicit Experiment(ExperimentConfig cfg);

    void write_config_echo() const;
    void save_dataset() const;

    ResultsRow fl_phase();                     // rounds.jsonl, fl_global.mmv, vault store
    std::vector<ResultsRow> ind_phase() const;  // ind/party_*/epochs_*.mmv
    ResultsRow mdd_phase(std::vector<MddProvenance>* provenance_out = nullptr);

    ExperimentResult run_all();  // full protocol; rewrites results.csv

    const ExperimentConfig& config() const { return cfg_; }
    const FederatedDataset& dataset() const { return ds_; }
    const std::vector<uint32_t>& ind_parties() const { return ind_parties_; }
    const std::vector<uint32_t>& fl_participants() const { return fl_participants_; }
    const std::vector<PartySplit>& splits() const { return splits_; }
    const Model& initial_model() const { return init_; }
    double resolved_deadline() const { return deadline_; }

    Vault& vault();

  private:
    std::filesystem::path out(const std::string& rel) const;

    ExperimentConfig cfg_;
    FederatedDataset ds_;
    std::vector<ClientProfile> profiles_;
    std::vector<uint32_t> ind_parties_;
    std::vector<uint32_t> fl_participants_;
    std::vector<PartySplit> splits_;
    Model init_;
    double deadline_ = 0.0;
    double fl_end_time_ = 0.0;
    double fl_final_accuracy_ = 0.0;
    std::unique_ptr<Vault> vault_;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);

// FL for each of U/BH/DH/H under one master seed and a shared deadline;
// writes hetero/<kind>/rounds.jsonl and hetero_results.csv.
void run_hetero_sweep(const ExperimentConfig& cfg);

// Re-evaluates the stored models into comparison.csv; when hetero results
// are present, also writes normalized.csv (accuracies over the U maximum).
void write_report(const ExperimentConfig& cfg);

}  // namespace modelmesh
