#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "modelmesh/bytes.hpp"
#include "modelmesh/discovery.hpp"
#include "modelmesh/errors.hpp"
#include "modelmesh/experiment.hpp"
#include "modelmesh/service.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

struct CommonFlags {
    std::string config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> scenario;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--config", flags.config_path, "experiment config JSON")->required();
    cmd->add_option("--seed", flags.seed, "override master_seed");
    cmd->add_option("--out", flags.out, "override output_dir");
    cmd->add_option("--scenario", flags.scenario, "override scenario kind (U|BH|DH|H)");
}

modelmesh::ExperimentConfig load_config(const CommonFlags& flags) {
    modelmesh::ExperimentConfig cfg = modelmesh::load_experiment_config(flags.config_path);
    if (flags.seed) cfg.master_seed = *flags.seed;
    if (flags.out) cfg.output_dir = *flags.out;
    if (flags.scenario)
        cfg.scenario =
            modelmesh::Scenario::make(modelmesh::scenario_kind_from_string(*flags.scenario));
    return cfg;
}

std::pair<std::string, uint16_t> parse_endpoint(const std::string& listen) {
    const size_t colon = listen.rfind(':');
    if (colon == std::string::npos)
        throw modelmesh::ConfigError("--listen expects host:port, got '" + listen + "'");
    const std::string host = listen.substr(0, colon);
    const int port = std::stoi(listen.substr(colon + 1));
    if (port < 0 || port > 65535) throw modelmesh::ConfigError("port out of range");
    return {host.empty() ? "127.0.0.1" : host, static_cast<uint16_t>(port)};
}

void emit_error_line(const std::string& code, const std::string& message) {
    const nlohmann::json j = {{"error", {{"code", code}, {"message", message}}}};
    std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    using modelmesh::Experiment;
    using modelmesh::ExperimentConfig;

    CLI::App app{"modelmesh: collaborative model training, vaults and discovery"};
    app.require_subcommand(1);

    CommonFlags flags;
    std::string listen = "127.0.0.1:7710";
    std::string model_path;
    std::string owner = "cli";
    std::vector<std::string> tags;
    double stored_at = 0.0;
    std::string query_text;
    std::string exclude_owner;

    auto* gen_data = app.add_subcommand("gen-data", "generate the dataset and write dataset.mmd");
    add_common(gen_data, flags);
    auto* run_fl = app.add_subcommand("run-fl", "run federated training, store the global model");
    add_common(run_fl, flags);
    auto* run_ind = app.add_subcommand("run-ind", "train the IND baselines over the epoch grid");
    add_common(run_ind, flags);
    auto* run_mdd = app.add_subcommand("run-mdd", "run discovery + distillation per party");
    add_common(run_mdd, flags);
    auto* run_exp =
        app.add_subcommand("run-experiment", "full IND/FL/MDD protocol into results.csv");
    add_common(run_exp, flags);
    auto* sweep = app.add_subcommand("run-hetero-sweep", "run FL under U/BH/DH/H");
    add_common(sweep, flags);
    auto* report = app.add_subcommand("report", "re-evaluate stored models into comparison.csv");
    add_common(report, flags);

    auto* serve = app.add_subcommand("vault-serve", "serve the vault over the wire protocol");
    add_common(serve, flags);
    serve->add_option("--listen", listen, "host:port (port 0 = ephemeral)");

    auto* store = app.add_subcommand("vault-store", "store a model file in the vault");
    add_common(store, flags);
    store->add_option("--model", model_path, "MMV1 model file")->required();
    store->add_option("--owner", owner, "entry owner");
    store->add_option("--tag", tags, "entry tag (repeatable)");
    store->add_option("--stored-at", stored_at, "virtual timestamp");

    auto* query = app.add_subcommand("vault-query", "match a query against the vault");
    add_common(query, flags);
    query->add_option("--query", query_text, "query text")->required();
    query->add_option("--exclude-owner", exclude_owner, "owner to exclude");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error_line("cli", e.what());
        return 2;
    }

    try {
        if (gen_data->parsed()) {
            Experiment experiment(load_config(flags));
            experiment.write_config_echo();
            experiment.save_dataset();
        } else if (run_fl->parsed()) {
            Experiment experiment(load_config(flags));
            experiment.write_config_echo();
            const auto row = experiment.fl_phase();
            modelmesh::append_results_rows(
                std::filesystem::path(experiment.config().output_dir) / "results.csv", {row},
                experiment.ind_parties().size());
        } else if (run_ind->parsed()) {
            Experiment experiment(load_config(flags));
            experiment.write_config_echo();
            const auto rows = experiment.ind_phase();
            modelmesh::append_results_rows(
                std::filesystem::path(experiment.config().output_dir) / "results.csv", rows,
                experiment.ind_parties().size());
        } else if (run_mdd->parsed()) {
            Experiment experiment(load_config(flags));
            experiment.write_config_echo();
            const auto row = experiment.mdd_phase();
            modelmesh::append_results_rows(
                std::filesystem::path(experiment.config().output_dir) / "results.csv", {row},
                experiment.ind_parties().size());
        } else if (run_exp->parsed()) {
            Experiment experiment(load_config(flags));
            experiment.run_all();
        } else if (sweep->parsed()) {
            modelmesh::run_hetero_sweep(load_config(flags));
        } else if (report->parsed()) {
            modelmesh::write_report(load_config(flags));
        } else if (serve->parsed()) {
            Experiment experiment(load_config(flags));
            modelmesh::Vault& vault = experiment.vault();
            modelmesh::VaultService service(vault);
            const auto [host, port] = parse_endpoint(listen);
            const uint16_t bound = service.start(host, port);
            std::cout << nlohmann::json{{"listening", host + ":" + std::to_string(bound)}}.dump()
                      << std::endl;
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            while (!g_stop.load())
                std::this_thread::sleep_for(std::chrono::milliseconds(100));
            service.stop();
        } else if (store->parsed()) {
            Experiment experiment(load_config(flags));
            const auto model = modelmesh::deserialize_model(modelmesh::read_file(model_path));
            const auto id = experiment.vault().store(model, owner, tags, stored_at);
            std::cout << nlohmann::json{{"id", id}}.dump() << "\n";
        } else if (query->parsed()) {
            Experiment experiment(load_config(flags));
            modelmesh::Query q = modelmesh::parse_query(query_text);
            if (!exclude_owner.empty()) q.exclude_owner = exclude_owner;
            const auto result = modelmesh::match(q, experiment.vault().list_entries());
            nlohmann::json j;
            if (result)
                j = {{"found", true},
                     {"id", result->id},
                     {"score", result->score},
                     {"satisfied", result->satisfied}};
            else
                j = {{"found", false}};
            const auto path =
                std::filesystem::path(experiment.config().output_dir) / "query_result.json";
            std::filesystem::create_directories(path.parent_path());
            const std::string text = j.dump(2) + "\n";
            modelmesh::write_file_atomic(
                path, std::span(reinterpret_cast<const uint8_t*>(text.data()), text.size()));
            std::cout << j.dump() << "\n";
        }
    } catch (const modelmesh::Error& e) {
        emit_error_line(e.code(), e.what());
        return 1;
    } catch (const std::exception& e) {
        emit_error_line("internal", e.what());
        return 1;
    }
    return 0;
}
