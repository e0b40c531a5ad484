#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "modelmesh/ml.hpp"

namespace modelmesh {

struct SamplesPerClient {
    uint32_t min = 10;
    uint32_t max = 1000;
    double power_law_exponent = 1.5;

    bool operator==(const SamplesPerClient&) const = default;
};

struct SyntheticSpec {
    uint32_t num_clients = 1;
    uint32_t input_dim = 60;
    uint32_t num_classes = 10;
    double alpha = 1.0;  // inter-client model variance
    double beta = 1.0;   // inter-client feature-mean variance
    SamplesPerClient samples_per_client;
    uint64_t seed = 0;

    bool operator==(const SyntheticSpec&) const = default;
};

void validate(const SyntheticSpec& spec);
void to_json(nlohmann::json& j, const SyntheticSpec& spec);
void from_json(const nlohmann::json& j, SyntheticSpec& spec);

struct FederatedDataset {
    std::vector<ClientDataset> clients;
    ClientDataset public_holdout;
    SyntheticSpec spec;

    bool operator==(const FederatedDataset&) const = default;
};

// Per-client generative parameters. generate() consumes exactly these draws,
// so tests can assert on them directly.
struct ClientGenParams {
    double u = 0.0;              // mean of the ground-truth weight entries
    double feature_loc = 0.0;    // B_k, mean of the per-dimension feature means
    std::vector<double> means;   // v_k, one per feature dimension
    Matrix weights;              // num_classes x input_dim ground truth
    std::vector<double> bias;    // num_classes
    uint32_t n_samples = 0;
};

ClientGenParams client_gen_params(const SyntheticSpec& spec, uint32_t client_index);

// LEAF-style synthetic(alpha, beta) generator. Per client k (stream seeded by
// derive_seed(spec.seed, "client", k)), in draw order:
//   u_k ~ N(0, alpha); B_k ~ N(0, beta); v_k[j] ~ N(B_k, 1);
//   W_k ~ N(u_k, 1) elementwise; b_k ~ N(0, alpha) elementwise;
//   n_k from a bounded power law on [min, max];
//   x ~ N(v_k, diag(j^-1.2)) and y = argmax(W_k x + b_k).
// The public holdout pools fresh draws of 10 clients' generative parameters
// and is regenerated (bounded retries) until it covers every class.
FederatedDataset generate(const SyntheticSpec& spec);

// MMD1 binary container (little-endian), with the spec echoed as a JSON
// header block for human inspection.
inline constexpr char kDatasetMagic[4] = {'M', 'M', 'D', '1'};

void save(const FederatedDataset& ds, const std::filesystem::path& path);
FederatedDataset load(const std::filesystem::path& path);

}  // namespace modelmesh
