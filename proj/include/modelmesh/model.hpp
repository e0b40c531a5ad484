#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "modelmesh/matrix.hpp"

namespace modelmesh {

enum class ArchKind { logistic_regression, mlp };

std::string to_string(ArchKind kind);
ArchKind arch_kind_from_string(const std::string& s);

struct ArchDescriptor {
    ArchKind kind = ArchKind::logistic_regression;
    uint32_t input_dim = 1;
    std::vector<uint32_t> hidden_dims;  // empty for logistic regression
    uint32_t num_classes = 2;

    bool operator==(const ArchDescriptor&) const = default;
};

void validate(const ArchDescriptor& arch);

// Dense layer shapes (fan_in, fan_out) implied by the descriptor,
// input -> hidden... -> classes.
std::vector<std::pair<uint32_t, uint32_t>> layer_shapes(const ArchDescriptor& arch);

size_t param_count(const ArchDescriptor& arch);

// Offsets into Model::params. Layout: all weight matrices in layer order,
// then all bias vectors in layer order. A weight matrix for a (fan_in,
// fan_out) layer is stored row-major with shape (fan_out, fan_in): row o
// holds the input weights of output unit o.
struct ParamLayout {
    std::vector<std::pair<uint32_t, uint32_t>> shapes;  // (fan_in, fan_out)
    std::vector<size_t> weight_offset;
    std::vector<size_t> bias_offset;
    size_t total = 0;

    static ParamLayout of(const ArchDescriptor& arch);
};

struct Model {
    ArchDescriptor arch;
    std::vector<double> params;

    bool operator==(const Model&) const = default;
};

void validate(const Model& model);

Model zero_model(const ArchDescriptor& arch);

// Glorot-uniform weights in [-s, s] with s = sqrt(6/(fan_in+fan_out)),
// zero biases, deterministic in seed.
Model init_model(const ArchDescriptor& arch, uint64_t seed);

// MMV1 binary layout (little-endian):
//   "MMV1"
//   u8  kind              0 = logistic regression, 1 = mlp
//   u32 input_dim
//   u32 hidden count, then that many u32 hidden dims
//   u32 num_classes
//   u64 param count, then that many f64 (raw IEEE-754 bits)
// This byte stream is the unit stored, hashed and transferred everywhere.
inline constexpr char kModelMagic[4] = {'M', 'M', 'V', '1'};

std::vector<uint8_t> serialize_model(const Model& model);
Model deserialize_model(std::span<const uint8_t> bytes);

void to_json(nlohmann::json& j, const ArchDescriptor& arch);
void from_json(const nlohmann::json& j, ArchDescriptor& arch);

}  // namespace modelmesh
