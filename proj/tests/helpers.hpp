#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "modelmesh/ml.hpp"
#include "modelmesh/model.hpp"
#include "modelmesh/rng.hpp"

namespace modelmesh::testing {

// Scratch directory removed on destruction.
struct TempDir {
    std::filesystem::path path;

    explicit TempDir(const std::string& tag) {
        path = std::filesystem::temp_directory_path() /
               (tag + "-" + std::to_string(Rng(std::random_device{}()).next_u64()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

inline Model random_model(const ArchDescriptor& arch, Rng& rng, double scale = 1.0) {
    Model m = zero_model(arch);
    for (double& p : m.params) p = rng.normal(0.0, scale);
    return m;
}

inline ClientDataset random_dataset(uint32_t n, uint32_t input_dim, uint32_t num_classes,
                                    Rng& rng) {
    ClientDataset ds;
    ds.num_classes = num_classes;
    ds.features = Matrix(n, input_dim);
    for (double& v : ds.features.data) v = rng.normal(0.0, 1.0);
    ds.labels.resize(n);
    for (uint32_t& y : ds.labels) y = static_cast<uint32_t>(rng.below(num_classes));
    return ds;
}

}  // namespace modelmesh::testing
