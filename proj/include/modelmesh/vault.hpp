#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "modelmesh/ml.hpp"
#include "modelmesh/model.hpp"

namespace modelmesh {

// Lowercase hex of the content hash of the MMV1 bytes.
using ModelId = std::string;

ModelId model_id_from_bytes(std::span<const uint8_t> bytes);

struct VaultEntry {
    ModelId id;
    std::string owner;
    ArchDescriptor arch;
    QualityReport quality;
    double stored_at = 0.0;  // virtual seconds
    std::vector<std::string> tags;

    bool operator==(const VaultEntry&) const = default;
};

void to_json(nlohmann::json& j, const VaultEntry& e);
void from_json(const nlohmann::json& j, VaultEntry& e);

struct EntryFilter {
    std::optional<std::string> owner;
    std::optional<std::string> tag;
};

// Content-addressed store: blobs/<id> holds MMV1 bytes, meta/<id>.json the
// entry. Models are evaluated on the registered public dataset at store time;
// entries are immutable afterwards.
class Vault {
  public:
    explicit Vault(std::filesystem::path root);

    // Store-time evaluation target. Must be set before the first store().
    void register_public_dataset(std::string dataset_id, ClientDataset ds);
    const std::string& public_dataset_id() const { return public_dataset_id_; }

    ModelId store(const Model& model, const std::string& owner,
                  const std::vector<std::string>& tags, double stored_at);

    QualityReport evaluate_on_registration(const Model& model) const;

    Model fetch(const ModelId& id) const;

    VaultEntry entry(const ModelId& id) const;

    // Ascending (stored_at, id).
    std::vector<VaultEntry> list_entries(const EntryFilter& filter = {}) const;

    size_t size() const;

  private:
    std::filesystem::path blob_path(const ModelId& id) const;
    std::filesystem::path meta_path(const ModelId& id) const;
    void load_index();

    std::filesystem::path root_;
    std::string public_dataset_id_;
    ClientDataset public_dataset_;
    std::map<ModelId, VaultEntry> index_;
    mutable std::shared_mutex mutex_;
};

}  // namespace modelmesh
