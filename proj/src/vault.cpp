#include "modelmesh/vault.hpp"

#include <algorithm>
#include <mutex>

#include "modelmesh/bytes.hpp"
#include "modelmesh/errors.hpp"
#include "modelmesh/log.hpp"
#include "modelmesh/sha256.hpp"

namespace modelmesh {

ModelId model_id_from_bytes(std::span<const uint8_t> bytes) {
    const auto digest = sha256(bytes);
    return hex_encode(digest);
}

void to_json(nlohmann::json& j, const VaultEntry& e) {
    j = nlohmann::json{{"id", e.id},         {"owner", e.owner},
                       {"arch", e.arch},     {"quality", e.quality},
                       {"stored_at", e.stored_at}, {"tags", e.tags}};
}

void from_json(const nlohmann::json& j, VaultEntry& e) {
    j.at("id").get_to(e.id);
    j.at("owner").get_to(e.owner);
    j.at("arch").get_to(e.arch);
    j.at("quality").get_to(e.quality);
    j.at("stored_at").get_to(e.stored_at);
    j.at("tags").get_to(e.tags);
}

Vault::Vault(std::filesystem::path root) : root_(std::move(root)) {
    std::filesystem::create_directories(root_ / "blobs");
    std::filesystem::create_directories(root_ / "meta");
    load_index();
}

void Vault::load_index() {
    for (const auto& dirent : std::filesystem::directory_iterator(root_ / "meta")) {
        if (dirent.path().extension() != ".json") continue;
        const std::vector<uint8_t> raw = read_file(dirent.path());
        VaultEntry entry;
        try {
            entry = nlohmann::json::parse(raw.begin(), raw.end()).get<VaultEntry>();
        } catch (const nlohmann::json::exception& e) {
            throw FormatError(std::string("bad vault metadata in ") +
                              dirent.path().filename().string() + ": " + e.what());
        }
        index_.emplace(entry.id, std::move(entry));
    }
    if (!index_.empty())
        log_debug("vault at " + root_.string() + " loaded " + std::to_string(index_.size()) +
                  " entries");
}

void Vault::register_public_dataset(std::string dataset_id, ClientDataset ds) {
    validate(ds);
    if (dataset_id.empty()) throw ConfigError("public dataset id must be nonempty");
    std::unique_lock lock(mutex_);
    public_dataset_id_ = std::move(dataset_id);
    public_dataset_ = std::move(ds);
}

QualityReport Vault::evaluate_on_registration(const Model& model) const {
    std::shared_lock lock(mutex_);
    if (public_dataset_id_.empty())
        throw ConfigError("no public dataset registered");
    if (model.arch.input_dim != public_dataset_.features.cols ||
        model.arch.num_classes != public_dataset_.num_classes)
        throw ArchError("registration rejected: model does not fit the public dataset");
    return evaluate(model, public_dataset_, public_dataset_id_);
}

std::filesystem::path Vault::blob_path(const ModelId& id) const { return root_ / "blobs" / id; }

std::filesystem::path Vault::meta_path(const ModelId& id) const {
    return root_ / "meta" / (id + ".json");
}

ModelId Vault::store(const Model& model, const std::string& owner,
                     const std::vector<std::string>& tags, double stored_at) {
    validate(model);
    const QualityReport quality = evaluate_on_registration(model);
    const std::vector<uint8_t> bytes = serialize_model(model);
    const ModelId id = model_id_from_bytes(bytes);

    std::unique_lock lock(mutex_);
    if (auto it = index_.find(id); it != index_.end()) return it->first;

    VaultEntry entry{id, owner, model.arch, quality, stored_at, tags};
    write_file_atomic(blob_path(id), bytes);
    const std::string meta = nlohmann::json(entry).dump(2) + "\n";
    write_file_atomic(meta_path(id),
                      std::span(reinterpret_cast<const uint8_t*>(meta.data()), meta.size()));
    index_.emplace(id, std::move(entry));
    return id;
}

Model Vault::fetch(const ModelId& id) const {
    std::shared_lock lock(mutex_);
    if (!index_.contains(id)) throw NotFoundError("no model with id " + id);
    const std::vector<uint8_t> bytes = read_file(blob_path(id));
    if (model_id_from_bytes(bytes) != id)
        throw IntegrityError("stored bytes for " + id + " fail the content hash");
    return deserialize_model(bytes);
}

VaultEntry Vault::entry(const ModelId& id) const {
    std::shared_lock lock(mutex_);
    auto it = index_.find(id);
    if (it == index_.end()) throw NotFoundError("no model with id " + id);
    return it->second;
}

std::vector<VaultEntry> Vault::list_entries(const EntryFilter& filter) const {
    std::shared_lock lock(mutex_);
    std::vector<VaultEntry> out;
    for (const auto& [id, entry] : index_) {
        if (filter.owner && entry.owner != *filter.owner) continue;
        if (filter.tag &&
            std::find(entry.tags.begin(), entry.tags.end(), *filter.tag) == entry.tags.end())
            continue;
        out.push_back(entry);
    }
    std::sort(out.begin(), out.end(), [](const VaultEntry& a, const VaultEntry& b) {
        if (a.stored_at != b.stored_at) return a.stored_at < b.stored_at;
        return a.id < b.id;
    });
    return out;
}

size_t Vault::size() const {
    std::shared_lock lock(mutex_);
    return index_.size();
}

}  // namespace modelmesh
