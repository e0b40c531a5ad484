#include "modelmesh/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "modelmesh/bytes.hpp"
#include "modelmesh/rng.hpp"

namespace modelmesh {

void validate(const SyntheticSpec& spec) {
    if (spec.num_clients < 1) throw ConfigError("num_clients must be >= 1");
    if (spec.input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (spec.num_classes < 2) throw ConfigError("num_classes must be >= 2");
    if (spec.alpha < 0 || spec.beta < 0) throw ConfigError("alpha and beta must be >= 0");
    if (spec.samples_per_client.min < 1) throw ConfigError("samples_per_client.min must be >= 1");
    if (spec.samples_per_client.min > spec.samples_per_client.max)
        throw ConfigError("samples_per_client.min must be <= max");
    if (!(spec.samples_per_client.power_law_exponent > 0))
        throw ConfigError("power_law_exponent must be > 0");
}

void to_json(nlohmann::json& j, const SyntheticSpec& spec) {
    j = nlohmann::json{{"num_clients", spec.num_clients},
                       {"input_dim", spec.input_dim},
                       {"num_classes", spec.num_classes},
                       {"alpha", spec.alpha},
                       {"beta", spec.beta},
                       {"samples_per_client",
                        {{"min", spec.samples_per_client.min},
                         {"max", spec.samples_per_client.max},
                         {"power_law_exponent", spec.samples_per_client.power_law_exponent}}},
                       {"seed", spec.seed}};
}

void from_json(const nlohmann::json& j, SyntheticSpec& spec) {
    spec.num_clients = j.at("num_clients").get<uint32_t>();
    spec.input_dim = j.at("input_dim").get<uint32_t>();
    spec.num_classes = j.at("num_classes").get<uint32_t>();
    spec.alpha = j.at("alpha").get<double>();
    spec.beta = j.at("beta").get<double>();
    if (j.contains("samples_per_client")) {
        const auto& s = j.at("samples_per_client");
        spec.samples_per_client.min = s.at("min").get<uint32_t>();
        spec.samples_per_client.max = s.at("max").get<uint32_t>();
        spec.samples_per_client.power_law_exponent =
            s.value("power_law_exponent", spec.samples_per_client.power_law_exponent);
    }
    spec.seed = j.value("seed", uint64_t{0});
}

namespace {

// Inverse-CDF draw from a Pareto truncated to [min, max].
uint32_t draw_sample_count(const SamplesPerClient& s, Rng& rng) {
    if (s.min == s.max) return s.min;
    const double u = rng.next_double();
    const double a = s.power_law_exponent;
    const double lo = s.min, hi = s.max;
    double x;
    if (std::abs(a - 1.0) < 1e-12) {
        x = lo * std::pow(hi / lo, u);
    } else {
        const double lo_p = std::pow(lo, 1.0 - a);
        const double hi_p = std::pow(hi, 1.0 - a);
        x = std::pow(lo_p + u * (hi_p - lo_p), 1.0 / (1.0 - a));
    }
    const double n = std::floor(x);
    return static_cast<uint32_t>(std::clamp(n, lo, hi));
}

// Feature noise scale per dimension: variance (j+1)^-1.2 for 0-based j.
double feature_stddev(uint32_t j) { return std::pow(static_cast<double>(j + 1), -0.6); }

void append_samples(const ClientGenParams& p, uint32_t count, uint32_t input_dim,
                    uint32_t num_classes, Rng& rng, std::vector<double>& features,
                    std::vector<uint32_t>& labels) {
    std::vector<double> x(input_dim);
    for (uint32_t i = 0; i < count; ++i) {
        for (uint32_t j = 0; j < input_dim; ++j)
            x[j] = rng.normal(p.means[j], feature_stddev(j));
        uint32_t y = 0;
        double best = -std::numeric_limits<double>::infinity();
        for (uint32_t c = 0; c < num_classes; ++c) {
            const double* w = p.weights.row(c);
            double z = p.bias[c];
            for (uint32_t j = 0; j < input_dim; ++j) z += w[j] * x[j];
            if (z > best) {
                best = z;
                y = c;
            }
        }
        features.insert(features.end(), x.begin(), x.end());
        labels.push_back(y);
    }
}

ClientGenParams draw_gen_params(const SyntheticSpec& spec, Rng& rng) {
    ClientGenParams p;
    p.u = rng.normal(0.0, std::sqrt(spec.alpha));
    p.feature_loc = rng.normal(0.0, std::sqrt(spec.beta));
    p.means.resize(spec.input_dim);
    for (uint32_t j = 0; j < spec.input_dim; ++j) p.means[j] = rng.normal(p.feature_loc, 1.0);
    p.weights = Matrix(spec.num_classes, spec.input_dim);
    for (double& w : p.weights.data) w = rng.normal(p.u, 1.0);
    p.bias.resize(spec.num_classes);
    for (double& b : p.bias) b = rng.normal(0.0, std::sqrt(spec.alpha));
    p.n_samples = draw_sample_count(spec.samples_per_client, rng);
    return p;
}

constexpr uint32_t kHoldoutParties = 10;
constexpr uint32_t kHoldoutRetries = 100;

ClientDataset make_holdout(const SyntheticSpec& spec) {
    // >= 10 samples per class overall, at least 200 so round-level accuracy
    // has reasonable resolution.
    const uint32_t target = std::max(10 * spec.num_classes, 200u);
    const uint32_t per_party = (target + kHoldoutParties - 1) / kHoldoutParties;

    ClientDataset best;
    size_t best_covered = 0;
    for (uint32_t attempt = 0; attempt < kHoldoutRetries; ++attempt) {
        std::vector<double> features;
        std::vector<uint32_t> labels;
        for (uint32_t i = 0; i < kHoldoutParties; ++i) {
            Rng rng(derive_seed(spec.seed, "holdout", static_cast<uint64_t>(attempt) *
                                                              kHoldoutParties +
                                                          i));
            const ClientGenParams p = draw_gen_params(spec, rng);
            append_samples(p, per_party, spec.input_dim, spec.num_classes, rng, features,
                           labels);
        }
        std::vector<bool> seen(spec.num_classes, false);
        for (const uint32_t y : labels) seen[y] = true;
        const size_t covered = static_cast<size_t>(std::count(seen.begin(), seen.end(), true));
        if (covered > best_covered) {
            best_covered = covered;
            best.features = Matrix(labels.size(), spec.input_dim, std::move(features));
            best.labels = std::move(labels);
            best.num_classes = spec.num_classes;
        }
        if (best_covered == spec.num_classes) break;
    }
    return best;
}

}  // namespace

ClientGenParams client_gen_params(const SyntheticSpec& spec, uint32_t client_index) {
    Rng rng(derive_seed(spec.seed, "client", client_index));
    return draw_gen_params(spec, rng);
}

FederatedDataset generate(const SyntheticSpec& spec) {
    validate(spec);
    FederatedDataset ds;
    ds.spec = spec;
    ds.clients.reserve(spec.num_clients);
    for (uint32_t k = 0; k < spec.num_clients; ++k) {
        Rng rng(derive_seed(spec.seed, "client", k));
        const ClientGenParams p = draw_gen_params(spec, rng);
        std::vector<double> features;
        std::vector<uint32_t> labels;
        features.reserve(static_cast<size_t>(p.n_samples) * spec.input_dim);
        append_samples(p, p.n_samples, spec.input_dim, spec.num_classes, rng, features, labels);
        ClientDataset client;
        client.features = Matrix(p.n_samples, spec.input_dim, std::move(features));
        client.labels = std::move(labels);
        client.num_classes = spec.num_classes;
        ds.clients.push_back(std::move(client));
    }
    ds.public_holdout = make_holdout(spec);
    return ds;
}

namespace {

void put_client_block(ByteWriter& w, const ClientDataset& c) {
    ByteWriter block;
    block.put_u32(static_cast<uint32_t>(c.features.rows));
    block.put_u32(static_cast<uint32_t>(c.features.cols));
    block.put_u32(c.num_classes);
    for (const uint32_t y : c.labels) block.put_u32(y);
    for (const double v : c.features.data) block.put_f64(v);
    const auto bytes = block.take();
    w.put_u64(bytes.size());
    w.put_bytes(bytes);
}

ClientDataset get_client_block(ByteReader& r) {
    const uint64_t len = r.get_u64("client block length");
    ByteReader block(r.get_bytes(len, "client block"));
    const uint32_t n = block.get_u32("n_samples");
    const uint32_t d = block.get_u32("input_dim");
    const uint32_t classes = block.get_u32("num_classes");
    ClientDataset c;
    c.num_classes = classes;
    c.labels.resize(n);
    for (uint32_t i = 0; i < n; ++i) c.labels[i] = block.get_u32("label");
    c.features = Matrix(n, d);
    for (double& v : c.features.data) v = block.get_f64("feature");
    block.expect_end("client block");
    validate(c);
    return c;
}

}  // namespace

void save(const FederatedDataset& ds, const std::filesystem::path& path) {
    ByteWriter w;
    w.put_bytes(std::string(kDatasetMagic, 4));
    const std::string header = nlohmann::json(ds.spec).dump();
    w.put_u32(static_cast<uint32_t>(header.size()));
    w.put_bytes(header);
    w.put_u32(static_cast<uint32_t>(ds.clients.size()));
    for (const auto& c : ds.clients) put_client_block(w, c);
    put_client_block(w, ds.public_holdout);
    const auto bytes = w.take();
    write_file_atomic(path.string(), bytes);
}

FederatedDataset load(const std::filesystem::path& path) {
    const auto bytes = read_file(path.string());
    ByteReader r(bytes);
    const auto magic = r.get_bytes(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kDatasetMagic))
        throw FormatError("bad dataset magic: expected MMD1");
    const uint32_t header_len = r.get_u32("header length");
    const auto header = r.get_bytes(header_len, "header");
    FederatedDataset ds;
    try {
        const auto j = nlohmann::json::parse(header.begin(), header.end());
        ds.spec = j.get<SyntheticSpec>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad dataset header JSON: ") + e.what());
    }
    const uint32_t num_clients = r.get_u32("num_clients");
    ds.clients.reserve(num_clients);
    for (uint32_t k = 0; k < num_clients; ++k) ds.clients.push_back(get_client_block(r));
    ds.public_holdout = get_client_block(r);
    r.expect_end("dataset");
    return ds;
}

}  // namespace modelmesh
