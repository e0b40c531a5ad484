#include "modelmesh/model.hpp"

#include <cmath>

#include "modelmesh/bytes.hpp"
#include "modelmesh/rng.hpp"

namespace modelmesh {

std::string to_string(ArchKind kind) {
    return kind == ArchKind::logistic_regression ? "lr" : "mlp";
}

ArchKind arch_kind_from_string(const std::string& s) {
    if (s == "lr") return ArchKind::logistic_regression;
    if (s == "mlp") return ArchKind::mlp;
    throw ConfigError("unknown architecture kind '" + s + "' (expected lr or mlp)");
}

void validate(const ArchDescriptor& arch) {
    if (arch.input_dim < 1) throw ConfigError("arch input_dim must be >= 1");
    if (arch.num_classes < 2) throw ConfigError("arch num_classes must be >= 2");
    for (const uint32_t h : arch.hidden_dims)
        if (h < 1) throw ConfigError("arch hidden dims must be >= 1");
    if (arch.kind == ArchKind::logistic_regression && !arch.hidden_dims.empty())
        throw ConfigError("logistic regression arch must have no hidden dims");
}

std::vector<std::pair<uint32_t, uint32_t>> layer_shapes(const ArchDescriptor& arch) {
    std::vector<std::pair<uint32_t, uint32_t>> shapes;
    uint32_t in = arch.input_dim;
    for (const uint32_t h : arch.hidden_dims) {
        shapes.emplace_back(in, h);
        in = h;
    }
    shapes.emplace_back(in, arch.num_classes);
    return shapes;
}

size_t param_count(const ArchDescriptor& arch) { return ParamLayout::of(arch).total; }

ParamLayout ParamLayout::of(const ArchDescriptor& arch) {
    ParamLayout layout;
    layout.shapes = layer_shapes(arch);
    size_t off = 0;
    for (const auto& [in, out] : layout.shapes) {
        layout.weight_offset.push_back(off);
        off += static_cast<size_t>(in) * out;
    }
    for (const auto& [in, out] : layout.shapes) {
        (void)in;
        layout.bias_offset.push_back(off);
        off += out;
    }
    layout.total = off;
    return layout;
}

void validate(const Model& model) {
    validate(model.arch);
    if (model.params.size() != param_count(model.arch))
        throw ShapeError("model params length " + std::to_string(model.params.size()) +
                         " does not match arch (expected " +
                         std::to_string(param_count(model.arch)) + ")");
    for (const double p : model.params)
        if (!std::isfinite(p)) throw FormatError("model contains a non-finite parameter");
}

Model zero_model(const ArchDescriptor& arch) {
    validate(arch);
    return Model{arch, std::vector<double>(param_count(arch), 0.0)};
}

Model init_model(const ArchDescriptor& arch, uint64_t seed) {
    Model m = zero_model(arch);
    const ParamLayout layout = ParamLayout::of(arch);
    Rng rng(seed);
    for (size_t l = 0; l < layout.shapes.size(); ++l) {
        const auto [in, out] = layout.shapes[l];
        const double s = std::sqrt(6.0 / (static_cast<double>(in) + out));
        double* w = m.params.data() + layout.weight_offset[l];
        const size_t n = static_cast<size_t>(in) * out;
        for (size_t i = 0; i < n; ++i) w[i] = rng.uniform(-s, s);
    }
    return m;
}

std::vector<uint8_t> serialize_model(const Model& model) {
    validate(model);
    ByteWriter w;
    w.put_bytes(std::string(kModelMagic, 4));
    w.put_u8(model.arch.kind == ArchKind::logistic_regression ? 0 : 1);
    w.put_u32(model.arch.input_dim);
    w.put_u32(static_cast<uint32_t>(model.arch.hidden_dims.size()));
    for (const uint32_t h : model.arch.hidden_dims) w.put_u32(h);
    w.put_u32(model.arch.num_classes);
    w.put_u64(model.params.size());
    for (const double p : model.params) w.put_f64(p);
    return w.take();
}

Model deserialize_model(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    const auto magic = r.get_bytes(4, "magic");
    if (!std::equal(magic.begin(), magic.end(), kModelMagic))
        throw FormatError("bad model magic: expected MMV1");
    Model m;
    const uint8_t kind = r.get_u8("kind");
    if (kind > 1) throw FormatError("unknown model kind byte " + std::to_string(kind));
    m.arch.kind = kind == 0 ? ArchKind::logistic_regression : ArchKind::mlp;
    m.arch.input_dim = r.get_u32("input_dim");
    const uint32_t nh = r.get_u32("hidden count");
    m.arch.hidden_dims.resize(nh);
    for (uint32_t i = 0; i < nh; ++i) m.arch.hidden_dims[i] = r.get_u32("hidden dim");
    m.arch.num_classes = r.get_u32("num_classes");
    const uint64_t np = r.get_u64("param count");
    if (np != param_count(m.arch))
        throw FormatError("param count " + std::to_string(np) + " does not match arch");
    m.params.resize(np);
    for (uint64_t i = 0; i < np; ++i) m.params[i] = r.get_f64("param");
    r.expect_end("model");
    validate(m);
    return m;
}

void to_json(nlohmann::json& j, const ArchDescriptor& arch) {
    j = nlohmann::json{{"kind", to_string(arch.kind)},
                       {"input_dim", arch.input_dim},
                       {"hidden_dims", arch.hidden_dims},
                       {"num_classes", arch.num_classes}};
}

void from_json(const nlohmann::json& j, ArchDescriptor& arch) {
    arch.kind = arch_kind_from_string(j.at("kind").get<std::string>());
    arch.input_dim = j.at("input_dim").get<uint32_t>();
    arch.hidden_dims = j.at("hidden_dims").get<std::vector<uint32_t>>();
    arch.num_classes = j.at("num_classes").get<uint32_t>();
}

}  // namespace modelmesh
