#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "modelmesh/datagen.hpp"
#include "modelmesh/discovery.hpp"
#include "modelmesh/distill.hpp"
#include "modelmesh/experiment.hpp"
#include "modelmesh/federation.hpp"
#include "modelmesh/ml.hpp"
#include "modelmesh/model.hpp"
#include "modelmesh/rng.hpp"

namespace py = pybind11;
using namespace modelmesh;

namespace {

Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw ShapeError("expected a 2-d array");
    Matrix m(static_cast<size_t>(a.shape(0)), static_cast<size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + m.rows * m.cols, m.data.begin());
    return m;
}

py::array_t<double> matrix_to_numpy(const Matrix& m) {
    py::array_t<double> a({m.rows, m.cols});
    std::copy(m.data.begin(), m.data.end(), a.mutable_data());
    return a;
}

ClientDataset dataset_from_numpy(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& features,
    const std::vector<uint32_t>& labels, uint32_t num_classes) {
    ClientDataset ds{matrix_from_numpy(features), labels, num_classes};
    validate(ds);
    return ds;
}

}  // namespace

PYBIND11_MODULE(modelmesh, m) {
    m.doc() = "collaborative model training, vaults and discovery";

    py::register_exception<Error>(m, "ModelmeshError");

    py::enum_<ArchKind>(m, "ArchKind")
        .value("logistic_regression", ArchKind::logistic_regression)
        .value("mlp", ArchKind::mlp);

    py::class_<ArchDescriptor>(m, "ArchDescriptor")
        .def(py::init([](ArchKind kind, uint32_t input_dim, std::vector<uint32_t> hidden,
                         uint32_t num_classes) {
                 ArchDescriptor a{kind, input_dim, std::move(hidden), num_classes};
                 validate(a);
                 return a;
             }),
             py::arg("kind"), py::arg("input_dim"), py::arg("hidden_dims"),
             py::arg("num_classes"))
        .def_readonly("kind", &ArchDescriptor::kind)
        .def_readonly("input_dim", &ArchDescriptor::input_dim)
        .def_readonly("hidden_dims", &ArchDescriptor::hidden_dims)
        .def_readonly("num_classes", &ArchDescriptor::num_classes)
        .def("param_count", [](const ArchDescriptor& a) { return param_count(a); })
        .def("__eq__", [](const ArchDescriptor& a, const ArchDescriptor& b) { return a == b; });

    py::class_<Model>(m, "Model")
        .def_readonly("arch", &Model::arch)
        .def_property_readonly("params",
                               [](const Model& model) {
                                   return py::array_t<double>(
                                       static_cast<py::ssize_t>(model.params.size()),
                                       model.params.data());
                               })
        .def("serialize",
             [](const Model& model) {
                 const auto bytes = serialize_model(model);
                 return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
             })
        .def_static("deserialize", [](const py::bytes& raw) {
            const std::string_view view = raw;
            return deserialize_model(
                std::span(reinterpret_cast<const uint8_t*>(view.data()), view.size()));
        });

    m.def("init_model", &init_model, py::arg("arch"), py::arg("seed"));
    m.def("zero_model", &zero_model, py::arg("arch"));

    py::class_<ClientDataset>(m, "ClientDataset")
        .def(py::init(&dataset_from_numpy), py::arg("features"), py::arg("labels"),
             py::arg("num_classes"))
        .def_property_readonly(
            "features", [](const ClientDataset& ds) { return matrix_to_numpy(ds.features); })
        .def_readonly("labels", &ClientDataset::labels)
        .def_readonly("num_classes", &ClientDataset::num_classes)
        .def("__len__", &ClientDataset::size);

    py::class_<QualityReport>(m, "QualityReport")
        .def_readonly("overall_accuracy", &QualityReport::overall_accuracy)
        .def_readonly("per_class_accuracy", &QualityReport::per_class_accuracy)
        .def_readonly("eval_dataset_id", &QualityReport::eval_dataset_id)
        .def_readonly("num_eval_samples", &QualityReport::num_eval_samples);

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init([](uint32_t epochs, uint32_t batch_size, double learning_rate,
                         uint64_t seed) {
                 TrainConfig cfg{epochs, batch_size, learning_rate, seed};
                 validate(cfg);
                 return cfg;
             }),
             py::arg("epochs") = 1, py::arg("batch_size") = 32, py::arg("learning_rate") = 0.05,
             py::arg("seed") = 0)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("seed", &TrainConfig::seed);

    m.def(
        "forward",
        [](const Model& model,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& features) {
            return matrix_to_numpy(forward(model, matrix_from_numpy(features)));
        },
        py::arg("model"), py::arg("features"));
    m.def(
        "softmax",
        [](const std::vector<double>& logits) { return softmax(std::span(logits)); },
        py::arg("logits"));
    m.def("ce_loss_and_grad", &ce_loss_and_grad, py::arg("model"), py::arg("batch"));
    m.def("sgd_train", &sgd_train, py::arg("model"), py::arg("data"), py::arg("config"));
    m.def("evaluate", &evaluate, py::arg("model"), py::arg("data"),
          py::arg("eval_dataset_id") = "");

    py::class_<SyntheticSpec>(m, "SyntheticSpec")
        .def(py::init([](uint32_t num_clients, uint32_t input_dim, uint32_t num_classes,
                         double alpha, double beta, uint64_t seed) {
                 SyntheticSpec spec;
                 spec.num_clients = num_clients;
                 spec.input_dim = input_dim;
                 spec.num_classes = num_classes;
                 spec.alpha = alpha;
                 spec.beta = beta;
                 spec.seed = seed;
                 validate(spec);
                 return spec;
             }),
             py::arg("num_clients"), py::arg("input_dim") = 60, py::arg("num_classes") = 10,
             py::arg("alpha") = 1.0, py::arg("beta") = 1.0, py::arg("seed") = 0)
        .def_readwrite("num_clients", &SyntheticSpec::num_clients)
        .def_readwrite("input_dim", &SyntheticSpec::input_dim)
        .def_readwrite("num_classes", &SyntheticSpec::num_classes)
        .def_readwrite("alpha", &SyntheticSpec::alpha)
        .def_readwrite("beta", &SyntheticSpec::beta)
        .def_readwrite("seed", &SyntheticSpec::seed);

    py::class_<FederatedDataset>(m, "FederatedDataset")
        .def_readonly("clients", &FederatedDataset::clients)
        .def_readonly("public_holdout", &FederatedDataset::public_holdout);

    m.def("generate", &generate, py::arg("spec"));

    py::class_<DistillConfig>(m, "DistillConfig")
        .def(py::init([](double temperature, double mix, uint32_t epochs, uint32_t batch_size,
                         double learning_rate, uint64_t seed) {
                 DistillConfig cfg{temperature, mix, epochs, batch_size, learning_rate, seed};
                 validate(cfg);
                 return cfg;
             }),
             py::arg("temperature") = 2.0, py::arg("mix") = 0.7, py::arg("epochs") = 5,
             py::arg("batch_size") = 32, py::arg("learning_rate") = 0.05, py::arg("seed") = 0)
        .def_readwrite("temperature", &DistillConfig::temperature)
        .def_readwrite("mix", &DistillConfig::mix)
        .def_readwrite("epochs", &DistillConfig::epochs)
        .def_readwrite("batch_size", &DistillConfig::batch_size)
        .def_readwrite("learning_rate", &DistillConfig::learning_rate)
        .def_readwrite("seed", &DistillConfig::seed);

    m.def("distill_loss_and_grad", &distill_loss_and_grad, py::arg("student"), py::arg("teacher"),
          py::arg("batch"), py::arg("config"));
    m.def("distill_train", &distill_train, py::arg("student"), py::arg("teacher"),
          py::arg("data"), py::arg("config"));

    m.def("parse_query", &parse_query, py::arg("text"));
    m.def("serialize_query", &serialize_query, py::arg("query"));
    py::class_<Query>(m, "Query")
        .def_property_readonly("text", &serialize_query)
        .def_readonly("exclude_owner", &Query::exclude_owner);

    m.def("derive_seed",
          py::overload_cast<uint64_t, std::string_view, uint64_t>(&derive_seed),
          py::arg("base"), py::arg("label"), py::arg("index"));
    m.def("derive_seed", py::overload_cast<uint64_t, std::string_view>(&derive_seed),
          py::arg("base"), py::arg("label"));
}
