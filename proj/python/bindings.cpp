#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "splitinfer/attacks.hpp"
#include "splitinfer/metrics.hpp"
#include "splitinfer/network.hpp"
#include "splitinfer/splitexec.hpp"

namespace py = pybind11;
using namespace splitinfer;

PYBIND11_MODULE(_core, m) {
    m.doc() = "split inference with dropped activation outputs";

    py::register_exception<Error>(m, "SplitInferError", PyExc_RuntimeError);

    py::class_<Activation>(m, "Activation")
        .def_static("linear", &Activation::linear)
        .def_static("sigmoid", &Activation::sigmoid)
        .def_static("tanh", &Activation::tanh)
        .def_static("rectifier", &Activation::rectifier)
        .def_static("ramp", &Activation::ramp, py::arg("v"))
        .def_property_readonly("invertible", &Activation::invertible)
        .def("__repr__", [](const Activation& a) { return to_string(a); });

    py::class_<TrainConfig>(m, "TrainConfig")
        .def(py::init<>())
        .def_readwrite("batch_size", &TrainConfig::batch_size)
        .def_readwrite("epochs", &TrainConfig::epochs)
        .def_readwrite("learning_rate", &TrainConfig::learning_rate)
        .def_readwrite("adam_beta1", &TrainConfig::adam_beta1)
        .def_readwrite("adam_beta2", &TrainConfig::adam_beta2)
        .def_readwrite("adam_eps", &TrainConfig::adam_eps)
        .def_readwrite("dropout_probs", &TrainConfig::dropout_probs)
        .def_readwrite("rng_seed", &TrainConfig::rng_seed);

    py::class_<MlpModel>(m, "MlpModel")
        .def_property_readonly("input_dim", [](const MlpModel& mdl) { return mdl.input_dim; })
        .def_property_readonly("output_dim", &MlpModel::output_dim)
        .def_property_readonly("layer_widths",
                               [](const MlpModel& mdl) {
                                   std::vector<std::size_t> w;
                                   for (const LayerParams& l : mdl.layers)
                                       w.push_back(l.out_dim());
                                   return w;
                               })
        .def("__repr__", [](const MlpModel& mdl) {
            std::string s = "MlpModel(" + std::to_string(mdl.input_dim);
            for (const LayerParams& l : mdl.layers)
                s += "-" + std::to_string(l.out_dim());
            return s + ")";
        });

    py::class_<Dataset>(m, "Dataset")
        .def(py::init<>())
        .def_readwrite("images", &Dataset::images)
        .def_readwrite("labels", &Dataset::labels)
        .def_readwrite("class_count", &Dataset::class_count)
        .def("__len__", &Dataset::size);

    py::enum_<MaskSeeding>(m, "MaskSeeding")
        .value("PerQueryRandom", MaskSeeding::PerQueryRandom)
        .value("DataMax", MaskSeeding::DataMax);

    py::class_<DropPolicy>(m, "DropPolicy")
        .def_static("none", &DropPolicy::none)
        .def_static("drop_activations", &DropPolicy::drop_activations, py::arg("p"))
        .def_static("drop_connections", &DropPolicy::drop_connections, py::arg("p"))
        .def_static("add_noise", &DropPolicy::add_noise, py::arg("p"),
                    py::arg("sigma") = 0.1)
        .def_readonly("p", &DropPolicy::p)
        .def_readonly("sigma", &DropPolicy::sigma);

    py::class_<SplitPlan>(m, "SplitPlan")
        .def(py::init<>())
        .def_readwrite("cut", &SplitPlan::cut)
        .def_readwrite("policy", &SplitPlan::policy)
        .def_readwrite("seeding", &SplitPlan::seeding);

    py::class_<DropMask>(m, "DropMask")
        .def_readonly("width", &DropMask::width)
        .def_readonly("dropped", &DropMask::dropped)
        .def_readonly("p", &DropMask::p)
        .def_readonly("seed", &DropMask::seed);

    py::enum_<InvertMode>(m, "InvertMode")
        .value("PseudoInverse", InvertMode::PseudoInverse)
        .value("Transpose", InvertMode::Transpose);

    py::class_<SweepRow>(m, "SweepRow")
        .def_readonly("p", &SweepRow::p)
        .def_readonly("mean_accuracy", &SweepRow::mean_accuracy)
        .def_readonly("std_dev", &SweepRow::std_dev)
        .def_readonly("max_acc", &SweepRow::max_acc)
        .def_readonly("min_acc", &SweepRow::min_acc)
        .def_readonly("trials", &SweepRow::trials)
        .def_readonly("has_std", &SweepRow::has_std);

    m.def(
        "make_mlp",
        [](const std::vector<std::size_t>& widths, const std::vector<Activation>& acts,
           std::uint64_t seed) { return make_mlp(widths, acts, seed); },
        py::arg("widths"), py::arg("activations"), py::arg("seed") = 1);

    m.def(
        "train",
        [](MlpModel& model, const Dataset& data, const TrainConfig& cfg) {
            return train(model, data, cfg).loss_curve;
        },
        py::arg("model"), py::arg("data"), py::arg("config"),
        "Trains in place; returns the per-epoch loss curve.");

    m.def("evaluate", &evaluate, py::arg("model"), py::arg("data"));
    m.def("forward_probs", &forward_probs, py::arg("model"), py::arg("x"));
    m.def("save_model", &save_model, py::arg("model"), py::arg("path"));
    m.def("load_model", &load_model, py::arg("path"));
    m.def("front_slice", &front_slice, py::arg("model"), py::arg("cut"));
    m.def("rear_slice", &rear_slice, py::arg("model"), py::arg("cut"));

    m.def("make_mask", &make_mask, py::arg("width"), py::arg("p"), py::arg("seed"));
    m.def("seed_from_input", &seed_from_input, py::arg("x"));
    m.def(
        "client_forward",
        [](const MlpModel& front, const Vector& x, const SplitPlan& plan,
           std::uint64_t query_seed) {
            const ClientResult r = client_forward(front, x, plan, query_seed);
            return py::make_tuple(r.activations, r.mask);
        },
        py::arg("front"), py::arg("x"), py::arg("plan"), py::arg("query_seed") = 0);
    m.def("server_forward", &server_forward, py::arg("rear"), py::arg("activations"));

    m.def("invert_exact", &invert_exact, py::arg("activations"), py::arg("layer"));
    m.def(
        "invert_exact",
        [](const Vector& a, const MlpModel& front) {
            return invert_exact_chain(a, front.layers);
        },
        py::arg("activations"), py::arg("front"));
    m.def(
        "invert_dropped",
        [](const Vector& a_hat, const MlpModel& front, InvertMode mode) {
            if (front.layers.size() != 1)
                throw Error("invert_dropped expects a single-layer front");
            return invert_dropped(a_hat, front.layers.front(), mode);
        },
        py::arg("activations"), py::arg("front"), py::arg("mode"));

    m.def("kl_divergence_image", &kl_divergence_image, py::arg("x"), py::arg("x_hat"));
    m.def("drop_sweep", &drop_sweep, py::arg("model"), py::arg("test"), py::arg("p_list"),
          py::arg("trials"), py::arg("rng_seed"), py::arg("cut") = 1);

    m.def(
        "overlap_probability",
        [](std::uint64_t n, std::uint64_t m_dropped) {
            return overlap_probability(n, m_dropped);
        },
        py::arg("neurons"), py::arg("dropped"));
    m.def(
        "brute_force_combinations",
        [](std::uint64_t n, std::uint64_t m_dropped) {
            // exact arbitrary-precision count, returned as a python int
            return py::int_(py::str(
                brute_force_cost(n, m_dropped).total_combinations.to_string()));
        },
        py::arg("grid_points"), py::arg("dropped"));

    m.def("synth_blobs", &synth_blobs, py::arg("classes"), py::arg("per_class"),
          py::arg("dim"), py::arg("seed"), py::arg("noise") = 0.08);
    m.def("load_mnist_idx", &load_mnist_idx, py::arg("images_path"), py::arg("labels_path"));
}
