// Python bindings for the rqmap core: scene construction, depth projection,
// the three field generators, metrics, and the neural backbones.
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rqmap/backbones.hpp"
#include "rqmap/eval.hpp"
#include "rqmap/fields.hpp"
#include "rqmap/geometry.hpp"
#include "rqmap/io.hpp"
#include "rqmap/pipeline.hpp"
#include "rqmap/scene.hpp"

namespace py = pybind11;
using namespace rqmap;

namespace {

py::array_t<float> grid_to_array(const std::vector<float>& values, int h, int w) {
    py::array_t<float> out({h, w});
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

Tensor<float> tensor_from_array(const py::array_t<float, py::array::c_style | py::array::forcecast>& a) {
    std::vector<int> shape(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[static_cast<std::size_t>(i)] = static_cast<int>(a.shape(i));
    Tensor<float> t(shape);
    std::copy(a.data(), a.data() + a.size(), t.data());
    return t;
}

py::array_t<float> array_from_tensor(const Tensor<float>& t) {
    std::vector<py::ssize_t> shape(t.shape.begin(), t.shape.end());
    py::array_t<float> out(shape);
    std::copy(t.v.begin(), t.v.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "rqmap: warehouse field-map simulator and forecasting backbones";

    py::enum_<Modality>(m, "Modality")
        .value("radio", Modality::radio)
        .value("illumination", Modality::illumination)
        .value("temperature", Modality::temperature);

    py::enum_<AntennaPlacement>(m, "AntennaPlacement")
        .value("corner", AntennaPlacement::corner)
        .value("center", AntennaPlacement::center);

    py::enum_<Backbone>(m, "Backbone")
        .value("vit", Backbone::vit)
        .value("cnn", Backbone::cnn)
        .value("mlp", Backbone::mlp);

    py::class_<SceneSpec>(m, "SceneSpec")
        .def(py::init<>())
        .def_readwrite("floor_x_m", &SceneSpec::floor_x_m)
        .def_readwrite("floor_y_m", &SceneSpec::floor_y_m)
        .def_readwrite("ceiling_m", &SceneSpec::ceiling_m)
        .def_readwrite("shelf_rows", &SceneSpec::shelf_rows)
        .def_readwrite("shelf_cols", &SceneSpec::shelf_cols)
        .def_readwrite("shelf_len_m", &SceneSpec::shelf_len_m)
        .def_readwrite("shelf_wid_m", &SceneSpec::shelf_wid_m)
        .def_readwrite("shelf_base_height_m", &SceneSpec::shelf_base_height_m)
        .def_readwrite("goods_amplitude_m", &SceneSpec::goods_amplitude_m)
        .def_readwrite("goods_period_steps", &SceneSpec::goods_period_steps)
        .def_readwrite("n_obstacles", &SceneSpec::n_obstacles)
        .def_readwrite("obstacle_min_m", &SceneSpec::obstacle_min_m)
        .def_readwrite("obstacle_max_m", &SceneSpec::obstacle_max_m)
        .def_readwrite("rng_seed", &SceneSpec::rng_seed)
        .def("validate", &SceneSpec::validate);

    py::class_<SourceSpec>(m, "SourceSpec")
        .def(py::init<>())
        .def_readwrite("position_m", &SourceSpec::position_m)
        .def_readwrite("power", &SourceSpec::power);

    py::class_<SceneState>(m, "SceneState")
        .def_readonly("t", &SceneState::t)
        .def_readonly("sources", &SceneState::sources)
        .def_property_readonly("n_shelves",
                               [](const SceneState& s) { return s.shelves.size(); })
        .def_property_readonly("n_obstacles",
                               [](const SceneState& s) { return s.obstacles.size(); });

    py::class_<DepthMap>(m, "DepthMap")
        .def_readonly("h", &DepthMap::h)
        .def_readonly("w", &DepthMap::w)
        .def_readonly("ceiling_m", &DepthMap::ceiling_m)
        .def_property_readonly(
            "values", [](const DepthMap& d) { return grid_to_array(d.values, d.h, d.w); });

    py::class_<FieldMap>(m, "FieldMap")
        .def_readonly("h", &FieldMap::h)
        .def_readonly("w", &FieldMap::w)
        .def_readonly("modality", &FieldMap::modality)
        .def_readonly("raw_range", &FieldMap::raw_range)
        .def_property_readonly(
            "values", [](const FieldMap& f) { return grid_to_array(f.values, f.h, f.w); });

    m.def("build_scene", &build_scene, py::arg("spec"), py::arg("t"));
    m.def("scene_with_sources", &scene_with_sources, py::arg("spec"), py::arg("t"),
          py::arg("antenna") = AntennaPlacement::corner);
    m.def("project_depth", &project_depth, py::arg("scene"), py::arg("h") = 64, py::arg("w") = 64);
    m.def("radio_antenna", &radio_antenna, py::arg("spec"), py::arg("placement"),
          py::arg("power_dbm") = 5.0);
    m.def("corridor_lights", &corridor_lights, py::arg("spec"));
    m.def("corridor_heat_sources", &corridor_heat_sources, py::arg("spec"));

    m.def(
        "radio_map",
        [](const DepthMap& d, const SourceSpec& antenna) { return radio_map(d, antenna); },
        py::arg("depth"), py::arg("antenna"));
    m.def(
        "illumination_map",
        [](const DepthMap& d, const std::vector<SourceSpec>& lights) {
            return illumination_map(d, lights);
        },
        py::arg("depth"), py::arg("lights"));
    m.def(
        "temperature_map",
        [](const DepthMap& d, const std::vector<SourceSpec>& sources, double tol) {
            return temperature_map(d, sources, tol);
        },
        py::arg("depth"), py::arg("sources"), py::arg("tol") = 1e-6);
    m.def(
        "generate_labeled_sample",
        [](const SceneState& scene, Modality mod, int h, int w) {
            return generate_labeled_sample(scene, mod, h, w);
        },
        py::arg("scene"), py::arg("modality"), py::arg("h") = 64, py::arg("w") = 64);

    m.def(
        "psnr",
        [](py::array_t<float, py::array::c_style | py::array::forcecast> pred,
           py::array_t<float, py::array::c_style | py::array::forcecast> truth, double range) {
            if (pred.size() != truth.size()) throw py::value_error("psnr: size mismatch");
            return psnr(pred.data(), truth.data(), static_cast<std::size_t>(pred.size()), range);
        },
        py::arg("pred"), py::arg("truth"), py::arg("data_range") = 1.0);

    py::class_<Model<float>>(m, "Model")
        .def_readonly("arch", &Model<float>::arch)
        .def_readonly("in_channels", &Model<float>::in_channels)
        .def("param_count", &Model<float>::param_count)
        .def("forward",
             [](Model<float>& model,
                py::array_t<float, py::array::c_style | py::array::forcecast> x) {
                 return array_from_tensor(model.forward(tensor_from_array(x)));
             },
             py::arg("x"));

    m.def(
        "build_backbone",
        [](Backbone b, int in_channels, std::uint64_t seed) {
            return build_backbone<float>(b, in_channels, seed);
        },
        py::arg("backbone"), py::arg("in_channels") = 4, py::arg("seed") = 1);
    m.def("build_from_arch", &build_from_arch, py::arg("arch"), py::arg("seed") = 0);
    m.def(
        "load_checkpoint",
        [](const std::string& path) {
            Model<float> model = build_from_arch(read_checkpoint_arch(path), 0);
            load_model(model, path);
            return model;
        },
        py::arg("path"));
    m.def(
        "save_checkpoint",
        [](Model<float>& model, const std::string& path) { save_model(model, path); },
        py::arg("model"), py::arg("path"));
}
