#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "elmc/bench.hpp"
#include "elmc/config_json.hpp"
#include "elmc/datagen.hpp"
#include "elmc/error.hpp"
#include "elmc/model.hpp"
#include "elmc/pca.hpp"

namespace py = pybind11;
using namespace elmc;

namespace {

nlohmann::json parse_json(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
}

TrainConfig parse_config(const std::string& config_json) {
    if (config_json.empty()) return {};
    return config_from_json(parse_json(config_json));
}

FieldDataset make_dataset(const Matrix& inputs, const Matrix& fields, std::pair<std::size_t, std::size_t> grid) {
    FieldDataset ds;
    ds.inputs = inputs;
    ds.fields = fields;
    ds.grid = {grid.first, grid.second};
    ds.validate();
    return ds;
}

/// Owns one trained model of any kind.
struct PyModel {
    AnyModel model;

    [[nodiscard]] std::string kind() const { return model_kind(model); }
    [[nodiscard]] Matrix predict(const Matrix& xq) const {
        py::gil_scoped_release release;
        return elmc::predict(model, xq);
    }
    [[nodiscard]] Matrix latent_variance(const Matrix& xq) const {
        if (const auto* m = std::get_if<ElmcModel>(&model)) return latent_variances(m->gps, xq);
        if (const auto* m = std::get_if<LmcModel>(&model)) return latent_variances(m->gps, xq);
        throw ValidationError("latent_variance needs an elmc or lmc model");
    }
    void save(const std::filesystem::path& path) const { save_model(model, path); }
    [[nodiscard]] std::string to_json() const { return model_to_json(model); }
};

PyModel train(const std::string& method, const Matrix& inputs, const Matrix& fields,
              std::pair<std::size_t, std::size_t> grid, Index rank, std::uint64_t seed, const std::string& config_json) {
    const FieldDataset ds = make_dataset(inputs, fields, grid);
    const TrainConfig cfg = parse_config(config_json);
    py::gil_scoped_release release;
    if (method == "elmc") return {train_elmc(ds, rank, cfg, seed)};
    if (method == "lmc") return {train_lmc(ds, rank, cfg, seed)};
    if (method == "mlp") return {train_mlp_baseline(ds, cfg, seed)};
    throw ValidationError("method must be elmc, lmc or mlp, got '" + method + "'");
}

}  // namespace

PYBIND11_MODULE(_elmc, m) {
    m.doc() = "Spatial field surrogates: E-LMC, LMC and MLP baselines";

    py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def(
        "generate",
        [](const std::string& name, std::size_t n, std::pair<std::size_t, std::size_t> grid, std::uint64_t seed) {
            const FieldDataset ds = datagen::generate_dataset({name, {grid.first, grid.second}, n, seed});
            return py::make_tuple(ds.inputs, ds.fields);
        },
        py::arg("name"), py::arg("n"), py::arg("grid"), py::arg("seed") = 0,
        "Synthetic dataset as (inputs n x 3, fields n x H*W).");

    m.def(
        "load_dataset",
        [](const std::filesystem::path& dir) {
            const FieldDataset ds = elmc::load_dataset(dir);
            return py::make_tuple(ds.inputs, ds.fields, py::make_tuple(ds.grid.height, ds.grid.width));
        },
        py::arg("path"), "Dataset directory as (inputs, fields, (H, W)).");

    m.def(
        "save_dataset",
        [](const Matrix& inputs, const Matrix& fields, std::pair<std::size_t, std::size_t> grid,
           const std::filesystem::path& dir) { elmc::save_dataset(make_dataset(inputs, fields, grid), dir); },
        py::arg("inputs"), py::arg("fields"), py::arg("grid"), py::arg("path"));

    m.def(
        "split_indices",
        [](std::size_t m_total, std::size_t n_train, std::uint64_t seed) {
            return elmc::split_indices(m_total, n_train, seed);
        },
        py::arg("n_samples"), py::arg("n_train"), py::arg("seed"), "Seeded (train, test) row indices.");

    py::class_<PyModel>(m, "Model")
        .def_property_readonly("kind", &PyModel::kind)
        .def("predict", &PyModel::predict, py::arg("inputs"), "Predicted fields (n x d) in original units.")
        .def("latent_variance", &PyModel::latent_variance, py::arg("inputs"),
             "Predictive variance of each latent GP (n x r).")
        .def("save", &PyModel::save, py::arg("path"))
        .def("to_json", &PyModel::to_json);

    m.def("train", &train, py::arg("method"), py::arg("inputs"), py::arg("fields"), py::arg("grid"),
          py::arg("rank") = 10, py::arg("seed") = 0, py::arg("config_json") = "",
          "Train an elmc, lmc or mlp model. `config_json` holds TrainConfig keys.");
    m.def(
        "load_model", [](const std::filesystem::path& path) { return PyModel{elmc::load_model(path)}; },
        py::arg("path"));
    m.def(
        "model_from_json", [](const std::string& text) { return PyModel{elmc::model_from_json(text)}; },
        py::arg("text"));

    m.def("evaluate_mse", &elmc::evaluate_mse, py::arg("pred"), py::arg("truth"));

    m.def(
        "fit_pca",
        [](const Matrix& data, Index rank) {
            const pca::PcaBasis b = pca::fit_pca(data, rank);
            return py::make_tuple(b.mean, b.basis, b.component_variances);
        },
        py::arg("data"), py::arg("rank"), "(mean, basis d x r, component variances).");

    m.def(
        "bench",
        [](const std::string& config_json) {
            const bench::BenchConfig cfg = bench::config_from_json(parse_json(config_json));
            const FieldDataset data = bench::resolve_dataset(cfg);
            py::gil_scoped_release release;
            return bench::results_csv(bench::run_bench(cfg, data));
        },
        py::arg("config_json"), "Run a bench sweep and return the results CSV text.");

    m.def(
        "render_pgm",
        [](const Vector& field, std::pair<std::size_t, std::size_t> grid) {
            return elmc::render_pgm(field, {grid.first, grid.second});
        },
        py::arg("field"), py::arg("grid"));
}
