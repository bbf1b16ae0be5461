#include <cmath>

#include "elmc/config_json.hpp"
#include "elmc/error.hpp"
#include "elmc/model.hpp"
#include "elmc/text_io.hpp"

namespace elmc {

using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

json widths_json(const std::vector<std::size_t>& w) { return json(w); }

}  // namespace

json config_to_json(const TrainConfig& cfg) {
    json j = {
        {"identity_bypass", cfg.identity_bypass},
        {"hidden_activation", mlp::to_string(cfg.activations.hidden)},
        {"latent_activation", mlp::to_string(cfg.activations.latent)},
        {"output_activation", mlp::to_string(cfg.activations.output)},
        {"epochs", cfg.epochs},
        {"batch_size", cfg.batch_size},
        {"lr", cfg.lr},
        {"gp_iters", cfg.gp_iters},
        {"gp_lr", cfg.gp_lr},
        {"jitter", cfg.jitter},
        {"gp_threads", cfg.gp_threads},
        {"normalize", cfg.normalize},
        {"baseline_widths", widths_json(cfg.baseline_widths)},
        {"baseline_epochs", cfg.baseline_epochs},
        {"baseline_batch_size", cfg.baseline_batch_size},
        {"baseline_lr", cfg.baseline_lr},
        {"baseline_output_activation", mlp::to_string(cfg.baseline_output)},
    };
    if (cfg.widths_disentangle) j["widths_disentangle"] = widths_json(*cfg.widths_disentangle);
    if (cfg.widths_reconstruct) j["widths_reconstruct"] = widths_json(*cfg.widths_reconstruct);
    return j;
}

TrainConfig config_from_json(const json& j, TrainConfig cfg) {
    if (!j.is_object()) throw ValidationError("training config must be a JSON object");
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "identity_bypass") cfg.identity_bypass = value.get<bool>();
            else if (key == "widths_disentangle") cfg.widths_disentangle = value.get<std::vector<std::size_t>>();
            else if (key == "widths_reconstruct") cfg.widths_reconstruct = value.get<std::vector<std::size_t>>();
            else if (key == "hidden_activation") cfg.activations.hidden = mlp::activation_from_string(value.get<std::string>());
            else if (key == "latent_activation") cfg.activations.latent = mlp::activation_from_string(value.get<std::string>());
            else if (key == "output_activation") cfg.activations.output = mlp::activation_from_string(value.get<std::string>());
            else if (key == "epochs") cfg.epochs = value.get<std::size_t>();
            else if (key == "batch_size") cfg.batch_size = value.get<std::size_t>();
            else if (key == "lr") cfg.lr = value.get<double>();
            else if (key == "gp_iters") cfg.gp_iters = value.get<std::size_t>();
            else if (key == "gp_lr") cfg.gp_lr = value.get<double>();
            else if (key == "jitter") cfg.jitter = value.get<double>();
            else if (key == "gp_threads") cfg.gp_threads = value.get<std::size_t>();
            else if (key == "normalize") cfg.normalize = value.get<bool>();
            else if (key == "baseline_widths") cfg.baseline_widths = value.get<std::vector<std::size_t>>();
            else if (key == "baseline_epochs") cfg.baseline_epochs = value.get<std::size_t>();
            else if (key == "baseline_batch_size") cfg.baseline_batch_size = value.get<std::size_t>();
            else if (key == "baseline_lr") cfg.baseline_lr = value.get<double>();
            else if (key == "baseline_output_activation") cfg.baseline_output = mlp::activation_from_string(value.get<std::string>());
            else throw ValidationError("unknown training config key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("training config: ") + e.what());
    }
    if (cfg.batch_size < 1 || cfg.baseline_batch_size < 1) throw ValidationError("batch sizes must be >= 1");
    if (!(cfg.lr > 0.0) || !(cfg.gp_lr > 0.0) || !(cfg.baseline_lr > 0.0)) {
        throw ValidationError("learning rates must be positive");
    }
    return cfg;
}

namespace {

json vector_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

json rows_json(const Matrix& m) {
    json rows = json::array();
    for (Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(m.row(i).transpose()));
    return rows;
}

json cols_json(const Matrix& m) { return rows_json(m.transpose()); }

json stack_json(const mlp::LayerStack& stack) {
    json layers = json::array();
    for (const auto& layer : stack.layers) {
        layers.push_back({{"w", rows_json(layer.weight)}, {"b", vector_json(layer.bias)}, {"act", mlp::to_string(layer.act)}});
    }
    return layers;
}

json gp_json(const gp::GpModel& g) {
    return {
        {"log_signal_variance", g.hyper.log_signal_variance},
        {"log_lengthscales", vector_json(g.hyper.log_lengthscales)},
        {"log_noise_variance", g.hyper.log_noise_variance},
        {"jitter", g.jitter},
        {"train_inputs", rows_json(g.train_inputs)},
        {"train_targets", vector_json(g.train_targets)},
    };
}

json header_json(const std::string& kind, GridShape grid, const AffineTransform& t, const TrainConfig& cfg) {
    return {
        {"schema", kSchemaVersion},
        {"kind", kind},
        {"grid", {grid.height, grid.width}},
        {"normalizer", {{"scale", t.scale}, {"offset", t.offset}}},
        {"config", config_to_json(cfg)},
    };
}

json pca_json(const pca::PcaBasis& b) {
    return {{"mean", vector_json(b.mean)}, {"basis", cols_json(b.basis)}, {"variances", vector_json(b.component_variances)}};
}

json gps_json(const std::vector<gp::GpModel>& gps) {
    json out = json::array();
    for (const auto& g : gps) out.push_back(gp_json(g));
    return out;
}

// --- parsing ---

double real_of(const json& j, const std::string& what) {
    if (!j.is_number()) throw ValidationError("model file: " + what + " is not a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ValidationError("model file: " + what + " is not finite");
    return v;
}

Vector vector_of(const json& j, const std::string& what) {
    if (!j.is_array()) throw ValidationError("model file: " + what + " is not an array");
    Vector v(static_cast<Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Index>(i)] = real_of(j[i], what);
    return v;
}

Matrix rows_of(const json& j, const std::string& what, Index expected_cols = -1) {
    if (!j.is_array()) throw ValidationError("model file: " + what + " is not an array of rows");
    Index cols = expected_cols;
    if (cols < 0) cols = j.empty() ? 0 : static_cast<Index>(j[0].size());
    Matrix m(static_cast<Index>(j.size()), cols);
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Vector row = vector_of(j[i], what);
        if (row.size() != cols) throw ValidationError("model file: ragged rows in " + what);
        m.row(static_cast<Index>(i)) = row.transpose();
    }
    return m;
}

mlp::LayerStack stack_of(const json& j, Index input_dim, const std::string& what) {
    if (!j.is_array()) throw ValidationError("model file: " + what + " is not an array of layers");
    mlp::LayerStack stack;
    stack.input_dim = input_dim;
    for (const auto& lj : j) {
        mlp::Layer layer;
        layer.weight = rows_of(lj.at("w"), what + ".w");
        layer.bias = vector_of(lj.at("b"), what + ".b");
        layer.act = mlp::activation_from_string(lj.at("act").get<std::string>());
        stack.layers.push_back(std::move(layer));
    }
    stack.validate();
    return stack;
}

pca::PcaBasis pca_of(const json& j) {
    pca::PcaBasis b;
    b.mean = vector_of(j.at("mean"), "pca.mean");
    b.basis = rows_of(j.at("basis"), "pca.basis", b.mean.size()).transpose();
    b.component_variances = vector_of(j.at("variances"), "pca.variances");
    b.validate();
    return b;
}

std::vector<gp::GpModel> gps_of(const json& j) {
    if (!j.is_array()) throw ValidationError("model file: gps is not an array");
    std::vector<gp::GpModel> gps;
    for (const auto& gj : j) {
        gp::RbfHyperparams h;
        h.log_signal_variance = real_of(gj.at("log_signal_variance"), "log_signal_variance");
        h.log_lengthscales = vector_of(gj.at("log_lengthscales"), "log_lengthscales");
        h.log_noise_variance = real_of(gj.at("log_noise_variance"), "log_noise_variance");
        gp::GpModel g(std::move(h), rows_of(gj.at("train_inputs"), "train_inputs"),
                      vector_of(gj.at("train_targets"), "train_targets"), real_of(gj.at("jitter"), "jitter"));
        g.condition();
        gps.push_back(std::move(g));
    }
    return gps;
}

}  // namespace

std::string model_to_json(const AnyModel& model) {
    json j = std::visit(
        [](const auto& m) -> json {
            using T = std::decay_t<decltype(m)>;
            m.validate();
            if constexpr (std::is_same_v<T, ElmcModel>) {
                json out = header_json("elmc", m.grid, m.normalizer, m.config);
                out["mlp"] = {{"field_dim", m.net.field_dim()},
                              {"latent_dim", m.net.latent_dim()},
                              {"disentangle", stack_json(m.net.disentangle)},
                              {"reconstruct", stack_json(m.net.reconstruct)}};
                out["pca"] = pca_json(m.basis);
                out["gps"] = gps_json(m.gps);
                return out;
            } else if constexpr (std::is_same_v<T, LmcModel>) {
                json out = header_json("lmc", m.grid, m.normalizer, m.config);
                out["pca"] = pca_json(m.basis);
                out["gps"] = gps_json(m.gps);
                return out;
            } else {
                json out = header_json("mlp", m.grid, m.normalizer, m.config);
                out["mlp"] = {{"input_dim", m.net.input_dim}, {"layers", stack_json(m.net)}};
                return out;
            }
        },
        model);
    return j.dump() + "\n";
}

AnyModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model file: ") + e.what());
    }
    try {
        const int schema = j.at("schema").get<int>();
        if (schema != kSchemaVersion) {
            throw ValidationError("model file: schema " + std::to_string(schema) + " (expected " +
                                  std::to_string(kSchemaVersion) + ")");
        }
        const std::string kind = j.at("kind").get<std::string>();
        const GridShape grid{j.at("grid").at(0).get<std::size_t>(), j.at("grid").at(1).get<std::size_t>()};
        const AffineTransform norm{real_of(j.at("normalizer").at("scale"), "normalizer.scale"),
                                   real_of(j.at("normalizer").at("offset"), "normalizer.offset")};
        if (!(norm.scale > 0.0)) throw ValidationError("model file: normalizer scale must be positive");
        const TrainConfig cfg = config_from_json(j.value("config", json::object()));

        if (kind == "elmc") {
            ElmcModel m;
            m.grid = grid;
            m.normalizer = norm;
            m.config = cfg;
            const auto& mj = j.at("mlp");
            m.net.disentangle = stack_of(mj.at("disentangle"), mj.at("field_dim").get<Index>(), "mlp.disentangle");
            m.net.reconstruct = stack_of(mj.at("reconstruct"), mj.at("latent_dim").get<Index>(), "mlp.reconstruct");
            m.basis = pca_of(j.at("pca"));
            m.gps = gps_of(j.at("gps"));
            m.validate();
            return m;
        }
        if (kind == "lmc") {
            LmcModel m;
            m.grid = grid;
            m.normalizer = norm;
            m.config = cfg;
            m.basis = pca_of(j.at("pca"));
            m.gps = gps_of(j.at("gps"));
            m.validate();
            return m;
        }
        if (kind == "mlp") {
            MlpBaselineModel m;
            m.grid = grid;
            m.normalizer = norm;
            m.config = cfg;
            m.net = stack_of(j.at("mlp").at("layers"), j.at("mlp").at("input_dim").get<Index>(), "mlp.layers");
            m.validate();
            return m;
        }
        throw ValidationError("model file: unknown kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw ValidationError(std::string("model file: ") + e.what());
    }
}

void save_model(const AnyModel& model, const std::filesystem::path& path) {
    write_text_file(path, model_to_json(model));
}

AnyModel load_model(const std::filesystem::path& path) { return model_from_json(read_text_file(path)); }

}  // namespace elmc
