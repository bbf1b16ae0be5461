#include "elmc/model.hpp"

#include <thread>

#include "elmc/error.hpp"

namespace elmc {

std::vector<std::size_t> TrainConfig::resolved_disentangle(Index d) const {
    if (identity_bypass) return {};
    if (widths_disentangle) return *widths_disentangle;
    return {static_cast<std::size_t>(2 * d), static_cast<std::size_t>(d)};
}

std::vector<std::size_t> TrainConfig::resolved_reconstruct(Index d) const {
    if (identity_bypass) return {};
    if (widths_reconstruct) return *widths_reconstruct;
    return {static_cast<std::size_t>(2 * d), static_cast<std::size_t>(d)};
}

Index TrainConfig::resolved_latent_dim(Index d) const {
    const auto w = resolved_disentangle(d);
    return w.empty() ? d : static_cast<Index>(w.back());
}

namespace {

void check_gps(const pca::PcaBasis& basis, const std::vector<gp::GpModel>& gps) {
    basis.validate();
    if (static_cast<Index>(gps.size()) != basis.rank()) {
        throw ValidationError("model: basis rank " + std::to_string(basis.rank()) + " but " +
                              std::to_string(gps.size()) + " GPs");
    }
    for (std::size_t q = 0; q < gps.size(); ++q) {
        gps[q].validate();
        if (q > 0 && gps[q].train_inputs != gps[0].train_inputs) {
            throw ValidationError("model: latent GPs must share training inputs");
        }
    }
}

void check_train(const FieldDataset& train, Index rank, Index max_rank) {
    train.validate();
    if (train.n_samples() < 2) throw ValidationError("training needs at least 2 samples");
    if (rank < 1 || rank > max_rank) {
        throw ValidationError("rank " + std::to_string(rank) + " outside [1, " + std::to_string(max_rank) + "]");
    }
}

AffineTransform normalizer_for(const FieldDataset& train, const TrainConfig& cfg) {
    return cfg.normalize ? fit_normalizer(train) : AffineTransform{};
}

void check_query(const Matrix& xq, const std::vector<gp::GpModel>& gps) {
    if (!gps.empty() && xq.cols() != gps[0].hyper.input_dim()) {
        throw ValidationError("query has " + std::to_string(xq.cols()) + " input columns, model expects " +
                              std::to_string(gps[0].hyper.input_dim()));
    }
}

}  // namespace

void LmcModel::validate() const {
    check_gps(basis, gps);
    if (static_cast<std::size_t>(basis.dim()) != grid.size()) throw ValidationError("LMC: basis dim != grid size");
}

void ElmcModel::validate() const {
    net.validate();
    check_gps(basis, gps);
    if (basis.dim() != net.latent_dim()) throw ValidationError("E-LMC: basis dim != latent dim");
    if (static_cast<std::size_t>(net.field_dim()) != grid.size()) throw ValidationError("E-LMC: field dim != grid size");
}

void MlpBaselineModel::validate() const {
    net.validate();
    if (static_cast<std::size_t>(net.output_dim()) != grid.size()) {
        throw ValidationError("MLP baseline: output dim != grid size");
    }
}

std::vector<gp::GpModel> fit_latent_gps(const Matrix& inputs, const Matrix& latents, const TrainConfig& cfg,
                                        std::uint64_t seed, TrainReport* report) {
    const auto r = static_cast<std::size_t>(latents.cols());
    std::vector<gp::GpModel> gps(r);
    std::vector<gp::FitReport> fit_reports(r);
    std::vector<std::exception_ptr> errors(r);
    const gp::FitOptions opts{cfg.gp_iters, cfg.gp_lr, cfg.jitter};

    const auto work = [&](std::size_t q) {
        try {
            gps[q] = gp::fit(inputs, latents.col(static_cast<Index>(q)), opts, seed + q, &fit_reports[q]);
        } catch (...) {
            errors[q] = std::current_exception();
        }
    };
    // The GPs share nothing, so any partition over threads gives identical results.
    const std::size_t n_threads = std::max<std::size_t>(1, std::min(cfg.gp_threads, r));
    if (n_threads == 1) {
        for (std::size_t q = 0; q < r; ++q) work(q);
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&, t] {
                for (std::size_t q = t; q < r; q += n_threads) work(q);
            });
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    if (report) {
        report->gp_initial_mll.clear();
        report->gp_final_mll.clear();
        for (const auto& fr : fit_reports) {
            report->gp_initial_mll.push_back(fr.initial_mll);
            report->gp_final_mll.push_back(fr.final_mll);
        }
    }
    return gps;
}

LmcModel train_lmc(const FieldDataset& train, Index rank, const TrainConfig& cfg, std::uint64_t seed,
                   TrainReport* report) {
    check_train(train, rank, std::min(train.n_samples(), train.field_dim()));
    LmcModel model;
    model.grid = train.grid;
    model.config = cfg;
    model.normalizer = normalizer_for(train, cfg);
    const Matrix y = model.normalizer.apply(train.fields);
    model.basis = pca::fit_pca(y, rank);
    model.gps = fit_latent_gps(train.inputs, pca::project(model.basis, y), cfg, seed, report);
    return model;
}

ElmcModel train_elmc(const FieldDataset& train, Index rank, const TrainConfig& cfg, std::uint64_t seed,
                     TrainReport* report) {
    const Index d = train.field_dim();
    const Index latent = cfg.resolved_latent_dim(d);
    check_train(train, rank, std::min(train.n_samples(), latent));

    ElmcModel model;
    model.grid = train.grid;
    model.config = cfg;
    model.normalizer = normalizer_for(train, cfg);
    const Matrix y = model.normalizer.apply(train.fields);

    mlp::MlpNet net = mlp::init_mlp(cfg.resolved_disentangle(d), cfg.resolved_reconstruct(d), d, latent,
                                    derive_seed(seed, 1), cfg.activations);
    mlp::AutoencoderReport ae_report;
    auto [trained, basis] =
        mlp::train_autoencoder(std::move(net), y, rank, {cfg.epochs, cfg.batch_size, cfg.lr}, derive_seed(seed, 2), &ae_report);
    model.net = std::move(trained);
    model.basis = std::move(basis);
    if (report) {
        report->mlp_initial_loss = ae_report.initial_loss;
        report->mlp_final_loss = ae_report.final_loss;
    }
    const Matrix z = pca::project(model.basis, mlp::forward_disentangle(model.net, y));
    model.gps = fit_latent_gps(train.inputs, z, cfg, seed, report);
    return model;
}

MlpBaselineModel train_mlp_baseline(const FieldDataset& train, const TrainConfig& cfg, std::uint64_t seed,
                                    TrainReport* report) {
    train.validate();
    if (train.n_samples() < 1) throw ValidationError("training needs at least 1 sample");
    MlpBaselineModel model;
    model.grid = train.grid;
    model.config = cfg;
    model.normalizer = normalizer_for(train, cfg);
    const Matrix y = model.normalizer.apply(train.fields);

    std::vector<std::size_t> widths = cfg.baseline_widths;
    widths.push_back(static_cast<std::size_t>(train.field_dim()));
    Prng rng(derive_seed(seed, 1));
    mlp::LayerStack net = mlp::init_stack(train.input_dim(), widths, {mlp::Activation::relu, cfg.baseline_output}, rng);
    mlp::RegressorReport rr;
    model.net = mlp::train_regressor(std::move(net), train.inputs, y,
                                     {cfg.baseline_epochs, cfg.baseline_batch_size, cfg.baseline_lr},
                                     derive_seed(seed, 2), &rr);
    if (report) {
        report->mlp_initial_loss = rr.initial_loss;
        report->mlp_final_loss = rr.final_loss;
    }
    return model;
}

Matrix latent_means(const std::vector<gp::GpModel>& gps, const Matrix& xq) {
    check_query(xq, gps);
    Matrix z(xq.rows(), static_cast<Index>(gps.size()));
    for (std::size_t q = 0; q < gps.size(); ++q) z.col(static_cast<Index>(q)) = gp::predict_mean(gps[q], xq);
    return z;
}

Matrix latent_variances(const std::vector<gp::GpModel>& gps, const Matrix& xq) {
    check_query(xq, gps);
    Matrix v(xq.rows(), static_cast<Index>(gps.size()));
    for (std::size_t q = 0; q < gps.size(); ++q) v.col(static_cast<Index>(q)) = gp::predict(gps[q], xq).variance;
    return v;
}

Matrix predict_elmc(const ElmcModel& model, const Matrix& xq) {
    const Matrix z = latent_means(model.gps, xq);
    const Matrix latent = pca::reconstruct(model.basis, z);
    return model.normalizer.invert(mlp::forward_reconstruct(model.net, latent));
}

Matrix predict_lmc(const LmcModel& model, const Matrix& xq) {
    const Matrix z = latent_means(model.gps, xq);
    return model.normalizer.invert(pca::reconstruct(model.basis, z));
}

Matrix predict_mlp_baseline(const MlpBaselineModel& model, const Matrix& xq) {
    if (xq.cols() != model.net.input_dim) {
        throw ValidationError("query has " + std::to_string(xq.cols()) + " input columns, model expects " +
                              std::to_string(model.net.input_dim));
    }
    return model.normalizer.invert(mlp::forward(model.net, xq));
}

Matrix predict(const AnyModel& model, const Matrix& xq) {
    return std::visit(
        [&](const auto& m) -> Matrix {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, ElmcModel>) return predict_elmc(m, xq);
            else if constexpr (std::is_same_v<T, LmcModel>) return predict_lmc(m, xq);
            else return predict_mlp_baseline(m, xq);
        },
        model);
}

double evaluate_mse(const Matrix& pred, const Matrix& truth) {
    if (pred.rows() != truth.rows() || pred.cols() != truth.cols()) {
        throw ValidationError("evaluate_mse: shape mismatch " + std::to_string(pred.rows()) + "x" +
                              std::to_string(pred.cols()) + " vs " + std::to_string(truth.rows()) + "x" +
                              std::to_string(truth.cols()));
    }
    if (pred.size() == 0) throw ValidationError("evaluate_mse: empty matrices");
    return (pred - truth).squaredNorm() / static_cast<double>(pred.size());
}

std::string model_kind(const AnyModel& model) {
    switch (model.index()) {
        case 0: return "elmc";
        case 1: return "lmc";
        default: return "mlp";
    }
}

}  // namespace elmc
