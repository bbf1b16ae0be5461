#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "elmc/field_data.hpp"
#include "elmc/gp.hpp"
#include "elmc/mlp.hpp"
#include "elmc/pca.hpp"

namespace elmc {

/// Training hyperparameters shared by all three learners. Unset width lists fall back to
/// desk-scale defaults derived from the field dimension d.
struct TrainConfig {
    // E-LMC autoencoder
    bool identity_bypass = false;
    std::optional<std::vector<std::size_t>> widths_disentangle;  // default {2d, d}
    std::optional<std::vector<std::size_t>> widths_reconstruct;  // default {2d, d}
    mlp::NetActivations activations;
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double lr = 1e-3;

    // latent GPs
    std::size_t gp_iters = 500;
    double gp_lr = 1e-3;
    double jitter = 1e-6;
    std::size_t gp_threads = 1;

    // fields are mapped to [0, 1] before training when set
    bool normalize = true;

    // vanilla MLP baseline (l -> widths -> d)
    std::vector<std::size_t> baseline_widths{32, 64, 128, 256};
    std::size_t baseline_epochs = 500;
    std::size_t baseline_batch_size = 32;
    double baseline_lr = 1e-3;
    mlp::Activation baseline_output = mlp::Activation::relu;

    [[nodiscard]] std::vector<std::size_t> resolved_disentangle(Index d) const;
    [[nodiscard]] std::vector<std::size_t> resolved_reconstruct(Index d) const;
    [[nodiscard]] Index resolved_latent_dim(Index d) const;
};

/// Rank-r PCA bases with one independent GP per principal coefficient.
struct LmcModel {
    pca::PcaBasis basis;
    std::vector<gp::GpModel> gps;
    AffineTransform normalizer;
    GridShape grid;
    TrainConfig config;

    void validate() const;
};

/// LMC sandwiched between the disentangle and reconstruct halves of an MLP autoencoder.
struct ElmcModel {
    mlp::MlpNet net;
    pca::PcaBasis basis;
    std::vector<gp::GpModel> gps;
    AffineTransform normalizer;
    GridShape grid;
    TrainConfig config;

    void validate() const;
};

/// Direct l -> d regression network.
struct MlpBaselineModel {
    mlp::LayerStack net;
    AffineTransform normalizer;
    GridShape grid;
    TrainConfig config;

    void validate() const;
};

using AnyModel = std::variant<ElmcModel, LmcModel, MlpBaselineModel>;

struct TrainReport {
    double mlp_initial_loss = 0.0;
    double mlp_final_loss = 0.0;
    std::vector<double> gp_initial_mll;
    std::vector<double> gp_final_mll;
};

ElmcModel train_elmc(const FieldDataset& train, Index rank, const TrainConfig& cfg, std::uint64_t seed,
                     TrainReport* report = nullptr);
LmcModel train_lmc(const FieldDataset& train, Index rank, const TrainConfig& cfg, std::uint64_t seed,
                   TrainReport* report = nullptr);
MlpBaselineModel train_mlp_baseline(const FieldDataset& train, const TrainConfig& cfg, std::uint64_t seed,
                                    TrainReport* report = nullptr);

/// Fits one GP per column of `latents` against the shared inputs.
std::vector<gp::GpModel> fit_latent_gps(const Matrix& inputs, const Matrix& latents, const TrainConfig& cfg,
                                        std::uint64_t seed, TrainReport* report = nullptr);

/// n x r matrix of GP posterior means.
Matrix latent_means(const std::vector<gp::GpModel>& gps, const Matrix& xq);
/// n x r matrix of GP posterior variances (latent space only).
Matrix latent_variances(const std::vector<gp::GpModel>& gps, const Matrix& xq);

/// Fields in original units.
Matrix predict_elmc(const ElmcModel& model, const Matrix& xq);
Matrix predict_lmc(const LmcModel& model, const Matrix& xq);
Matrix predict_mlp_baseline(const MlpBaselineModel& model, const Matrix& xq);
Matrix predict(const AnyModel& model, const Matrix& xq);

/// Mean squared error over all n * d entries.
double evaluate_mse(const Matrix& pred, const Matrix& truth);

std::string model_kind(const AnyModel& model);

// Persistence (JSON, schema 1). GP factorizations are recomputed on load.
void save_model(const AnyModel& model, const std::filesystem::path& path);
AnyModel load_model(const std::filesystem::path& path);
std::string model_to_json(const AnyModel& model);
AnyModel model_from_json(const std::string& text);

}  // namespace elmc
