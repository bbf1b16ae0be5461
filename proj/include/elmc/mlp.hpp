#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "elmc/optim.hpp"
#include "elmc/pca.hpp"
#include "elmc/types.hpp"

namespace elmc::mlp {

enum class Activation { relu, identity };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Fully connected layer: out = act(in * W^T + b) for row-major batches.
struct Layer {
    Matrix weight;  // out_dim x in_dim
    Vector bias;    // out_dim
    Activation act = Activation::relu;

    [[nodiscard]] Index in_dim() const { return weight.cols(); }
    [[nodiscard]] Index out_dim() const { return weight.rows(); }
};

/// A chain of layers. An empty stack is the identity on `input_dim` columns.
struct LayerStack {
    Index input_dim = 0;
    std::vector<Layer> layers;

    [[nodiscard]] Index output_dim() const { return layers.empty() ? input_dim : layers.back().out_dim(); }
    [[nodiscard]] Index n_params() const;
    void validate() const;
};

struct LayerGrad {
    Matrix weight;
    Vector bias;
};
using StackGrad = std::vector<LayerGrad>;

/// Which activation each position of a stack uses. Hidden layers get `hidden`, the last layer `last`.
struct StackActivations {
    Activation hidden = Activation::relu;
    Activation last = Activation::relu;
};

/// Weights uniform in +-sqrt(6 / fan_in), biases zero, drawn layer by layer in row-major order.
LayerStack init_stack(Index input_dim, const std::vector<std::size_t>& widths, StackActivations acts,
                      Prng& rng);

Matrix forward(const LayerStack& stack, const Matrix& x);

/// Activations kept from a forward pass for backpropagation.
struct Tape {
    std::vector<Matrix> inputs;  // input to each layer
    std::vector<Matrix> pre;     // pre-activation of each layer
    Matrix output;
};
Tape forward_tape(const LayerStack& stack, const Matrix& x);

/// Backpropagates d(loss)/d(output) through the stack. Writes d(loss)/d(input) to grad_input
/// when non-null. ReLU has derivative 0 at exactly 0.
StackGrad backward_stack(const LayerStack& stack, const Tape& tape, const Matrix& grad_output,
                         Matrix* grad_input = nullptr);

Vector pack(const LayerStack& stack);
void unpack(LayerStack& stack, const Vector& params, Index offset = 0);
Vector pack(const StackGrad& grad);

/// Disentangle (field -> latent) and reconstruct (latent -> field) halves of the autoencoder.
struct MlpNet {
    LayerStack disentangle;
    LayerStack reconstruct;

    [[nodiscard]] Index field_dim() const { return disentangle.input_dim; }
    [[nodiscard]] Index latent_dim() const { return disentangle.output_dim(); }
    [[nodiscard]] bool is_identity() const { return disentangle.layers.empty() && reconstruct.layers.empty(); }
    void validate() const;
};

struct NetActivations {
    Activation hidden = Activation::relu;
    Activation latent = Activation::relu;  // last disentangle layer
    Activation output = Activation::relu;  // last reconstruct layer
};

/// Width lists hold layer output sizes; the last disentangle width must equal latent_dim and the
/// last reconstruct width must equal d. Two empty lists (with latent_dim == d) give the identity net.
MlpNet init_mlp(const std::vector<std::size_t>& widths_disentangle, const std::vector<std::size_t>& widths_reconstruct,
                Index d, Index latent_dim, std::uint64_t seed, NetActivations acts = {});

Matrix forward_disentangle(const MlpNet& net, const Matrix& y);
Matrix forward_reconstruct(const MlpNet& net, const Matrix& latent);

/// Mean of squared differences over all entries.
double mse_loss(const Matrix& pred, const Matrix& target);

struct NetGrad {
    StackGrad disentangle;
    StackGrad reconstruct;
    double loss = 0.0;
};

/// Gradient of mse(reconstruct(P(disentangle(Y))), target) where P is the PCA round trip
/// x -> mean + (x - mean) V V^T when a bottleneck is given and the identity otherwise. The basis
/// is treated as a constant.
NetGrad backward(const MlpNet& net, const Matrix& y, const Matrix& target, const pca::PcaBasis* bottleneck);

/// Full pipeline output used by backward().
Matrix autoencode(const MlpNet& net, const Matrix& y, const pca::PcaBasis* bottleneck);

Vector pack(const MlpNet& net);
void unpack(MlpNet& net, const Vector& params);
Vector pack(const NetGrad& grad);

struct TrainOptions {
    std::size_t epochs = 200;
    std::size_t batch_size = 64;
    double lr = 1e-3;
};

struct AutoencoderReport {
    double initial_loss = 0.0;  // full-batch, initial net with PCA of its initial latents
    double final_loss = 0.0;    // full-batch, returned net and basis
    std::vector<double> epoch_loss;  // mean batch loss per epoch
};

/// Alternates a PCA refit on all training latents at the start of each epoch with shuffled
/// mini-batch Adam updates of both halves; the basis is constant within an epoch. The returned
/// basis is refit once more after the final update.
std::pair<MlpNet, pca::PcaBasis> train_autoencoder(MlpNet net, const Matrix& y, Index rank, const TrainOptions& opts,
                                                   std::uint64_t seed, AutoencoderReport* report = nullptr);

struct RegressorReport {
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

/// Supervised MSE regression x -> target with shuffled mini-batch Adam.
LayerStack train_regressor(LayerStack stack, const Matrix& x, const Matrix& target, const TrainOptions& opts,
                           std::uint64_t seed, RegressorReport* report = nullptr);

}  // namespace elmc::mlp
