#include "elmc/mlp.hpp"

#include <cmath>
#include <span>

#include "elmc/error.hpp"

namespace elmc::mlp {

std::string_view to_string(Activation a) { return a == Activation::relu ? "relu" : "identity"; }

Activation activation_from_string(std::string_view name) {
    if (name == "relu") return Activation::relu;
    if (name == "identity") return Activation::identity;
    throw ValidationError("unknown activation '" + std::string(name) + "'");
}

Index LayerStack::n_params() const {
    Index n = 0;
    for (const auto& layer : layers) n += layer.weight.size() + layer.bias.size();
    return n;
}

void LayerStack::validate() const {
    Index dim = input_dim;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const auto& layer = layers[k];
        if (layer.in_dim() != dim || layer.bias.size() != layer.out_dim() || layer.out_dim() < 1) {
            throw ValidationError("layer " + std::to_string(k) + ": expected input " + std::to_string(dim) +
                                  ", weight is " + std::to_string(layer.out_dim()) + "x" +
                                  std::to_string(layer.in_dim()) + ", bias " + std::to_string(layer.bias.size()));
        }
        dim = layer.out_dim();
    }
}

LayerStack init_stack(Index input_dim, const std::vector<std::size_t>& widths, StackActivations acts, Prng& rng) {
    if (input_dim < 1) throw ValidationError("init_stack: input dimension must be positive");
    LayerStack stack;
    stack.input_dim = input_dim;
    Index fan_in = input_dim;
    for (std::size_t k = 0; k < widths.size(); ++k) {
        const auto out = static_cast<Index>(widths[k]);
        if (out < 1) throw ValidationError("init_stack: layer widths must be positive");
        Layer layer;
        layer.weight.resize(out, fan_in);
        layer.bias = Vector::Zero(out);
        layer.act = k + 1 == widths.size() ? acts.last : acts.hidden;
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (Index i = 0; i < out; ++i) {
            for (Index j = 0; j < fan_in; ++j) layer.weight(i, j) = rng.uniform(-bound, bound);
        }
        stack.layers.push_back(std::move(layer));
        fan_in = out;
    }
    return stack;
}

namespace {

void activate(Matrix& z, Activation act) {
    if (act == Activation::relu) z = z.cwiseMax(0.0);
}

Matrix affine(const Layer& layer, const Matrix& x) {
    Matrix z = x * layer.weight.transpose();
    z.rowwise() += layer.bias.transpose();
    return z;
}

void check_input(const LayerStack& stack, const Matrix& x, const char* what) {
    if (x.cols() != stack.input_dim) {
        throw ValidationError(std::string(what) + ": input has " + std::to_string(x.cols()) + " columns, expected " +
                              std::to_string(stack.input_dim));
    }
}

}  // namespace

Matrix forward(const LayerStack& stack, const Matrix& x) {
    check_input(stack, x, "forward");
    Matrix h = x;
    for (const auto& layer : stack.layers) {
        h = affine(layer, h);
        activate(h, layer.act);
    }
    if (!h.allFinite()) throw NumericalError("forward: non-finite activation");
    return h;
}

Tape forward_tape(const LayerStack& stack, const Matrix& x) {
    check_input(stack, x, "forward");
    Tape tape;
    tape.inputs.reserve(stack.layers.size());
    tape.pre.reserve(stack.layers.size());
    Matrix h = x;
    for (const auto& layer : stack.layers) {
        tape.inputs.push_back(h);
        tape.pre.push_back(affine(layer, h));
        h = tape.pre.back();
        activate(h, layer.act);
    }
    if (!h.allFinite()) throw NumericalError("forward: non-finite activation");
    tape.output = std::move(h);
    return tape;
}

StackGrad backward_stack(const LayerStack& stack, const Tape& tape, const Matrix& grad_output, Matrix* grad_input) {
    StackGrad grads(stack.layers.size());
    Matrix g = grad_output;
    for (std::size_t k = stack.layers.size(); k-- > 0;) {
        const auto& layer = stack.layers[k];
        if (layer.act == Activation::relu) {
            g = g.cwiseProduct((tape.pre[k].array() > 0.0).cast<double>().matrix());
        }
        grads[k].weight = g.transpose() * tape.inputs[k];
        grads[k].bias = g.colwise().sum().transpose();
        if (k > 0 || grad_input) g = g * layer.weight;
    }
    if (grad_input) *grad_input = std::move(g);
    return grads;
}

Vector pack(const LayerStack& stack) {
    Vector out(stack.n_params());
    Index pos = 0;
    for (const auto& layer : stack.layers) {
        out.segment(pos, layer.weight.size()) = layer.weight.reshaped();
        pos += layer.weight.size();
        out.segment(pos, layer.bias.size()) = layer.bias;
        pos += layer.bias.size();
    }
    return out;
}

void unpack(LayerStack& stack, const Vector& params, Index offset) {
    Index pos = offset;
    for (auto& layer : stack.layers) {
        layer.weight.reshaped() = params.segment(pos, layer.weight.size());
        pos += layer.weight.size();
        layer.bias = params.segment(pos, layer.bias.size());
        pos += layer.bias.size();
    }
}

Vector pack(const StackGrad& grad) {
    Index n = 0;
    for (const auto& g : grad) n += g.weight.size() + g.bias.size();
    Vector out(n);
    Index pos = 0;
    for (const auto& g : grad) {
        out.segment(pos, g.weight.size()) = g.weight.reshaped();
        pos += g.weight.size();
        out.segment(pos, g.bias.size()) = g.bias;
        pos += g.bias.size();
    }
    return out;
}

void MlpNet::validate() const {
    disentangle.validate();
    reconstruct.validate();
    if (reconstruct.input_dim != disentangle.output_dim()) {
        throw ValidationError("MlpNet: reconstruct input " + std::to_string(reconstruct.input_dim) +
                              " != latent dim " + std::to_string(disentangle.output_dim()));
    }
    if (reconstruct.output_dim() != disentangle.input_dim) {
        throw ValidationError("MlpNet: reconstruct output " + std::to_string(reconstruct.output_dim()) +
                              " != field dim " + std::to_string(disentangle.input_dim));
    }
}

MlpNet init_mlp(const std::vector<std::size_t>& widths_disentangle, const std::vector<std::size_t>& widths_reconstruct,
                Index d, Index latent_dim, std::uint64_t seed, NetActivations acts) {
    if (d < 1 || latent_dim < 1) throw ValidationError("init_mlp: dimensions must be positive");
    const auto last_or = [](const std::vector<std::size_t>& w, Index fallback) {
        return w.empty() ? fallback : static_cast<Index>(w.back());
    };
    if (last_or(widths_disentangle, d) != latent_dim) {
        throw ValidationError("init_mlp: disentangle output " + std::to_string(last_or(widths_disentangle, d)) +
                              " != latent_dim " + std::to_string(latent_dim));
    }
    if (last_or(widths_reconstruct, latent_dim) != d) {
        throw ValidationError("init_mlp: reconstruct output " +
                              std::to_string(last_or(widths_reconstruct, latent_dim)) + " != field dim " +
                              std::to_string(d));
    }
    Prng rng(seed);
    MlpNet net;
    net.disentangle = init_stack(d, widths_disentangle, {acts.hidden, acts.latent}, rng);
    net.reconstruct = init_stack(latent_dim, widths_reconstruct, {acts.hidden, acts.output}, rng);
    net.validate();
    return net;
}

Matrix forward_disentangle(const MlpNet& net, const Matrix& y) { return forward(net.disentangle, y); }

Matrix forward_reconstruct(const MlpNet& net, const Matrix& latent) { return forward(net.reconstruct, latent); }

double mse_loss(const Matrix& pred, const Matrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw ValidationError("mse_loss: shape mismatch " + std::to_string(pred.rows()) + "x" +
                              std::to_string(pred.cols()) + " vs " + std::to_string(target.rows()) + "x" +
                              std::to_string(target.cols()));
    }
    if (pred.size() == 0) return 0.0;
    return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

namespace {

void check_bottleneck(const MlpNet& net, const pca::PcaBasis* bottleneck) {
    if (bottleneck && bottleneck->dim() != net.latent_dim()) {
        throw ValidationError("bottleneck basis dimension " + std::to_string(bottleneck->dim()) +
                              " != latent dim " + std::to_string(net.latent_dim()));
    }
}

Matrix round_trip(const pca::PcaBasis& b, const Matrix& latent) {
    return pca::reconstruct(b, pca::project(b, latent));
}

}  // namespace

Matrix autoencode(const MlpNet& net, const Matrix& y, const pca::PcaBasis* bottleneck) {
    check_bottleneck(net, bottleneck);
    Matrix latent = forward_disentangle(net, y);
    if (bottleneck) latent = round_trip(*bottleneck, latent);
    return forward_reconstruct(net, latent);
}

NetGrad backward(const MlpNet& net, const Matrix& y, const Matrix& target, const pca::PcaBasis* bottleneck) {
    check_bottleneck(net, bottleneck);
    const Tape enc = forward_tape(net.disentangle, y);
    const Matrix latent = bottleneck ? round_trip(*bottleneck, enc.output) : enc.output;
    const Tape dec = forward_tape(net.reconstruct, latent);

    NetGrad out;
    out.loss = mse_loss(dec.output, target);
    const Matrix grad_pred = (2.0 / static_cast<double>(dec.output.size())) * (dec.output - target);
    Matrix grad_latent;
    out.reconstruct = backward_stack(net.reconstruct, dec, grad_pred, &grad_latent);
    if (bottleneck) {
        // d/dM of mean + (M - mean) V V^T is the symmetric projector V V^T.
        grad_latent = (grad_latent * bottleneck->basis) * bottleneck->basis.transpose();
    }
    out.disentangle = backward_stack(net.disentangle, enc, grad_latent, nullptr);
    return out;
}

Vector pack(const MlpNet& net) {
    Vector out(net.disentangle.n_params() + net.reconstruct.n_params());
    out << pack(net.disentangle), pack(net.reconstruct);
    return out;
}

void unpack(MlpNet& net, const Vector& params) {
    if (params.size() != net.disentangle.n_params() + net.reconstruct.n_params()) {
        throw ValidationError("unpack: parameter vector length mismatch");
    }
    unpack(net.disentangle, params, 0);
    unpack(net.reconstruct, params, net.disentangle.n_params());
}

Vector pack(const NetGrad& grad) {
    const Vector a = pack(grad.disentangle);
    const Vector b = pack(grad.reconstruct);
    Vector out(a.size() + b.size());
    out << a, b;
    return out;
}

namespace {

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> idx) {
    Matrix out(static_cast<Index>(idx.size()), m.cols());
    for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = m.row(static_cast<Index>(idx[k]));
    return out;
}

void step(Vector& params, const Vector& grad, AdamState& adam) {
    adam_step(std::span<double>(params.data(), static_cast<std::size_t>(params.size())),
              std::span<const double>(grad.data(), static_cast<std::size_t>(grad.size())), adam);
}

}  // namespace

std::pair<MlpNet, pca::PcaBasis> train_autoencoder(MlpNet net, const Matrix& y, Index rank, const TrainOptions& opts,
                                                   std::uint64_t seed, AutoencoderReport* report) {
    net.validate();
    const Index m = y.rows();
    if (y.cols() != net.field_dim()) throw ValidationError("train_autoencoder: field dimension mismatch");
    if (rank < 1 || rank > std::min(m, net.latent_dim())) {
        throw ValidationError("train_autoencoder: rank " + std::to_string(rank) + " outside [1, min(m=" +
                              std::to_string(m) + ", latent=" + std::to_string(net.latent_dim()) + ")]");
    }
    if (opts.batch_size < 1) throw ValidationError("train_autoencoder: batch_size must be >= 1");

    pca::PcaBasis basis = pca::fit_pca(forward_disentangle(net, y), rank);
    if (report) {
        report->initial_loss = mse_loss(autoencode(net, y, &basis), y);
        report->epoch_loss.clear();
    }

    const Index n_params = net.disentangle.n_params() + net.reconstruct.n_params();
    if (n_params > 0 && opts.epochs > 0) {
        Prng rng(seed);
        AdamState adam(n_params, opts.lr);
        Vector params = pack(net);
        const auto n = static_cast<std::size_t>(m);
        for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
            if (epoch > 0) basis = pca::fit_pca(forward_disentangle(net, y), rank);
            const auto order = rng.permutation(n);
            double loss_sum = 0.0;
            std::size_t n_batches = 0;
            for (std::size_t start = 0; start < n; start += opts.batch_size) {
                const std::size_t stop = std::min(n, start + opts.batch_size);
                const Matrix batch = gather_rows(y, std::span(order).subspan(start, stop - start));
                const NetGrad g = backward(net, batch, batch, &basis);
                if (!std::isfinite(g.loss)) {
                    throw NumericalError("train_autoencoder: non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(n_batches));
                }
                step(params, pack(g), adam);
                unpack(net, params);
                loss_sum += g.loss;
                ++n_batches;
            }
            if (report) report->epoch_loss.push_back(loss_sum / static_cast<double>(n_batches));
        }
        basis = pca::fit_pca(forward_disentangle(net, y), rank);
    }
    if (report) report->final_loss = mse_loss(autoencode(net, y, &basis), y);
    return {std::move(net), std::move(basis)};
}

LayerStack train_regressor(LayerStack stack, const Matrix& x, const Matrix& target, const TrainOptions& opts,
                           std::uint64_t seed, RegressorReport* report) {
    stack.validate();
    if (x.rows() != target.rows() || target.cols() != stack.output_dim()) {
        throw ValidationError("train_regressor: shape mismatch between inputs, targets and network");
    }
    if (opts.batch_size < 1) throw ValidationError("train_regressor: batch_size must be >= 1");
    if (report) report->initial_loss = mse_loss(forward(stack, x), target);

    if (stack.n_params() > 0 && opts.epochs > 0) {
        Prng rng(seed);
        AdamState adam(stack.n_params(), opts.lr);
        Vector params = pack(stack);
        const auto n = static_cast<std::size_t>(x.rows());
        for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
            const auto order = rng.permutation(n);
            std::size_t batch_no = 0;
            for (std::size_t start = 0; start < n; start += opts.batch_size, ++batch_no) {
                const std::size_t stop = std::min(n, start + opts.batch_size);
                const auto idx = std::span(order).subspan(start, stop - start);
                const Matrix xb = gather_rows(x, idx);
                const Matrix tb = gather_rows(target, idx);
                const Tape tape = forward_tape(stack, xb);
                const double loss = mse_loss(tape.output, tb);
                if (!std::isfinite(loss)) {
                    throw NumericalError("train_regressor: non-finite loss at epoch " + std::to_string(epoch) +
                                         ", batch " + std::to_string(batch_no));
                }
                const Matrix grad_out = (2.0 / static_cast<double>(tape.output.size())) * (tape.output - tb);
                step(params, pack(backward_stack(stack, tape, grad_out)), adam);
                unpack(stack, params);
            }
        }
    }
    if (report) report->final_loss = mse_loss(forward(stack, x), target);
    return stack;
}

}  // namespace elmc::mlp
