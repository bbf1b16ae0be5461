#include "elmc/gp.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "elmc/error.hpp"
#include "elmc/optim.hpp"

namespace elmc::gp {

double RbfHyperparams::signal_variance() const { return std::exp(log_signal_variance); }
double RbfHyperparams::noise_variance() const { return std::exp(log_noise_variance); }

Vector RbfHyperparams::pack() const {
    Vector p(log_lengthscales.size() + 2);
    p[0] = log_signal_variance;
    p.segment(1, log_lengthscales.size()) = log_lengthscales;
    p[p.size() - 1] = log_noise_variance;
    return p;
}

RbfHyperparams RbfHyperparams::unpack(const Vector& packed) {
    if (packed.size() < 2) throw ValidationError("RbfHyperparams::unpack: need at least 2 entries");
    RbfHyperparams h;
    h.log_signal_variance = packed[0];
    h.log_lengthscales = packed.segment(1, packed.size() - 2);
    h.log_noise_variance = packed[packed.size() - 1];
    return h;
}

double rbf_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                  const RbfHyperparams& hyper) {
    if (x.size() != x2.size() || x.size() != hyper.input_dim()) {
        throw ValidationError("rbf_kernel: dimension mismatch (" + std::to_string(x.size()) + ", " +
                              std::to_string(x2.size()) + ", " + std::to_string(hyper.input_dim()) +
                              " lengthscales)");
    }
    double r = 0.0;
    for (Index i = 0; i < x.size(); ++i) {
        const double diff = (x[i] - x2[i]) / std::exp(hyper.log_lengthscales[i]);
        r += diff * diff;
    }
    return hyper.signal_variance() * std::exp(-0.5 * r);
}

namespace {

Matrix scaled_rows(const Matrix& x, const RbfHyperparams& hyper) {
    const Vector inv_len = (-hyper.log_lengthscales.array()).exp().matrix();
    return x * inv_len.asDiagonal();
}

}  // namespace

Matrix cross_kernel(const Matrix& a, const Matrix& b, const RbfHyperparams& hyper) {
    if (a.cols() != hyper.input_dim() || b.cols() != hyper.input_dim()) {
        throw ValidationError("cross_kernel: input dimension mismatch");
    }
    const Matrix sa = scaled_rows(a, hyper);
    const Matrix sb = scaled_rows(b, hyper);
    const double sf2 = hyper.signal_variance();
    Matrix k(a.rows(), b.rows());
    // Explicit differences (not the |a|^2 + |b|^2 - 2ab expansion) so k(x, x) == sigma^2 exactly.
    for (Index j = 0; j < b.rows(); ++j) {
        for (Index i = 0; i < a.rows(); ++i) {
            k(i, j) = sf2 * std::exp(-0.5 * (sa.row(i) - sb.row(j)).squaredNorm());
        }
    }
    return k;
}

Matrix build_covariance(const Matrix& x, const RbfHyperparams& hyper, double jitter) {
    if (x.rows() < 1) throw ValidationError("build_covariance: need at least one input");
    if (x.cols() != hyper.input_dim()) throw ValidationError("build_covariance: input dimension mismatch");
    const Matrix sx = scaled_rows(x, hyper);
    const double sf2 = hyper.signal_variance();
    const Index m = x.rows();
    Matrix c(m, m);
    for (Index j = 0; j < m; ++j) {
        c(j, j) = sf2;
        for (Index i = j + 1; i < m; ++i) {
            const double v = sf2 * std::exp(-0.5 * (sx.row(i) - sx.row(j)).squaredNorm());
            c(i, j) = v;
            c(j, i) = v;
        }
    }
    c.diagonal().array() += hyper.noise_variance() + jitter;
    return c;
}

CovarianceFactor factorize(const Matrix& x, const RbfHyperparams& hyper, double jitter) {
    Matrix c = build_covariance(x, hyper, jitter);
    CovarianceFactor out{Eigen::LLT<Matrix>(c), jitter};
    if (out.llt.info() == Eigen::Success) return out;

    const double raised = jitter * 10.0;
    c.diagonal().array() += raised - jitter;
    out.llt.compute(c);
    out.jitter_used = raised;
    if (out.llt.info() != Eigen::Success) {
        throw NumericalError("GP covariance is not positive definite even with jitter " + std::to_string(raised));
    }
    return out;
}

GpModel::GpModel(RbfHyperparams h, Matrix x, Vector t, double jit)
    : hyper(std::move(h)), train_inputs(std::move(x)), train_targets(std::move(t)), jitter(jit) {
    validate();
}

void GpModel::validate() const {
    if (train_inputs.rows() != train_targets.size()) {
        throw ValidationError("GpModel: " + std::to_string(train_inputs.rows()) + " inputs vs " +
                              std::to_string(train_targets.size()) + " targets");
    }
    if (train_inputs.cols() != hyper.input_dim()) {
        throw ValidationError("GpModel: input dimension " + std::to_string(train_inputs.cols()) + " vs " +
                              std::to_string(hyper.input_dim()) + " lengthscales");
    }
    if (!train_inputs.allFinite() || !train_targets.allFinite() || !hyper.pack().allFinite() ||
        !std::isfinite(jitter) || jitter < 0.0) {
        throw ValidationError("GpModel: non-finite or invalid values");
    }
}

void GpModel::condition() {
    validate();
    auto factor = factorize(train_inputs, hyper, jitter);
    Vector alpha = factor.llt.solve(train_targets);
    posterior_ = Posterior{std::move(factor.llt), std::move(alpha), factor.jitter_used};
}

const GpModel::Posterior& GpModel::posterior() const {
    if (!posterior_) throw std::logic_error("GpModel::posterior: model not conditioned");
    return *posterior_;
}

RbfHyperparams initial_hyperparams(const Matrix& x) {
    RbfHyperparams h;
    h.log_signal_variance = 0.0;
    h.log_noise_variance = std::log(0.01);
    h.log_lengthscales.resize(x.cols());
    for (Index k = 0; k < x.cols(); ++k) {
        double sd = 0.0;
        if (x.rows() > 1) {
            const double mean = x.col(k).mean();
            sd = std::sqrt((x.col(k).array() - mean).square().sum() / static_cast<double>(x.rows() - 1));
        }
        h.log_lengthscales[k] = sd > 0.0 ? std::log(sd) : 0.0;
    }
    return h;
}

namespace {

constexpr double kLog2Pi = 1.8378770664093453;  // log(2 pi)

double mll_from_factor(const Eigen::LLT<Matrix>& llt, const Vector& t, const Vector& alpha) {
    const Matrix& l = llt.matrixLLT();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    return -0.5 * t.dot(alpha) - 0.5 * log_det - 0.5 * static_cast<double>(t.size()) * kLog2Pi;
}

}  // namespace

double log_marginal_likelihood(const GpModel& model) {
    model.validate();
    const auto factor = factorize(model.train_inputs, model.hyper, model.jitter);
    const Vector alpha = factor.llt.solve(model.train_targets);
    return mll_from_factor(factor.llt, model.train_targets, alpha);
}

std::pair<double, Vector> mll_value_and_gradient(const GpModel& model) {
    model.validate();
    const Matrix& x = model.train_inputs;
    const Index m = x.rows();
    const Index l = x.cols();
    const auto factor = factorize(x, model.hyper, model.jitter);
    const Vector alpha = factor.llt.solve(model.train_targets);
    const double value = mll_from_factor(factor.llt, model.train_targets, alpha);

    // W = alpha alpha^T - C^-1; each gradient entry is 1/2 sum_ij W_ij dC_ij.
    Matrix w = alpha * alpha.transpose();
    w -= factor.llt.solve(Matrix::Identity(m, m));
    const Matrix k = cross_kernel(x, x, model.hyper);
    const Matrix wk = w.cwiseProduct(k);

    Vector grad(l + 2);
    grad[0] = 0.5 * wk.sum();
    for (Index dim = 0; dim < l; ++dim) {
        const double inv_len2 = std::exp(-2.0 * model.hyper.log_lengthscales[dim]);
        double acc = 0.0;
        for (Index j = 0; j < m; ++j) {
            for (Index i = 0; i < m; ++i) {
                const double diff = x(i, dim) - x(j, dim);
                acc += wk(i, j) * diff * diff;
            }
        }
        grad[1 + dim] = 0.5 * acc * inv_len2;
    }
    grad[l + 1] = 0.5 * model.hyper.noise_variance() * w.trace();
    return {value, grad};
}

Vector mll_gradient(const GpModel& model) { return mll_value_and_gradient(model).second; }

GpModel fit(const Matrix& x, const Vector& t, const FitOptions& opts, std::uint64_t /*seed*/, FitReport* report) {
    if (x.rows() < 2) throw ValidationError("gp::fit: need at least 2 training points");
    GpModel model(initial_hyperparams(x), x, t, opts.jitter);

    Vector params = model.hyper.pack();
    AdamState adam(params.size(), opts.lr);
    double first_mll = 0.0;
    for (std::size_t it = 0; it < opts.iters; ++it) {
        auto [mll, grad] = mll_value_and_gradient(model);
        if (!std::isfinite(mll) || !grad.allFinite()) {
            throw NumericalError("gp::fit: non-finite marginal likelihood at iteration " + std::to_string(it));
        }
        if (it == 0) first_mll = mll;
        const Vector descent = -grad;
        adam_step(std::span<double>(params.data(), static_cast<std::size_t>(params.size())),
                  std::span<const double>(descent.data(), static_cast<std::size_t>(descent.size())), adam);
        model.hyper = RbfHyperparams::unpack(params);
    }

    model.condition();
    if (report) {
        const double final_mll = log_marginal_likelihood(model);
        report->initial_mll = opts.iters == 0 ? final_mll : first_mll;
        report->final_mll = final_mll;
    }
    return model;
}

Prediction predict(const GpModel& model, const Matrix& xq) {
    if (xq.cols() != model.hyper.input_dim()) {
        throw ValidationError("gp::predict: query dimension " + std::to_string(xq.cols()) + " != " +
                              std::to_string(model.hyper.input_dim()));
    }
    if (!model.conditioned()) {
        GpModel copy = model;
        copy.condition();
        return predict(copy, xq);
    }
    const auto& post = model.posterior();
    const Matrix kq = cross_kernel(model.train_inputs, xq, model.hyper);  // M x n
    Prediction out;
    out.mean = kq.transpose() * post.alpha;
    const Matrix v = post.llt.matrixL().solve(kq);
    const double prior = model.hyper.signal_variance() + model.hyper.noise_variance();
    out.variance.resize(xq.rows());
    for (Index i = 0; i < xq.rows(); ++i) {
        const double var = prior - v.col(i).squaredNorm();
        if (var < -1e-10) {
            throw NumericalError("gp::predict: negative posterior variance " + std::to_string(var));
        }
        out.variance[i] = std::max(var, 0.0);
    }
    return out;
}

Vector predict_mean(const GpModel& model, const Matrix& xq) {
    if (xq.cols() != model.hyper.input_dim()) {
        throw ValidationError("gp::predict_mean: query dimension mismatch");
    }
    if (!model.conditioned()) {
        GpModel copy = model;
        copy.condition();
        return predict_mean(copy, xq);
    }
    return cross_kernel(model.train_inputs, xq, model.hyper).transpose() * model.posterior().alpha;
}

}  // namespace elmc::gp
