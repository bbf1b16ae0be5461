#pragma once

#include <cstdint>
#include <optional>

#include "elmc/types.hpp"

namespace elmc::gp {

/// RBF (squared exponential) kernel hyperparameters with one lengthscale per input
/// dimension. Everything is stored in the log domain so unconstrained Adam keeps them positive.
struct RbfHyperparams {
    double log_signal_variance = 0.0;
    Vector log_lengthscales;
    double log_noise_variance = -4.605170185988091;  // log(0.01)

    [[nodiscard]] double signal_variance() const;
    [[nodiscard]] double noise_variance() const;
    [[nodiscard]] Index input_dim() const { return log_lengthscales.size(); }

    /// Packed as (log sigma^2, log l_1..l_k, log sigma_n^2); the order used by mll_gradient.
    [[nodiscard]] Vector pack() const;
    static RbfHyperparams unpack(const Vector& packed);
};

/// k(x, x2) = sigma^2 exp(-sum_i (x_i - x2_i)^2 / (2 l_i^2)).
double rbf_kernel(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& x2,
                  const RbfHyperparams& hyper);

/// Cross-kernel matrix between the rows of A and B (no noise, no jitter).
Matrix cross_kernel(const Matrix& a, const Matrix& b, const RbfHyperparams& hyper);

/// C(theta) + (sigma_n^2 + jitter) I over the rows of X.
Matrix build_covariance(const Matrix& x, const RbfHyperparams& hyper, double jitter);

/// Cholesky factor of the training covariance. When the first factorization fails the jitter is
/// raised tenfold once; a second failure throws NumericalError.
struct CovarianceFactor {
    Eigen::LLT<Matrix> llt;
    double jitter_used = 0.0;
};
CovarianceFactor factorize(const Matrix& x, const RbfHyperparams& hyper, double jitter);

/// Exact zero-mean GP for one scalar output.
class GpModel {
public:
    RbfHyperparams hyper;
    Matrix train_inputs;
    Vector train_targets;
    double jitter = 1e-6;

    GpModel() = default;
    GpModel(RbfHyperparams h, Matrix x, Vector t, double jitter = 1e-6);

    /// Checks shapes and finiteness; throws ValidationError.
    void validate() const;

    /// Factorizes the covariance and caches C^-1 t. Called by fit() and after loading.
    void condition();
    [[nodiscard]] bool conditioned() const { return posterior_.has_value(); }

    struct Posterior {
        Eigen::LLT<Matrix> llt;
        Vector alpha;
        double jitter_used = 0.0;
    };
    /// Cached factorization; throws std::logic_error before condition().
    [[nodiscard]] const Posterior& posterior() const;

private:
    std::optional<Posterior> posterior_;
};

/// Scale-aware deterministic start: log sigma^2 = 0, log sigma_n^2 = log 0.01,
/// log l_i = log of the per-dimension standard deviation of X (1 when that is zero).
RbfHyperparams initial_hyperparams(const Matrix& x);

/// -1/2 t^T C^-1 t - 1/2 log|C| - M/2 log 2 pi.
double log_marginal_likelihood(const GpModel& model);

/// d MLL / d(log sigma^2, log l_1..l_k, log sigma_n^2) via 1/2 tr((alpha alpha^T - C^-1) dC).
Vector mll_gradient(const GpModel& model);

/// MLL and its gradient from one factorization.
std::pair<double, Vector> mll_value_and_gradient(const GpModel& model);

struct FitOptions {
    std::size_t iters = 500;
    double lr = 1e-3;
    double jitter = 1e-6;
};

struct FitReport {
    double initial_mll = 0.0;
    double final_mll = 0.0;
};

/// Adam ascent on the marginal likelihood starting from initial_hyperparams(). The start point is
/// deterministic, so `seed` only tags the run; identical inputs give bit-identical output.
GpModel fit(const Matrix& x, const Vector& t, const FitOptions& opts, std::uint64_t seed = 0,
            FitReport* report = nullptr);

struct Prediction {
    Vector mean;
    Vector variance;
};

/// Posterior mean c(x)^T C^-1 t and variance sigma^2 + sigma_n^2 - c(x)^T C^-1 c(x), i.e. for a noisy
/// observation at x. Values below -1e-10 throw NumericalError; the rest are clamped at 0.
Prediction predict(const GpModel& model, const Matrix& xq);

/// Posterior mean only.
Vector predict_mean(const GpModel& model, const Matrix& xq);

}  // namespace elmc::gp
