#include "elmc/optim.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "elmc/error.hpp"

namespace elmc {

std::uint64_t Prng::below(std::uint64_t bound) {
    if (bound == 0) throw ValidationError("Prng::below: bound must be positive");
    // Reject the short final bucket so every residue is equally likely.
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return draw % bound;
}

std::vector<std::size_t> Prng::permutation(std::size_t n) {
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(below(i));
        std::swap(perm[i - 1], perm[j]);
    }
    return perm;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + (stream + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
    const auto n = static_cast<Index>(params.size());
    if (static_cast<Index>(grads.size()) != n || state.first_moment.size() != n ||
        state.second_moment.size() != n) {
        throw ValidationError("adam_step: parameter, gradient and moment lengths differ (" +
                              std::to_string(params.size()) + " params, " +
                              std::to_string(grads.size()) + " grads, " +
                              std::to_string(state.first_moment.size()) + " moments)");
    }
    if (!(state.lr > 0.0)) throw ValidationError("adam_step: learning rate must be positive");
    const Eigen::Map<const Eigen::ArrayXd> g(grads.data(), n);
    if (!g.isFinite().all()) throw ValidationError("adam_step: non-finite gradient");

    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bias1 = 1.0 - std::pow(state.beta1, t);
    const double bias2 = 1.0 - std::pow(state.beta2, t);
    auto m = state.first_moment.array();
    auto v = state.second_moment.array();
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    Eigen::Map<Eigen::ArrayXd> p(params.data(), n);
    p -= state.lr * (m / bias1) / ((v / bias2).sqrt() + state.eps);
}

Vector finite_diff_grad(const ScalarFunction& f, const Vector& x, double h) {
    if (!(h > 0.0)) throw ValidationError("finite_diff_grad: step must be positive");
    Vector grad(x.size());
    Vector probe = x;
    for (Index i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        if (!std::isfinite(up) || !std::isfinite(down)) {
            throw NumericalError("finite_diff_grad: non-finite function value at coordinate " +
                                 std::to_string(i));
        }
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace elmc
