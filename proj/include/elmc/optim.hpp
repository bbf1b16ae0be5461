#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "elmc/types.hpp"

namespace elmc {

/// Seeded 64-bit generator. Backed by std::mt19937_64, whose output sequence is fixed by the
/// C++ standard, so streams are identical across platforms. Derived quantities (uniform reals,
/// bounded integers, permutations) are computed here rather than through <random>
/// distributions, which are implementation-defined.
class Prng {
public:
    static constexpr std::string_view algorithm = "mt19937_64";

    explicit Prng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    [[nodiscard]] std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Unbiased integer in [0, bound); bound must be positive.
    std::uint64_t below(std::uint64_t bound);

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

/// Independent child seed for sub-stream `stream` of `seed` (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

struct AdamState {
    std::uint64_t step = 0;
    Vector first_moment;
    Vector second_moment;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;

    AdamState() = default;
    AdamState(Index n_params, double learning_rate)
        : first_moment(Vector::Zero(n_params)), second_moment(Vector::Zero(n_params)), lr(learning_rate) {}
};

/// One bias-corrected Adam descent step, in place. Throws ValidationError on length mismatch,
/// non-finite gradients or lr <= 0.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

using ScalarFunction = std::function<double(const Vector&)>;

/// Central-difference gradient (f(x + h e_i) - f(x - h e_i)) / 2h.
Vector finite_diff_grad(const ScalarFunction& f, const Vector& x, double h = 1e-5);

}  // namespace elmc
