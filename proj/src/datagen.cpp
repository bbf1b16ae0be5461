#include "elmc/datagen.hpp"

#include <charconv>
#include <cmath>
#include <numbers>

#include "elmc/error.hpp"
#include "elmc/optim.hpp"

namespace elmc::datagen {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFrontWidth = 0.05;

void check_xi(const Vector& xi) {
    if (xi.size() != kInputDim) throw ValidationError("generator input must have 3 entries");
}

template <typename F>
Vector eval_grid(const Vector& xi, GridShape grid, F&& value) {
    check_xi(xi);
    Vector out(static_cast<Index>(grid.size()));
    for (std::size_t i = 0; i < grid.height; ++i) {
        const double x1 = (static_cast<double>(i) + 0.5) / static_cast<double>(grid.height);
        for (std::size_t j = 0; j < grid.width; ++j) {
            const double x2 = (static_cast<double>(j) + 0.5) / static_cast<double>(grid.width);
            out[static_cast<Index>(i * grid.width + j)] = value(xi, x1, x2);
        }
    }
    return out;
}

}  // namespace

double front_value(const Vector& xi, double x1, double x2) {
    const double f = 0.3 + 0.4 * xi[0] + 0.15 * xi[1] * std::sin(2.0 * kPi * (x2 + xi[2]));
    return 0.5 * (1.0 + std::tanh((x1 - f) / kFrontWidth));
}

double bump_value(const Vector& xi, double x1, double x2) {
    const double c1 = 0.2 + 0.6 * xi[0];
    const double c2 = 0.2 + 0.6 * xi[1];
    const double s = 0.05 + 0.15 * xi[2];
    const double r2 = (x1 - c1) * (x1 - c1) + (x2 - c2) * (x2 - c2);
    return std::exp(-r2 / (2.0 * s * s));
}

double linear_value(const Vector& xi, double x1, double x2) {
    const double v1 = std::sin(kPi * x1) * std::sin(kPi * x2);
    const double v2 = std::sin(2.0 * kPi * x1) * std::sin(kPi * x2);
    const double v3 = std::sin(kPi * x1) * std::sin(2.0 * kPi * x2);
    return std::sin(kPi * xi[0]) * v1 + std::sin(kPi * xi[1]) * v2 + std::sin(kPi * xi[2]) * v3;
}

Vector gen_front_field(const Vector& xi, GridShape grid) { return eval_grid(xi, grid, front_value); }
Vector gen_bump_field(const Vector& xi, GridShape grid) { return eval_grid(xi, grid, bump_value); }
Vector gen_linear_field(const Vector& xi, GridShape grid) { return eval_grid(xi, grid, linear_value); }

FieldDataset generate_dataset(const GeneratorSpec& spec) {
    Vector (*gen)(const Vector&, GridShape) = nullptr;
    if (spec.name == "front") gen = gen_front_field;
    else if (spec.name == "bump") gen = gen_bump_field;
    else if (spec.name == "linear") gen = gen_linear_field;
    else throw ValidationError("unknown generator '" + spec.name + "' (expected front, bump or linear)");
    if (spec.grid.height < 2 || spec.grid.width < 2) throw ValidationError("generator grid must be at least 2x2");
    if (spec.n_samples < 1) throw ValidationError("generator needs at least one sample");

    Prng rng(spec.seed);
    FieldDataset ds;
    ds.grid = spec.grid;
    ds.meta.generator = spec.name;
    ds.meta.seed = static_cast<std::int64_t>(spec.seed);
    const auto n = static_cast<Index>(spec.n_samples);
    ds.inputs.resize(n, kInputDim);
    for (Index k = 0; k < n; ++k) {
        for (Index q = 0; q < kInputDim; ++q) ds.inputs(k, q) = rng.uniform();
    }
    ds.fields.resize(n, static_cast<Index>(spec.grid.size()));
    for (Index k = 0; k < n; ++k) ds.fields.row(k) = gen(ds.inputs.row(k).transpose(), spec.grid).transpose();
    return ds;
}

GridShape parse_grid(const std::string& text) {
    const auto x = text.find_first_of("xX");
    GridShape g;
    const auto parse = [&](std::string_view part, std::size_t& out) {
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        return ec == std::errc{} && ptr == part.data() + part.size() && !part.empty();
    };
    if (x == std::string::npos || !parse(std::string_view(text).substr(0, x), g.height) ||
        !parse(std::string_view(text).substr(x + 1), g.width)) {
        throw ValidationError("grid must look like HxW, got '" + text + "'");
    }
    if (g.height == 0 || g.width == 0) throw ValidationError("grid dimensions must be positive, got '" + text + "'");
    return g;
}

}  // namespace elmc::datagen
