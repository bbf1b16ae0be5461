#pragma once

#include <cstdint>
#include <string>

#include "elmc/field_data.hpp"

namespace elmc::datagen {

/// Analytic stand-ins for simulator output. Inputs are xi in [0,1]^3; grid coordinates are
/// cell centres x1 = (i + 1/2) / H (row), x2 = (j + 1/2) / W (column).
///
///   front:  1/2 (1 + tanh((x1 - f(x2)) / 0.05)),  f = 0.3 + 0.4 xi1 + 0.15 xi2 sin(2 pi (x2 + xi3))
///   bump:   exp(-|x - c|^2 / (2 s^2)),            c = 0.2 + 0.6 (xi1, xi2), s = 0.05 + 0.15 xi3
///   linear: sum_q sin(pi xi_q) v_q(x) with v1 = sin(pi x1) sin(pi x2), v2 = sin(2 pi x1) sin(pi x2),
///           v3 = sin(pi x1) sin(2 pi x2)
inline constexpr Index kInputDim = 3;

double front_value(const Vector& xi, double x1, double x2);
double bump_value(const Vector& xi, double x1, double x2);
double linear_value(const Vector& xi, double x1, double x2);

Vector gen_front_field(const Vector& xi, GridShape grid);
Vector gen_bump_field(const Vector& xi, GridShape grid);
Vector gen_linear_field(const Vector& xi, GridShape grid);

struct GeneratorSpec {
    std::string name = "front";
    GridShape grid{32, 32};
    std::size_t n_samples = 100;
    std::uint64_t seed = 0;
};

/// Draws inputs uniformly on [0,1]^3 (three uniforms per sample, in order) and evaluates the
/// named generator. Throws ValidationError for unknown names or a bad grid.
FieldDataset generate_dataset(const GeneratorSpec& spec);

/// Parses "HxW".
GridShape parse_grid(const std::string& text);

}  // namespace elmc::datagen
