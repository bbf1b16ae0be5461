#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace elmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Height/width of a spatial grid; fields are flattened row-major (row * width + col).
struct GridShape {
    std::size_t height = 0;
    std::size_t width = 0;

    [[nodiscard]] std::size_t size() const { return height * width; }
    bool operator==(const GridShape&) const = default;
};

}  // namespace elmc
