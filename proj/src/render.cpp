#include <cmath>
#include <string>

#include "elmc/bench.hpp"
#include "elmc/error.hpp"

namespace elmc {

std::string render_pgm(const Vector& field, GridShape grid) {
    if (static_cast<std::size_t>(field.size()) != grid.size() || grid.size() == 0) {
        throw ValidationError("render_pgm: field has " + std::to_string(field.size()) + " values, grid is " +
                              std::to_string(grid.height) + "x" + std::to_string(grid.width));
    }
    const double lo = field.minCoeff();
    const double hi = field.maxCoeff();
    std::string out = "P2\n" + std::to_string(grid.width) + " " + std::to_string(grid.height) + "\n255\n";
    for (std::size_t i = 0; i < grid.height; ++i) {
        for (std::size_t j = 0; j < grid.width; ++j) {
            const double v = field[static_cast<Index>(i * grid.width + j)];
            const long pixel = hi > lo ? std::lround(255.0 * (v - lo) / (hi - lo)) : 0;
            if (j > 0) out.push_back(' ');
            out += std::to_string(pixel);
        }
        out.push_back('\n');
    }
    return out;
}

}  // namespace elmc
