#pragma once

#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "elmc/optim.hpp"
#include "elmc/types.hpp"

namespace elmc::test {

/// Fresh empty directory under the system temp dir; removed when the object dies.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path_ = std::filesystem::temp_directory_path() /
                ("elmc_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    [[nodiscard]] const std::filesystem::path& path() const { return path_; }
    [[nodiscard]] std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline Matrix random_matrix(Prng& rng, Index rows, Index cols, double lo = -1.0, double hi = 1.0) {
    Matrix m(rows, cols);
    for (Index i = 0; i < rows; ++i) {
        for (Index j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
    }
    return m;
}

inline double max_abs(const Matrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

/// Largest elementwise relative error of `got` against `oracle`, skipping entries where the
/// oracle is below `floor` in magnitude.
inline double max_rel_err(const Vector& got, const Vector& oracle, double floor = 1e-6) {
    double worst = 0.0;
    for (Index i = 0; i < oracle.size(); ++i) {
        if (std::abs(oracle[i]) <= floor) continue;
        worst = std::max(worst, std::abs(got[i] - oracle[i]) / std::abs(oracle[i]));
    }
    return worst;
}

}  // namespace elmc::test
