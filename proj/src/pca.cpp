#include "elmc/pca.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <string>

#include "elmc/error.hpp"

namespace elmc::pca {

void PcaBasis::validate() const {
    if (mean.size() != basis.rows() || component_variances.size() != basis.cols()) {
        throw ValidationError("PcaBasis: mean length " + std::to_string(mean.size()) + ", basis " +
                              std::to_string(basis.rows()) + "x" + std::to_string(basis.cols()) + ", " +
                              std::to_string(component_variances.size()) + " variances");
    }
}

PcaBasis fit_pca(const Matrix& data, Index rank) {
    const Index m = data.rows();
    const Index d = data.cols();
    if (m < 2) throw ValidationError("fit_pca: need at least 2 samples");
    if (rank < 1 || rank > std::min(m, d)) {
        throw ValidationError("fit_pca: rank " + std::to_string(rank) + " outside [1, " +
                              std::to_string(std::min(m, d)) + "]");
    }
    if (!data.allFinite()) throw ValidationError("fit_pca: non-finite input");

    PcaBasis out;
    out.mean = data.colwise().mean().transpose();
    const Matrix centred = data.rowwise() - out.mean.transpose();

    // JacobiSVD rather than BDCSVD: Eigen 3.4.0's divide-and-conquer path reads out of bounds in
    // perturbCol0 on some rank-deficient inputs (seen on autoencoder latents) and returns NaN or crashes.
    const Eigen::JacobiSVD<Matrix> svd(centred, Eigen::ComputeThinV);
    out.basis = svd.matrixV().leftCols(rank);
    const Vector sv = svd.singularValues().head(rank);
    out.component_variances = sv.array().square() / static_cast<double>(m - 1);

    for (Index q = 0; q < rank; ++q) {
        Index arg = 0;
        double best = -1.0;
        for (Index i = 0; i < d; ++i) {
            const double a = std::abs(out.basis(i, q));
            if (a > best) {
                best = a;
                arg = i;
            }
        }
        if (out.basis(arg, q) < 0.0) out.basis.col(q) *= -1.0;
    }
    return out;
}

Matrix project(const PcaBasis& b, const Matrix& data) {
    if (data.cols() != b.dim()) {
        throw ValidationError("pca::project: data has " + std::to_string(data.cols()) + " columns, basis expects " +
                              std::to_string(b.dim()));
    }
    return (data.rowwise() - b.mean.transpose()) * b.basis;
}

Matrix reconstruct(const PcaBasis& b, const Matrix& coords) {
    if (coords.cols() != b.rank()) {
        throw ValidationError("pca::reconstruct: coordinates have " + std::to_string(coords.cols()) +
                              " columns, basis rank is " + std::to_string(b.rank()));
    }
    return (coords * b.basis.transpose()).rowwise() + b.mean.transpose();
}

}  // namespace elmc::pca
