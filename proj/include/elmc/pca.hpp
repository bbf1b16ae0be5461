#pragma once

#include "elmc/types.hpp"

namespace elmc::pca {

/// Rank-r principal subspace. The columns of `basis` are the leading eigenvectors of the sample
/// covariance and play the role of the fixed LMC bases; the rank-one coregionalization matrices
/// v v^T are never formed.
struct PcaBasis {
    Vector mean;                 // length d
    Matrix basis;                // d x r, orthonormal columns
    Vector component_variances;  // length r, non-increasing

    [[nodiscard]] Index dim() const { return basis.rows(); }
    [[nodiscard]] Index rank() const { return basis.cols(); }

    /// Throws ValidationError on inconsistent shapes.
    void validate() const;
};

/// Top-r right singular vectors of the centred data. Each column is sign-fixed so that its
/// largest-magnitude entry (lowest index on ties) is positive. Variances are s^2 / (m - 1).
PcaBasis fit_pca(const Matrix& data, Index rank);

/// (data - mean) * basis.
Matrix project(const PcaBasis& b, const Matrix& data);

/// coords * basis^T + mean.
Matrix reconstruct(const PcaBasis& b, const Matrix& coords);

}  // namespace elmc::pca
