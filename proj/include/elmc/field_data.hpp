#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "elmc/types.hpp"

namespace elmc {

/// Global affine map v -> scale * v + offset used to bring fields into [0, 1].
struct AffineTransform {
    double scale = 1.0;
    double offset = 0.0;

    [[nodiscard]] double apply(double v) const { return scale * v + offset; }
    [[nodiscard]] double invert(double v) const { return (v - offset) / scale; }
    [[nodiscard]] Matrix apply(const Matrix& m) const;
    [[nodiscard]] Matrix invert(const Matrix& m) const;

    [[nodiscard]] bool is_identity() const { return scale == 1.0 && offset == 0.0; }
    bool operator==(const AffineTransform&) const = default;
};

struct DatasetMeta {
    std::string generator = "external";
    std::int64_t seed = 0;
    AffineTransform transform;
};

/// Paired design inputs (m x l) and flattened spatial fields (m x d, d = H * W).
struct FieldDataset {
    Matrix inputs;
    Matrix fields;
    GridShape grid;
    DatasetMeta meta;

    [[nodiscard]] Index n_samples() const { return inputs.rows(); }
    [[nodiscard]] Index input_dim() const { return inputs.cols(); }
    [[nodiscard]] Index field_dim() const { return fields.cols(); }

    /// Throws ValidationError when a dataset invariant is broken.
    void validate() const;

    /// Rows `indices` of this dataset, in the given order.
    [[nodiscard]] FieldDataset subset(const std::vector<std::size_t>& indices) const;
};

FieldDataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const FieldDataset& ds, const std::filesystem::path& dir);

/// Seeded random train/test partition; requires 0 < n_train < m.
std::pair<FieldDataset, FieldDataset> split(const FieldDataset& ds, std::size_t n_train, std::uint64_t seed);

/// Index form of split(): first n_train entries of a seeded permutation go to train.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t m, std::size_t n_train,
                                                                            std::uint64_t seed);

/// Maps the minimum field value to exactly 0 and the maximum to exactly 1.
/// A constant dataset gets scale 1 and offset -value.
AffineTransform fit_normalizer(const FieldDataset& ds);
AffineTransform fit_normalizer(const Matrix& fields);

}  // namespace elmc
