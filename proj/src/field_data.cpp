#include "elmc/field_data.hpp"

#include <cmath>
#include <json.hpp>

#include "elmc/error.hpp"
#include "elmc/optim.hpp"
#include "elmc/text_io.hpp"

namespace elmc {

namespace fs = std::filesystem;
using nlohmann::json;

Matrix AffineTransform::apply(const Matrix& m) const {
    return m.unaryExpr([this](double v) { return apply(v); });
}

Matrix AffineTransform::invert(const Matrix& m) const {
    return m.unaryExpr([this](double v) { return invert(v); });
}

void FieldDataset::validate() const {
    if (inputs.rows() != fields.rows()) {
        throw ValidationError("dataset: row-count mismatch (" + std::to_string(inputs.rows()) + " inputs vs " +
                              std::to_string(fields.rows()) + " fields)");
    }
    if (static_cast<std::size_t>(fields.cols()) != grid.size()) {
        throw ValidationError("dataset: field dimension " + std::to_string(fields.cols()) + " != grid " +
                              std::to_string(grid.height) + "x" + std::to_string(grid.width));
    }
    if (!inputs.allFinite() || !fields.allFinite()) throw ValidationError("dataset: non-finite values");
}

FieldDataset FieldDataset::subset(const std::vector<std::size_t>& indices) const {
    FieldDataset out;
    out.grid = grid;
    out.meta = meta;
    out.inputs.resize(static_cast<Index>(indices.size()), inputs.cols());
    out.fields.resize(static_cast<Index>(indices.size()), fields.cols());
    for (std::size_t k = 0; k < indices.size(); ++k) {
        const auto src = static_cast<Index>(indices[k]);
        if (src >= inputs.rows()) throw ValidationError("dataset subset: index out of range");
        out.inputs.row(static_cast<Index>(k)) = inputs.row(src);
        out.fields.row(static_cast<Index>(k)) = fields.row(src);
    }
    return out;
}

FieldDataset load_dataset(const fs::path& dir) {
    for (const char* name : {"inputs.csv", "fields.csv", "meta.json"}) {
        if (!fs::exists(dir / name)) throw IoError("dataset: missing file " + (dir / name).string());
    }
    json meta;
    try {
        meta = json::parse(read_text_file(dir / "meta.json"));
    } catch (const json::exception& e) {
        throw ValidationError((dir / "meta.json").string() + ": " + e.what());
    }

    FieldDataset ds;
    try {
        ds.grid = {meta.at("grid").at(0).get<std::size_t>(), meta.at("grid").at(1).get<std::size_t>()};
        ds.meta.generator = meta.value("generator", std::string("external"));
        ds.meta.seed = meta.value("seed", std::int64_t{0});
        if (meta.contains("transform")) {
            ds.meta.transform.scale = meta["transform"].at("scale").get<double>();
            ds.meta.transform.offset = meta["transform"].at("offset").get<double>();
        }
    } catch (const json::exception& e) {
        throw ValidationError((dir / "meta.json").string() + ": " + e.what());
    }
    const Index input_dim = meta.value("input_dim", Index{-1});

    ds.inputs = read_csv(dir / "inputs.csv", input_dim);
    ds.fields = read_csv(dir / "fields.csv", static_cast<Index>(ds.grid.size()));
    if (ds.inputs.rows() != ds.fields.rows()) {
        throw ValidationError("dataset " + dir.string() + ": row-count mismatch, inputs.csv has " +
                              std::to_string(ds.inputs.rows()) + " rows, fields.csv has " +
                              std::to_string(ds.fields.rows()));
    }
    if (meta.contains("n_samples") && meta["n_samples"].get<Index>() != ds.inputs.rows()) {
        throw ValidationError("dataset " + dir.string() + ": meta.json n_samples disagrees with CSV rows");
    }
    ds.validate();
    return ds;
}

void save_dataset(const FieldDataset& ds, const fs::path& dir) {
    ds.validate();
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

    write_csv(dir / "inputs.csv", ds.inputs);
    write_csv(dir / "fields.csv", ds.fields);
    json meta = {
        {"grid", {ds.grid.height, ds.grid.width}},
        {"layout", "row-major"},
        {"n_samples", ds.n_samples()},
        {"input_dim", ds.input_dim()},
        {"generator", ds.meta.generator},
        {"seed", ds.meta.seed},
        {"transform", {{"scale", ds.meta.transform.scale}, {"offset", ds.meta.transform.offset}}},
    };
    write_text_file(dir / "meta.json", meta.dump(2) + "\n");
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(std::size_t m, std::size_t n_train,
                                                                            std::uint64_t seed) {
    if (n_train == 0 || n_train >= m) {
        throw ValidationError("split: n_train must satisfy 0 < n_train < m (n_train=" + std::to_string(n_train) +
                              ", m=" + std::to_string(m) + ")");
    }
    Prng rng(seed);
    const auto perm = rng.permutation(m);
    std::vector<std::size_t> train(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
    std::vector<std::size_t> test(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
    return {std::move(train), std::move(test)};
}

std::pair<FieldDataset, FieldDataset> split(const FieldDataset& ds, std::size_t n_train, std::uint64_t seed) {
    const auto [train, test] = split_indices(static_cast<std::size_t>(ds.n_samples()), n_train, seed);
    return {ds.subset(train), ds.subset(test)};
}

namespace {

// fl(fl(s * hi) - fl(s * lo)) is not always exactly 1 for s = 1 / (hi - lo); walk s a few ulps
// until it is, keeping offset = -(s * lo) so that lo still maps to exactly 0.
AffineTransform exact_unit_map(double lo, double hi) {
    // offset = -(scale * lo) sends lo to exactly 0. Only a few ulps around 1/(hi - lo) keep hi near 1,
    // and for some ranges none of them rounds to exactly 1; then take the closest one that stays below.
    const double base = 1.0 / (hi - lo);
    double best = 0.0;
    double best_top = -1.0;
    double up = base;
    double down = base;
    for (int step = 0; step < 64; ++step) {
        for (const double scale : {up, down}) {
            const double top = scale * hi + -(scale * lo);
            if (top == 1.0) return {scale, -(scale * lo)};
            if (top < 1.0 && top > best_top) {
                best = scale;
                best_top = top;
            }
        }
        up = std::nextafter(up, std::numeric_limits<double>::infinity());
        down = std::nextafter(down, 0.0);
    }
    return {best, -(best * lo)};
}

}  // namespace

AffineTransform fit_normalizer(const Matrix& fields) {
    if (fields.size() == 0) throw ValidationError("fit_normalizer: no field values");
    if (!fields.allFinite()) throw ValidationError("fit_normalizer: non-finite field values");
    const double lo = fields.minCoeff();
    const double hi = fields.maxCoeff();
    if (!(hi > lo)) return {1.0, -lo};
    return exact_unit_map(lo, hi);
}

AffineTransform fit_normalizer(const FieldDataset& ds) { return fit_normalizer(ds.fields); }

}  // namespace elmc
