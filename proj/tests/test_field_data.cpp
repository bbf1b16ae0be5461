#include <doctest.h>

#include <algorithm>
#include <set>

#include "elmc/error.hpp"
#include "elmc/field_data.hpp"
#include "elmc/text_io.hpp"
#include "test_support.hpp"

using namespace elmc;
using elmc::test::TempDir;

namespace {

FieldDataset random_dataset(Prng& rng, Index m, Index l, GridShape grid) {
    FieldDataset ds;
    ds.inputs = test::random_matrix(rng, m, l, -3.0, 3.0);
    ds.fields = test::random_matrix(rng, m, static_cast<Index>(grid.size()), -1e3, 1e3);
    ds.grid = grid;
    ds.meta.generator = "random";
    ds.meta.seed = 17;
    return ds;
}

}  // namespace

TEST_CASE("load_dataset reads shapes from the three files") {
    TempDir dir("load");
    write_text_file(dir / "inputs.csv", "1,2,3\n4,5,6\n");
    write_text_file(dir / "fields.csv", "0.1,0.2,0.3,0.4\n0.5,0.6,0.7,0.8\n");
    write_text_file(dir / "meta.json", R"({"grid":[2,2],"n_samples":2,"input_dim":3,"generator":"x","seed":3,
                                          "transform":{"scale":1,"offset":0}})");
    const FieldDataset ds = load_dataset(dir.path());
    CHECK(ds.n_samples() == 2);
    CHECK(ds.input_dim() == 3);
    CHECK(ds.field_dim() == 4);
    CHECK(ds.grid == GridShape{2, 2});
    CHECK(ds.fields(1, 2) == 0.7);
    CHECK(ds.meta.seed == 3);
}

TEST_CASE("load_dataset rejects broken directories") {
    TempDir dir("bad");
    write_text_file(dir / "meta.json", R"({"grid":[2,2],"input_dim":3,"generator":"x","seed":0})");
    write_text_file(dir / "inputs.csv", "1,2,3\n4,5,6\n");

    SUBCASE("missing fields.csv") { CHECK_THROWS_AS(load_dataset(dir.path()), IoError); }
    SUBCASE("row-count mismatch") {
        write_text_file(dir / "fields.csv", "1,2,3,4\n1,2,3,4\n1,2,3,4\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir.path()), doctest::Contains("row-count mismatch"), ValidationError);
    }
    SUBCASE("d != H*W") {
        write_text_file(dir / "fields.csv", "1,2,3\n1,2,3\n");
        CHECK_THROWS_AS(load_dataset(dir.path()), ValidationError);
    }
    SUBCASE("non-numeric cell names file and line") {
        write_text_file(dir / "fields.csv", "1,2,3,4\n1,abc,3,4\n");
        CHECK_THROWS_WITH_AS(load_dataset(dir.path()), doctest::Contains("fields.csv:2"), ValidationError);
    }
}

TEST_CASE("save then load is bit-identical") {
    Prng rng(99);
    for (int trial = 0; trial < 5; ++trial) {
        const FieldDataset ds = random_dataset(rng, 5, 3, {2, 4});
        TempDir dir("rt");
        save_dataset(ds, dir.path());
        const FieldDataset back = load_dataset(dir.path());
        CHECK(back.inputs == ds.inputs);
        CHECK(back.fields == ds.fields);
        CHECK(back.grid == ds.grid);
        CHECK(back.meta.generator == "random");
        CHECK(back.meta.seed == 17);
    }
}

TEST_CASE("empty dataset round-trips with empty CSVs") {
    FieldDataset ds;
    ds.inputs.resize(0, 3);
    ds.fields.resize(0, 4);
    ds.grid = {2, 2};
    TempDir dir("empty");
    save_dataset(ds, dir.path());
    CHECK(read_text_file(dir / "fields.csv").empty());
    CHECK(read_text_file(dir / "inputs.csv").empty());
    const FieldDataset back = load_dataset(dir.path());
    CHECK(back.n_samples() == 0);
    CHECK(back.input_dim() == 3);
    CHECK(back.field_dim() == 4);
}

TEST_CASE("1x1 grid writes exactly one 17-digit value") {
    FieldDataset ds;
    ds.inputs = Matrix::Constant(1, 1, 2.5);
    ds.fields = Matrix::Constant(1, 1, 0.1);
    ds.grid = {1, 1};
    TempDir dir("one");
    save_dataset(ds, dir.path());
    CHECK(read_text_file(dir / "fields.csv") == "0.10000000000000001\n");
    CHECK(read_text_file(dir / "inputs.csv") == "2.5\n");
}

TEST_CASE("split partitions indices deterministically") {
    const auto [train, test] = split_indices(5, 3, 7);
    // Golden permutation for mt19937_64(7) with Fisher-Yates.
    CHECK(train == std::vector<std::size_t>{1, 3, 4});
    CHECK(test == std::vector<std::size_t>{2, 0});

    CHECK_THROWS_AS(split_indices(10, 10, 0), ValidationError);
    CHECK_THROWS_AS(split_indices(10, 0, 0), ValidationError);

    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto a = split_indices(23, 9, seed);
        const auto b = split_indices(23, 9, seed);
        CHECK(a == b);
        std::set<std::size_t> all(a.first.begin(), a.first.end());
        for (const auto i : a.second) CHECK(all.insert(i).second);
        CHECK(all.size() == 23);
        CHECK(*all.rbegin() == 22);
    }
}

TEST_CASE("split carries rows with their inputs") {
    Prng rng(5);
    const FieldDataset ds = random_dataset(rng, 8, 2, {2, 2});
    const auto [tr, te] = split(ds, 5, 11);
    const auto [itr, ite] = split_indices(8, 5, 11);
    for (std::size_t k = 0; k < itr.size(); ++k) {
        CHECK(tr.inputs.row(static_cast<Index>(k)) == ds.inputs.row(static_cast<Index>(itr[k])));
        CHECK(tr.fields.row(static_cast<Index>(k)) == ds.fields.row(static_cast<Index>(itr[k])));
    }
    CHECK(te.n_samples() == 3);
}

TEST_CASE("fit_normalizer examples") {
    SUBCASE("constant fields") {
        const auto t = fit_normalizer(Matrix::Constant(2, 3, 5.0));
        CHECK(t.scale == 1.0);
        CHECK(t.offset == -5.0);
    }
    SUBCASE("fields in [2, 4]") {
        Matrix f(1, 3);
        f << 2.0, 3.0, 4.0;
        const auto t = fit_normalizer(f);
        CHECK(t.scale == 0.5);
        CHECK(t.offset == -1.0);
        CHECK(t.apply(3.0) == 0.5);
    }
    SUBCASE("already unit range") {
        Matrix f(1, 3);
        f << 0.0, 0.3, 1.0;
        CHECK(fit_normalizer(f).is_identity());
    }
    SUBCASE("non-finite") {
        Matrix f = Matrix::Zero(1, 2);
        f(0, 1) = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(fit_normalizer(f), ValidationError);
    }
}

TEST_CASE("normalizer maps extremes onto [0, 1] and inverts") {
    // The minimum always lands on exactly 0. For a small fraction of ranges no double scale puts
    // fl(fl(s * hi) + o) on exactly 1, so the maximum may fall a few ulps short.
    Prng rng(2024);
    int exact_top = 0;
    const int trials = 500;
    for (int trial = 0; trial < trials; ++trial) {
        const double lo = rng.uniform(-1e4, 1e4);
        const double span = std::pow(10.0, rng.uniform(-6.0, 6.0));
        Matrix f = test::random_matrix(rng, 4, 7, lo, lo + span);
        const auto t = fit_normalizer(f);
        const Matrix g = t.apply(f);
        CHECK(g.minCoeff() == 0.0);
        CHECK(g.maxCoeff() <= 1.0);
        CHECK(g.maxCoeff() >= 1.0 - 4 * std::numeric_limits<double>::epsilon());
        if (g.maxCoeff() == 1.0) ++exact_top;
        const Matrix back = t.invert(g);
        for (Index i = 0; i < f.size(); ++i) {
            const double v = f.reshaped()[i];
            CHECK(std::abs(back.reshaped()[i] - v) <= 1e-12 * std::max(std::abs(v), std::abs(lo) + span));
        }
    }
    CHECK(exact_top >= trials * 9 / 10);
}
