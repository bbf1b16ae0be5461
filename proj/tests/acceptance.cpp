// Acceptance run: one PASS/FAIL line per criterion, non-zero exit if any fails.
//
// Criteria 5-9 read their training and bench settings from the JSON files in the configs/ directory,
// so the numbers printed here can be reproduced with `elmc bench --config ...`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "elmc/bench.hpp"
#include "elmc/config_json.hpp"
#include "elmc/datagen.hpp"
#include "elmc/gp.hpp"
#include "elmc/mlp.hpp"
#include "elmc/model.hpp"
#include "elmc/pca.hpp"
#include "elmc/text_io.hpp"
#include "test_support.hpp"

using namespace elmc;
using nlohmann::json;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

/// Collects failed checks with a short message each.
class Checks {
public:
    void expect(bool ok, const std::string& what) {
        ++total_;
        if (!ok && failures_.size() < 5) failures_.push_back(what);
        if (!ok) ++failed_;
    }
    [[nodiscard]] Outcome outcome(const std::string& summary) const {
        Outcome o{failed_ == 0, summary};
        if (failed_ > 0) {
            o.detail += "; " + std::to_string(failed_) + "/" + std::to_string(total_) + " checks failed";
            for (const auto& f : failures_) o.detail += "; " + f;
        }
        return o;
    }

private:
    std::size_t total_ = 0;
    std::size_t failed_ = 0;
    std::vector<std::string> failures_;
};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

json read_config(const std::string& name) { return json::parse(read_text_file(std::string(ELMC_CONFIG_DIR) + "/" + name)); }

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (const double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double constant_mean_mse(const FieldDataset& train, const FieldDataset& test) {
    const Eigen::RowVectorXd mu = train.fields.colwise().mean();
    return evaluate_mse(mu.replicate(test.fields.rows(), 1), test.fields);
}

// 1. Gradient oracles.
Outcome gradient_oracles() {
    const auto start = std::chrono::steady_clock::now();
    Checks c;
    Prng rng(2024);
    double worst_gp = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const Index l = 1 + static_cast<Index>(rng.below(3));
        const Index m = 4 + static_cast<Index>(rng.below(5));
        gp::RbfHyperparams h;
        h.log_signal_variance = rng.uniform(-1.0, 1.0);
        h.log_lengthscales = test::random_matrix(rng, l, 1, -0.5, 1.0).col(0);
        h.log_noise_variance = rng.uniform(-4.0, -1.0);
        const gp::GpModel model(h, test::random_matrix(rng, m, l), test::random_matrix(rng, m, 1, -2.0, 2.0).col(0));
        const Vector oracle = finite_diff_grad(
            [&](const Vector& p) {
                gp::GpModel copy = model;
                copy.hyper = gp::RbfHyperparams::unpack(p);
                return gp::log_marginal_likelihood(copy);
            },
            h.pack());
        const double err = test::max_rel_err(gp::mll_gradient(model), oracle);
        worst_gp = std::max(worst_gp, err);
        c.expect(err <= 1e-4, "gp trial " + std::to_string(trial) + " rel err " + fmt(err));
    }

    double worst_mlp = 0.0;
    for (int trial = 0; trial < 40; ++trial) {
        const bool with_bottleneck = trial % 2 == 0;
        mlp::NetActivations acts;
        acts.output = trial % 4 < 2 ? mlp::Activation::relu : mlp::Activation::identity;
        mlp::MlpNet net = mlp::init_mlp({5, 4}, {5, 6}, 6, 4, 500 + static_cast<std::uint64_t>(trial), acts);
        for (auto* stack : {&net.disentangle, &net.reconstruct}) {
            for (auto& layer : stack->layers) layer.bias = test::random_matrix(rng, layer.out_dim(), 1, -0.3, 0.3).col(0);
        }
        const Matrix y = test::random_matrix(rng, 3, 6, 0.0, 1.0);
        const Matrix target = with_bottleneck ? y : test::random_matrix(rng, 3, 6, 0.0, 1.0);
        const pca::PcaBasis basis = pca::fit_pca(mlp::forward_disentangle(net, y), 2);
        const pca::PcaBasis* bn = with_bottleneck ? &basis : nullptr;
        const Vector oracle = finite_diff_grad(
            [&](const Vector& p) {
                mlp::MlpNet copy = net;
                mlp::unpack(copy, p);
                return mlp::mse_loss(mlp::autoencode(copy, y, bn), target);
            },
            mlp::pack(net));
        const double err = test::max_rel_err(mlp::pack(mlp::backward(net, y, target, bn)), oracle);
        worst_mlp = std::max(worst_mlp, err);
        c.expect(err <= 1e-4, "mlp trial " + std::to_string(trial) + " rel err " + fmt(err));
    }
    const double t = seconds_since(start);
    c.expect(t < 30.0, "runtime " + fmt(t) + " s >= 30 s");
    return c.outcome("GP max rel err " + fmt(worst_gp) + " over 20, MLP " + fmt(worst_mlp) +
                     " over 20 bottleneck + 20 plain, " + fmt(t) + " s");
}

// 2. GP sanity.
Outcome gp_sanity() {
    Checks c;
    const auto start = std::chrono::steady_clock::now();
    const Index n = 20;
    Matrix x(n, 1);
    Vector t(n);
    for (Index i = 0; i < n; ++i) {
        x(i, 0) = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1);
        t[i] = std::sin(x(i, 0));
    }
    gp::FitReport report;
    const gp::GpModel model = gp::fit(x, t, gp::FitOptions{}, 0, &report);
    Matrix xq(n - 1, 1);
    Vector truth(n - 1);
    for (Index i = 0; i + 1 < n; ++i) {
        xq(i, 0) = 0.5 * (x(i, 0) + x(i + 1, 0));
        truth[i] = std::sin(xq(i, 0));
    }
    const double mse = (gp::predict_mean(model, xq) - truth).squaredNorm() / static_cast<double>(n - 1);
    const double fit_seconds = seconds_since(start);
    c.expect(mse < 1e-3, "sine held-out mse " + fmt(mse));
    c.expect(fit_seconds < 10.0, "sine fit took " + fmt(fit_seconds) + " s");
    c.expect(report.final_mll >= report.initial_mll, "sine fit lowered the MLL");

    Prng rng(77);
    for (int trial = 0; trial < 10; ++trial) {
        // The mean residual at a training point is jitter * (K + jitter I)^-1 t, so the 1e-6 (1 + |t|) bound
        // needs lambda_min(K) near sigma^2 >= 1: points about two units apart, l <= 0.7, sigma^2 >= 1.5.
        const Index l = 1 + static_cast<Index>(rng.below(2));
        const Index side = l == 1 ? 8 : 3;
        const Index m = l == 1 ? side : side * side;
        Matrix pts(m, l);
        for (Index i = 0; i < m; ++i) {
            pts(i, 0) = 2.0 * static_cast<double>(i % side) + rng.uniform(-0.2, 0.2);
            if (l == 2) pts(i, 1) = 2.0 * static_cast<double>(i / side) + rng.uniform(-0.2, 0.2);
        }
        const Vector targets = test::random_matrix(rng, m, 1, -3.0, 3.0).col(0);
        gp::RbfHyperparams h;
        h.log_signal_variance = std::log(rng.uniform(1.5, 3.0));
        h.log_lengthscales = Vector::Constant(l, std::log(rng.uniform(0.4, 0.7)));
        h.log_noise_variance = std::log(1e-300);
        const double jitter = 1e-6;
        const auto p = gp::predict(gp::GpModel(h, pts, targets, jitter), pts);
        for (Index i = 0; i < m; ++i) {
            c.expect(std::abs(p.mean[i] - targets[i]) <= 1e-6 * (1.0 + std::abs(targets[i])),
                     "interpolation trial " + std::to_string(trial) + " mean off by " + fmt(p.mean[i] - targets[i]));
            c.expect(p.variance[i] <= jitter * 10.0, "interpolation trial " + std::to_string(trial) + " variance " +
                                                         fmt(p.variance[i]));
        }

        gp::RbfHyperparams hp;
        hp.log_signal_variance = rng.uniform(-1.0, 1.0);
        hp.log_lengthscales = test::random_matrix(rng, l, 1, -1.0, 0.5).col(0);
        hp.log_noise_variance = rng.uniform(-5.0, -1.0);
        const Matrix near = test::random_matrix(rng, 6, l, 0.0, 1.0);
        const gp::GpModel prior_model(hp, near, test::random_matrix(rng, 6, 1, -2.0, 2.0).col(0));
        const auto far = gp::predict(prior_model, Matrix::Constant(1, l, 1e3));
        const double prior_var = std::exp(hp.log_signal_variance) + std::exp(hp.log_noise_variance);
        c.expect(std::abs(far.mean[0]) <= 1e-6, "prior trial " + std::to_string(trial) + " mean " + fmt(far.mean[0]));
        c.expect(std::abs(far.variance[0] - prior_var) <= 1e-6 * prior_var,
                 "prior trial " + std::to_string(trial) + " variance " + fmt(far.variance[0]));
    }
    return c.outcome("sine held-out mse " + fmt(mse) + " in " + fmt(fit_seconds) +
                     " s; interpolation and prior recovery on 10 datasets");
}

// 3. PCA suite.
Outcome pca_suite() {
    Checks c;
    Prng rng(303);
    double worst_orth = 0.0, worst_idem = 0.0, worst_full = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
        const Index m = trial == 0 ? 50 : 5 + static_cast<Index>(rng.below(46));
        const Index d = trial == 0 ? 200 : 2 + static_cast<Index>(rng.below(199));
        const Matrix data = test::random_matrix(rng, m, d, -3.0, 3.0);
        const Index full = std::min(m, d);
        std::vector<Index> ranks;
        for (Index r = 1; r <= full; r += std::max<Index>(1, full / 8)) ranks.push_back(r);
        if (ranks.back() != full) ranks.push_back(full);
        double prev = std::numeric_limits<double>::infinity();
        for (const Index r : ranks) {
            const pca::PcaBasis b = pca::fit_pca(data, r);
            const double orth = test::max_abs(b.basis.transpose() * b.basis - Matrix::Identity(r, r));
            const Matrix once = pca::reconstruct(b, pca::project(b, data));
            const Matrix twice = pca::reconstruct(b, pca::project(b, once));
            const double idem = test::max_abs(twice - once);
            const double err = (once - data).squaredNorm() / static_cast<double>(data.size());
            worst_orth = std::max(worst_orth, orth);
            worst_idem = std::max(worst_idem, idem);
            const std::string where = std::to_string(m) + "x" + std::to_string(d) + " r=" + std::to_string(r);
            c.expect(orth <= 1e-10, where + " orthonormality " + fmt(orth));
            c.expect(idem <= 1e-10, where + " idempotence " + fmt(idem));
            c.expect(err <= prev + 1e-12, where + " reconstruction error rose");
            prev = err;
            if (r == full) {
                const double exact = test::max_abs(once - data);
                worst_full = std::max(worst_full, exact);
                c.expect(exact <= 1e-8, where + " full-rank error " + fmt(exact));
            }
        }
    }
    return c.outcome("orthonormality " + fmt(worst_orth) + ", idempotence " + fmt(worst_idem) + ", full rank " +
                     fmt(worst_full) + " on 10 matrices up to 50x200");
}

// 4. Bypass equivalence.
Outcome bypass_equivalence() {
    Checks c;
    const json cfg_json = read_config("acceptance_bypass.json");
    TrainConfig cfg = config_from_json(cfg_json.at("training"));
    cfg.identity_bypass = true;
    const Index rank = cfg_json.at("rank").get<Index>();
    double worst = 0.0;
    for (const std::string gen : {"front", "bump"}) {
        for (const std::uint64_t seed : {0, 1, 2}) {
            const FieldDataset data = datagen::generate_dataset({gen, {16, 16}, 60, 10 + seed});
            const auto [train, test] = split(data, 40, seed);
            const Matrix e = predict_elmc(train_elmc(train, rank, cfg, seed), test.inputs);
            const Matrix l = predict_lmc(train_lmc(train, rank, cfg, seed), test.inputs);
            const double diff = test::max_abs(e - l);
            worst = std::max(worst, diff);
            c.expect(diff <= 1e-8, gen + " seed " + std::to_string(seed) + " max diff " + fmt(diff));
        }
    }
    return c.outcome("max |E-LMC(identity) - LMC| = " + fmt(worst) + " on front and bump, 3 seeds");
}

struct Comparison {
    double elmc = 0.0;
    double lmc = 0.0;
    std::string per_seed;
};

Comparison compare_methods(const json& cfg_json) {
    const TrainConfig cfg = config_from_json(cfg_json.at("training"));
    const auto& g = cfg_json.at("generator");
    const datagen::GeneratorSpec spec{g.at("name").get<std::string>(),
                                      {g.at("grid").at(0).get<std::size_t>(), g.at("grid").at(1).get<std::size_t>()},
                                      g.at("n").get<std::size_t>(), g.at("seed").get<std::uint64_t>()};
    const FieldDataset data = datagen::generate_dataset(spec);
    const auto n_train = cfg_json.at("n_train").get<std::size_t>();
    const auto rank = cfg_json.at("rank").get<Index>();
    std::vector<double> e, l;
    Comparison out;
    for (const auto seed : cfg_json.at("seeds").get<std::vector<std::uint64_t>>()) {
        const auto [train, test] = split(data, n_train, seed);
        e.push_back(evaluate_mse(predict_elmc(train_elmc(train, rank, cfg, seed), test.inputs), test.fields));
        l.push_back(evaluate_mse(predict_lmc(train_lmc(train, rank, cfg, seed), test.inputs), test.fields));
        out.per_seed += (out.per_seed.empty() ? "" : ", ") + fmt(e.back() / l.back());
    }
    out.elmc = mean_of(e);
    out.lmc = mean_of(l);
    return out;
}

// 5. Nonlinearity advantage on the front generator.
Outcome nonlinearity_advantage() {
    Checks c;
    const auto start = std::chrono::steady_clock::now();
    const Comparison r = compare_methods(read_config("acceptance_front.json"));
    const double ratio = r.elmc / r.lmc;
    c.expect(ratio <= 0.8, "E-LMC/LMC = " + fmt(ratio) + " > 0.8");
    return c.outcome("mean MSE E-LMC " + fmt(r.elmc) + " vs LMC " + fmt(r.lmc) + ", ratio " + fmt(ratio) +
                     " (per seed " + r.per_seed + "), " + fmt(seconds_since(start)) + " s");
}

// 6. Linear control.
Outcome linear_control() {
    Checks c;
    const Comparison r = compare_methods(read_config("acceptance_linear.json"));
    c.expect(r.lmc < 1e-3, "LMC mse " + fmt(r.lmc) + " >= 1e-3");
    c.expect(r.elmc <= 2.0 * r.lmc, "E-LMC mse " + fmt(r.elmc) + " > 2 x LMC");
    return c.outcome("LMC " + fmt(r.lmc) + ", E-LMC " + fmt(r.elmc) + " (ratio " + fmt(r.elmc / r.lmc) + ")");
}

/// Mean MSE of the aggregate rows keyed by (rank, train_size) for one method.
std::map<std::pair<std::size_t, std::size_t>, double> aggregate_means(const std::vector<bench::CellResult>& rows,
                                                                      const std::string& method) {
    std::map<std::pair<std::size_t, std::size_t>, double> out;
    for (const auto& r : rows) {
        if (r.method == method && r.seed == "mean") out[{r.rank, r.train_size}] = r.mse;
    }
    return out;
}

std::size_t failed_cells(const std::vector<bench::CellResult>& rows) {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.seed != "mean" && r.seed != "std" && r.status != "ok";
    return n;
}

// 7. Rank sweep.
Outcome rank_sweep() {
    Checks c;
    const auto cfg = bench::config_from_json(read_config("bench_rank_sweep.json"));
    const FieldDataset data = bench::resolve_dataset(cfg);
    const auto rows = bench::run_bench(cfg, data);
    c.expect(failed_cells(rows) == 0, std::to_string(failed_cells(rows)) + " failed cells");
    const std::size_t n_train = cfg.train_sizes.front();
    auto means = aggregate_means(rows, "elmc");
    std::vector<double> baseline;
    for (const auto seed : cfg.seeds) {
        const auto [train, test] = split(data, n_train, seed);
        baseline.push_back(constant_mean_mse(train, test));
    }
    const double base = mean_of(baseline);
    const double r1 = means[{1, n_train}];
    const double r10 = means[{10, n_train}];
    c.expect(std::isfinite(r1), "rank 1 mse not finite");
    c.expect(r1 < base, "rank 1 mse " + fmt(r1) + " >= constant-mean " + fmt(base));
    c.expect(r10 <= r1, "rank 10 mse " + fmt(r10) + " > rank 1 " + fmt(r1));
    std::string sweep;
    for (const auto r : cfg.ranks) sweep += (sweep.empty() ? "" : ", ") + std::to_string(r) + ":" + fmt(means[{r, n_train}]);
    return c.outcome("E-LMC mean MSE by rank {" + sweep + "}, constant-mean " + fmt(base));
}

// 8. Training-size trend.
Outcome training_size_trend() {
    Checks c;
    const auto cfg = bench::config_from_json(read_config("bench_train_sizes.json"));
    const auto rows = bench::run_bench(cfg, bench::resolve_dataset(cfg));
    c.expect(failed_cells(rows) == 0, std::to_string(failed_cells(rows)) + " failed cells");
    const std::size_t rank = cfg.ranks.front();
    std::string trend;
    for (const auto& method : cfg.methods) {
        auto means = aggregate_means(rows, method);
        trend += (trend.empty() ? "" : "; ") + method + " {";
        double prev = std::numeric_limits<double>::infinity();
        for (const auto n : cfg.train_sizes) {
            const double v = means[{rank, n}];
            c.expect(v <= prev, method + " mse rose to " + fmt(v) + " at " + std::to_string(n) + " samples");
            prev = v;
            trend += (n == cfg.train_sizes.front() ? "" : ", ") + std::to_string(n) + ":" + fmt(v);
        }
        trend += "}";
    }
    return c.outcome("mean MSE by train size at rank " + std::to_string(rank) + ": " + trend);
}

// 9. Reproducibility.
Outcome reproducibility() {
    Checks c;
    const json j = read_config("bench_smoke.json");
    const auto run_once = [&] {
        const auto cfg = bench::config_from_json(j);
        return bench::results_csv(bench::run_bench(cfg, bench::resolve_dataset(cfg)));
    };
    const std::string first = run_once();
    const std::string second = run_once();
    c.expect(first == second, "bench CSV differs between runs");

    const auto cfg = bench::config_from_json(j);
    c.expect(!cfg.timing, "bench_smoke.json must set timing to false");
    test::TempDir dir("acceptance");
    const auto [train, test] = split(bench::resolve_dataset(cfg), cfg.train_sizes.front(), 0);
    std::size_t checked = 0;
    for (const std::string method : {"elmc", "lmc", "mlp"}) {
        AnyModel model;
        if (method == "elmc") model = train_elmc(train, 2, cfg.training, 0);
        else if (method == "lmc") model = train_lmc(train, 2, cfg.training, 0);
        else model = train_mlp_baseline(train, cfg.training, 0);
        const auto path = dir / (method + ".json");
        save_model(model, path);
        const Matrix before = predict(model, test.inputs);
        const Matrix after = predict(load_model(path), test.inputs);
        c.expect(before == after, method + " predictions changed after save/load");
        ++checked;
    }
    return c.outcome("bench CSV byte-identical across reruns (" + std::to_string(first.size()) +
                     " bytes); save/load bit-exact for " + std::to_string(checked) + " model kinds");
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient oracles", gradient_oracles},
        {2, "GP sanity", gp_sanity},
        {3, "PCA suite", pca_suite},
        {4, "bypass equivalence", bypass_equivalence},
        {5, "nonlinearity advantage", nonlinearity_advantage},
        {6, "linear control", linear_control},
        {7, "rank sweep", rank_sweep},
        {8, "training-size trend", training_size_trend},
        {9, "reproducibility", reproducibility},
    };
    // Optional arguments select criteria by number.
    std::vector<int> only;
    for (int i = 1; i < argc; ++i) only.push_back(std::stoi(argv[i]));

    int failed = 0;
    for (const auto& crit : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), crit.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = crit.run();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += o.pass ? 0 : 1;
        std::printf("%s criterion %d (%s): %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", crit.id, crit.name,
                    o.detail.c_str(), seconds_since(start));
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
