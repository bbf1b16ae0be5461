// elmc: dataset generation, training, prediction, evaluation, benchmark sweeps and rendering.
//
// Exit codes: 0 success, 2 usage or validation error, 1 runtime failure.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "elmc/bench.hpp"
#include "elmc/config_json.hpp"
#include "elmc/datagen.hpp"
#include "elmc/error.hpp"
#include "elmc/model.hpp"
#include "elmc/text_io.hpp"

namespace {

using namespace elmc;
using nlohmann::json;

struct GenArgs {
    std::string generator = "front";
    std::size_t n = 100;
    std::string grid = "32x32";
    std::uint64_t seed = 0;
    std::string out;
};

struct TrainArgs {
    std::string data;
    std::string method = "elmc";
    long rank = 10;
    std::uint64_t seed = 0;
    std::string out;
    std::string config;
    bool identity_bypass = false;
    std::optional<std::size_t> n_train;
    std::string test_out;
    std::optional<std::size_t> epochs, gp_iters, batch_size, gp_threads;
    std::optional<double> lr, gp_lr;
    std::optional<std::vector<std::size_t>> widths_disentangle, widths_reconstruct;
    bool no_normalize = false;
};

struct PredictArgs {
    std::string model;
    std::string inputs;
    std::string out;
    std::string variance_out;
};

struct EvalArgs {
    std::string pred;
    std::string truth;
};

struct BenchArgs {
    std::string config;
    std::string out;
    std::optional<std::size_t> threads;
    bool no_timing = false;
};

struct RenderArgs {
    std::string data;
    std::string fields;
    std::string grid;
    std::size_t row = 0;
    std::string out;
};

json read_json_file(const std::string& path) {
    try {
        return json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

int cmd_gen(const GenArgs& a) {
    datagen::GeneratorSpec spec{a.generator, datagen::parse_grid(a.grid), a.n, a.seed};
    const FieldDataset ds = datagen::generate_dataset(spec);
    save_dataset(ds, a.out);
    std::cout << "wrote " << ds.n_samples() << " samples of " << spec.name << " on " << spec.grid.height << "x"
              << spec.grid.width << " (seed " << spec.seed << ") to " << a.out << "\n";
    return 0;
}

TrainConfig train_config(const TrainArgs& a) {
    TrainConfig cfg;
    if (!a.config.empty()) {
        const json j = read_json_file(a.config);
        cfg = config_from_json(j.contains("training") ? j["training"] : j);
    }
    if (a.identity_bypass) cfg.identity_bypass = true;
    if (a.epochs) cfg.epochs = *a.epochs;
    if (a.gp_iters) cfg.gp_iters = *a.gp_iters;
    if (a.batch_size) cfg.batch_size = *a.batch_size;
    if (a.gp_threads) cfg.gp_threads = *a.gp_threads;
    if (a.lr) cfg.lr = *a.lr;
    if (a.gp_lr) cfg.gp_lr = *a.gp_lr;
    if (a.widths_disentangle) cfg.widths_disentangle = *a.widths_disentangle;
    if (a.widths_reconstruct) cfg.widths_reconstruct = *a.widths_reconstruct;
    if (a.no_normalize) cfg.normalize = false;
    return cfg;
}

int cmd_train(const TrainArgs& a) {
    if (a.method != "elmc" && a.method != "lmc" && a.method != "mlp") {
        throw ValidationError("--method must be elmc, lmc or mlp");
    }
    if (a.rank < 1) throw ValidationError("--rank must be at least 1");
    const TrainConfig cfg = train_config(a);
    FieldDataset train = load_dataset(a.data);
    if (a.n_train) {
        auto [tr, te] = split(train, *a.n_train, a.seed);
        if (!a.test_out.empty()) save_dataset(te, a.test_out);
        train = std::move(tr);
    }

    TrainReport report;
    AnyModel model;
    const auto rank = static_cast<Index>(a.rank);
    if (a.method == "elmc") model = train_elmc(train, rank, cfg, a.seed, &report);
    else if (a.method == "lmc") model = train_lmc(train, rank, cfg, a.seed, &report);
    else model = train_mlp_baseline(train, cfg, a.seed, &report);
    save_model(model, a.out);

    std::cout << "method " << a.method << ", " << train.n_samples() << " training samples";
    if (a.method != "mlp") std::cout << ", rank " << a.rank;
    std::cout << "\n";
    if (a.method != "lmc") {
        std::cout << "mlp_loss initial " << format_real(report.mlp_initial_loss) << " final "
                  << format_real(report.mlp_final_loss) << "\n";
    }
    for (std::size_t q = 0; q < report.gp_final_mll.size(); ++q) {
        std::cout << "gp " << q << " mll initial " << format_real(report.gp_initial_mll[q]) << " final "
                  << format_real(report.gp_final_mll[q]) << "\n";
    }
    std::cout << "wrote " << a.out << "\n";
    return 0;
}

int cmd_predict(const PredictArgs& a) {
    const AnyModel model = load_model(a.model);
    const Matrix xq = read_csv(a.inputs);
    write_csv(a.out, predict(model, xq));
    if (!a.variance_out.empty()) {
        const std::vector<gp::GpModel>* gps = nullptr;
        if (const auto* m = std::get_if<ElmcModel>(&model)) gps = &m->gps;
        if (const auto* m = std::get_if<LmcModel>(&model)) gps = &m->gps;
        if (!gps) throw ValidationError("--variance-out needs an elmc or lmc model");
        write_csv(a.variance_out, latent_variances(*gps, xq));
    }
    return 0;
}

int cmd_eval(const EvalArgs& a) {
    const Matrix pred = read_csv(a.pred);
    const Matrix truth = read_csv(a.truth);
    std::cout << format_real(evaluate_mse(pred, truth)) << "\n";
    return 0;
}

int cmd_bench(const BenchArgs& a) {
    const json j = read_json_file(a.config);
    bench::BenchConfig cfg = bench::config_from_json(j);
    if (a.threads) cfg.threads = *a.threads;
    if (a.no_timing) cfg.timing = false;
    std::string out = a.out;
    if (out.empty()) out = j.value("out", std::string());
    if (out.empty()) throw ValidationError("bench: no output path (--out or \"out\" in config)");

    const FieldDataset data = bench::resolve_dataset(cfg);
    const auto rows = bench::run_bench(cfg, data);
    if (const auto parent = std::filesystem::path(out).parent_path(); !parent.empty()) {
        std::filesystem::create_directories(parent);
    }
    write_text_file(out, bench::results_csv(rows));
    std::size_t failed = 0;
    for (const auto& r : rows) {
        if (r.seed != "mean" && r.seed != "std" && r.status != "ok") ++failed;
    }
    std::cout << "wrote " << rows.size() << " rows to " << out;
    if (failed) std::cout << " (" << failed << " failed cells)";
    std::cout << "\n";
    return 0;
}

int cmd_render(const RenderArgs& a) {
    Matrix fields;
    GridShape grid;
    if (!a.data.empty()) {
        const FieldDataset ds = load_dataset(a.data);
        fields = ds.fields;
        grid = ds.grid;
    } else {
        if (a.fields.empty() || a.grid.empty()) throw ValidationError("render: give --data or both --fields and --grid");
        grid = datagen::parse_grid(a.grid);
        fields = read_csv(a.fields, static_cast<Index>(grid.size()));
    }
    if (a.row >= static_cast<std::size_t>(fields.rows())) {
        throw ValidationError("render: row " + std::to_string(a.row) + " out of range (" +
                              std::to_string(fields.rows()) + " rows)");
    }
    write_text_file(a.out, render_pgm(fields.row(static_cast<Index>(a.row)).transpose(), grid));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"E-LMC spatial field surrogate toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* sub_gen = app.add_subcommand("gen", "Generate a synthetic field dataset");
    sub_gen->add_option("--generator", gen.generator, "front, bump or linear")->capture_default_str();
    sub_gen->add_option("--n", gen.n, "Number of samples")->capture_default_str();
    sub_gen->add_option("--grid", gen.grid, "Grid as HxW")->capture_default_str();
    sub_gen->add_option("--seed", gen.seed, "PRNG seed")->capture_default_str();
    sub_gen->add_option("--out", gen.out, "Output directory")->required();

    TrainArgs train;
    auto* sub_train = app.add_subcommand("train", "Train an elmc, lmc or mlp model");
    sub_train->add_option("--data", train.data, "Dataset directory")->required();
    sub_train->add_option("--method", train.method, "elmc, lmc or mlp")->capture_default_str();
    sub_train->add_option("--rank", train.rank, "Number of latent GPs")->capture_default_str();
    sub_train->add_option("--seed", train.seed, "Seed for split and training")->capture_default_str();
    sub_train->add_option("--out", train.out, "Model JSON path")->required();
    sub_train->add_option("--config", train.config, "Training config JSON (flags override it)");
    sub_train->add_flag("--identity-bypass", train.identity_bypass, "Use the identity MLP (E-LMC reduces to LMC)");
    sub_train->add_option("--n-train", train.n_train, "Train on a seeded split of this many samples");
    sub_train->add_option("--test-out", train.test_out, "Write the held-out split here (with --n-train)");
    sub_train->add_option("--epochs", train.epochs, "Autoencoder epochs");
    sub_train->add_option("--gp-iters", train.gp_iters, "Adam iterations per GP");
    sub_train->add_option("--batch-size", train.batch_size, "Autoencoder batch size");
    sub_train->add_option("--gp-threads", train.gp_threads, "Threads for fitting latent GPs");
    sub_train->add_option("--lr", train.lr, "Autoencoder learning rate");
    sub_train->add_option("--gp-lr", train.gp_lr, "GP learning rate");
    sub_train->add_option("--widths-disentangle", train.widths_disentangle, "Disentangle layer widths")->delimiter(',');
    sub_train->add_option("--widths-reconstruct", train.widths_reconstruct, "Reconstruct layer widths")->delimiter(',');
    sub_train->add_flag("--no-normalize", train.no_normalize, "Train on raw field values");

    PredictArgs pred;
    auto* sub_pred = app.add_subcommand("predict", "Predict fields for design inputs");
    sub_pred->add_option("--model", pred.model, "Model JSON")->required();
    sub_pred->add_option("--inputs", pred.inputs, "Inputs CSV (n x l)")->required();
    sub_pred->add_option("--out", pred.out, "Output CSV (n x d)")->required();
    sub_pred->add_option("--variance-out", pred.variance_out, "Also write latent GP variances (n x r)");

    EvalArgs ev;
    auto* sub_eval = app.add_subcommand("eval", "Print the MSE between two field CSVs");
    sub_eval->add_option("--pred", ev.pred, "Predicted fields CSV")->required();
    sub_eval->add_option("--truth", ev.truth, "True fields CSV")->required();

    BenchArgs bench_args;
    auto* sub_bench = app.add_subcommand("bench", "Run a method x rank x train-size x seed sweep");
    sub_bench->add_option("--config", bench_args.config, "Bench config JSON")->required();
    sub_bench->add_option("--out", bench_args.out, "Results CSV (overrides config \"out\")");
    sub_bench->add_option("--threads", bench_args.threads, "Concurrent cells");
    sub_bench->add_flag("--no-timing", bench_args.no_timing, "Write wall_seconds as 0");

    RenderArgs render;
    auto* sub_render = app.add_subcommand("render", "Render one field row as an ASCII PGM");
    sub_render->add_option("--data", render.data, "Dataset directory");
    sub_render->add_option("--fields", render.fields, "Fields CSV");
    sub_render->add_option("--grid", render.grid, "Grid as HxW (with --fields)");
    sub_render->add_option("--row", render.row, "Row index")->capture_default_str();
    sub_render->add_option("--out", render.out, "Output .pgm")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (*sub_gen) return cmd_gen(gen);
        if (*sub_train) return cmd_train(train);
        if (*sub_pred) return cmd_predict(pred);
        if (*sub_eval) return cmd_eval(ev);
        if (*sub_bench) return cmd_bench(bench_args);
        if (*sub_render) return cmd_render(render);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
