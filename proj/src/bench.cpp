#include "elmc/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <thread>

#include "elmc/config_json.hpp"
#include "elmc/error.hpp"
#include "elmc/text_io.hpp"

namespace elmc::bench {

using nlohmann::json;

void BenchConfig::validate() const {
    if (!dataset && !generator) throw ValidationError("bench: need a dataset path or a generator spec");
    if (methods.empty() || ranks.empty() || train_sizes.empty() || seeds.empty()) {
        throw ValidationError("bench: methods, ranks, train_sizes and seeds must be non-empty");
    }
    for (const auto& m : methods) {
        if (m != "elmc" && m != "lmc" && m != "mlp") throw ValidationError("bench: unknown method '" + m + "'");
    }
    const std::size_t min_size = *std::min_element(train_sizes.begin(), train_sizes.end());
    for (const auto r : ranks) {
        if (r < 1 || r > min_size) {
            throw ValidationError("bench: rank " + std::to_string(r) + " must lie in [1, min train size " +
                                  std::to_string(min_size) + "]");
        }
    }
    if (threads < 1) throw ValidationError("bench: threads must be >= 1");
}

BenchConfig config_from_json(const json& j) {
    BenchConfig cfg;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "dataset") cfg.dataset = value.get<std::string>();
            else if (key == "generator") {
                datagen::GeneratorSpec g;
                g.name = value.value("name", g.name);
                if (value.contains("grid")) g.grid = {value["grid"].at(0).get<std::size_t>(), value["grid"].at(1).get<std::size_t>()};
                g.n_samples = value.value("n", g.n_samples);
                g.seed = value.value("seed", g.seed);
                cfg.generator = g;
            }
            else if (key == "methods") cfg.methods = value.get<std::vector<std::string>>();
            else if (key == "ranks") cfg.ranks = value.get<std::vector<std::size_t>>();
            else if (key == "train_sizes") cfg.train_sizes = value.get<std::vector<std::size_t>>();
            else if (key == "seeds") cfg.seeds = value.get<std::vector<std::uint64_t>>();
            else if (key == "training") cfg.training = elmc::config_from_json(value);
            else if (key == "threads") cfg.threads = value.get<std::size_t>();
            else if (key == "timing") cfg.timing = value.get<bool>();
            else if (key == "description" || key == "out") continue;
            else throw ValidationError("bench config: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("bench config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

FieldDataset resolve_dataset(const BenchConfig& cfg) {
    if (cfg.dataset) return load_dataset(*cfg.dataset);
    return datagen::generate_dataset(*cfg.generator);
}

namespace {

std::string sanitize(std::string s) {
    std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\n' || c == '\r' || c == '"'; }, ';');
    return s;
}

}  // namespace

CellResult run_cell(const FieldDataset& data, const std::string& method, std::size_t rank, std::size_t train_size,
                    std::uint64_t seed, const TrainConfig& cfg, bool timing) {
    CellResult cell{method, rank, train_size, std::to_string(seed), std::numeric_limits<double>::quiet_NaN(), "ok", 0.0};
    const auto start = std::chrono::steady_clock::now();
    try {
        const auto [train, test] = split(data, train_size, seed);
        const auto r = static_cast<Index>(rank);
        AnyModel model;
        if (method == "elmc") model = train_elmc(train, r, cfg, seed);
        else if (method == "lmc") model = train_lmc(train, r, cfg, seed);
        else if (method == "mlp") model = train_mlp_baseline(train, cfg, seed);
        else throw ValidationError("unknown method '" + method + "'");
        cell.mse = evaluate_mse(predict(model, test.inputs), test.fields);
        if (!std::isfinite(cell.mse)) cell.status = "error: non-finite mse";
    } catch (const std::exception& e) {
        cell.status = sanitize(std::string("error: ") + e.what());
    }
    if (timing) {
        cell.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return cell;
}

std::vector<CellResult> run_bench(const BenchConfig& cfg, const FieldDataset& data) {
    cfg.validate();
    struct Job {
        std::string method;
        std::size_t rank;
        std::size_t size;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (const auto& method : cfg.methods) {
        // The MLP baseline has no rank; it runs once per (size, seed) with rank recorded as 0.
        const std::vector<std::size_t> ranks = method == "mlp" ? std::vector<std::size_t>{0} : cfg.ranks;
        for (const auto rank : ranks) {
            for (const auto size : cfg.train_sizes) {
                for (const auto seed : cfg.seeds) jobs.push_back({method, rank, size, seed});
            }
        }
    }

    std::vector<CellResult> cells(jobs.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t k = next++; k < jobs.size(); k = next++) {
            const auto& job = jobs[k];
            cells[k] = run_cell(data, job.method, job.rank, job.size, job.seed, cfg.training, cfg.timing);
        }
    };
    const std::size_t n_threads = std::min(cfg.threads, std::max<std::size_t>(jobs.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    std::vector<CellResult> rows;
    const std::size_t group = cfg.seeds.size();
    for (std::size_t g = 0; g < cells.size(); g += group) {
        std::vector<double> mses;
        std::vector<double> times;
        for (std::size_t k = g; k < g + group; ++k) {
            rows.push_back(cells[k]);
            if (cells[k].status == "ok") mses.push_back(cells[k].mse);
            times.push_back(cells[k].wall_seconds);
        }
        const auto mean_of = [](const std::vector<double>& v) {
            double s = 0.0;
            for (const double x : v) s += x;
            return v.empty() ? std::numeric_limits<double>::quiet_NaN() : s / static_cast<double>(v.size());
        };
        const auto std_of = [&](const std::vector<double>& v) {
            if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
            if (v.size() == 1) return 0.0;
            const double mu = mean_of(v);
            double s = 0.0;
            for (const double x : v) s += (x - mu) * (x - mu);
            return std::sqrt(s / static_cast<double>(v.size() - 1));
        };
        std::string status = "ok";
        if (mses.empty()) status = "failed";
        else if (mses.size() < group) status = "partial " + std::to_string(mses.size()) + "/" + std::to_string(group);

        CellResult mean_row = cells[g];
        mean_row.seed = "mean";
        mean_row.mse = mean_of(mses);
        mean_row.status = status;
        mean_row.wall_seconds = mean_of(times);
        CellResult std_row = mean_row;
        std_row.seed = "std";
        std_row.mse = std_of(mses);
        std_row.wall_seconds = std_of(times);
        rows.push_back(mean_row);
        rows.push_back(std_row);
    }
    return rows;
}

std::string results_csv(const std::vector<CellResult>& rows) {
    std::string out = "method,rank,train_size,seed,mse,status,wall_seconds\n";
    for (const auto& r : rows) {
        out += r.method + "," + std::to_string(r.rank) + "," + std::to_string(r.train_size) + "," + r.seed + "," +
               format_real(r.mse) + "," + r.status + "," + format_real(r.wall_seconds) + "\n";
    }
    return out;
}

}  // namespace elmc::bench
