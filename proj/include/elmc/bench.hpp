#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "elmc/datagen.hpp"
#include "elmc/model.hpp"

namespace elmc::bench {

/// One sweep over (method, rank, train_size, seed). The seed of a cell drives both the
/// train/test split and model training, so every cell can be reproduced on its own with
/// `elmc train --n-train N --seed S`.
struct BenchConfig {
    std::optional<std::string> dataset;                 // directory in field-data format
    std::optional<datagen::GeneratorSpec> generator;    // used when no dataset is given
    std::vector<std::string> methods{"elmc", "lmc"};
    std::vector<std::size_t> ranks{1, 2, 5, 10};
    std::vector<std::size_t> train_sizes{10, 50, 100};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    TrainConfig training;
    std::size_t threads = 1;
    bool timing = true;  // false writes wall_seconds as 0 so reruns are byte-identical

    void validate() const;
};

BenchConfig config_from_json(const nlohmann::json& j);

struct CellResult {
    std::string method;
    std::size_t rank = 0;  // 0 for the rank-free MLP baseline
    std::size_t train_size = 0;
    std::string seed;      // decimal seed, or "mean"/"std" on aggregate rows
    double mse = 0.0;
    std::string status = "ok";
    double wall_seconds = 0.0;
};

/// Trains and evaluates one cell; errors are captured in `status`.
CellResult run_cell(const FieldDataset& data, const std::string& method, std::size_t rank, std::size_t train_size,
                    std::uint64_t seed, const TrainConfig& cfg, bool timing);

/// All cell rows followed, per (method, rank, train_size) group, by mean and std rows.
std::vector<CellResult> run_bench(const BenchConfig& cfg, const FieldDataset& data);

/// Header `method,rank,train_size,seed,mse,status,wall_seconds` plus one line per row.
std::string results_csv(const std::vector<CellResult>& rows);

FieldDataset resolve_dataset(const BenchConfig& cfg);

}  // namespace elmc::bench

namespace elmc {

/// ASCII PGM (P2, maxval 255) of one field row scaled by its own min/max; constant rows are black.
std::string render_pgm(const Vector& field, GridShape grid);

}  // namespace elmc
