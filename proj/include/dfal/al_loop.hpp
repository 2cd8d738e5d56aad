#pragma once

#include "dfal/acquisition.hpp"
#include "dfal/data.hpp"
#include "dfal/model.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dfal {

struct ExperimentConfig {
    std::string name = "experiment";
    SplitSpec split{0.2, 0.1, 0, true};
    bool standardize = true;
    /// input_dim and n_classes are taken from the dataset.
    ArchSpec arch;
    /// learning_rate <= 0 requests a one-time validation sweep over lr_grid.
    TrainConfig train;
    std::vector<double> lr_grid{0.0001, 0.0005, 0.001, 0.005, 0.01};
    Method method = Method::grad;
    Index batch_size = 100;
    int rounds = 10;
    Index initial_size = 100;
    std::vector<std::uint64_t> seeds{0};
    EmbeddingScope scope = EmbeddingScope::last_layer;

    void validate() const;
};

struct RoundRecord {
    int round = 0;
    Index labeled_size = 0;
    double test_accuracy = 0.0;
    double acquisition_seconds = 0.0;
    AcquisitionBatch batch; // empty on the final round
};

struct SeedRun {
    std::uint64_t seed = 0;
    IndexList initial_labeled;
    std::vector<RoundRecord> rounds;
    bool truncated = false; // pool ran out before the schedule finished
    std::optional<std::string> error;
};

struct ExperimentResult {
    Method method = Method::grad;
    double learning_rate = 0.0;
    std::vector<SeedRun> runs;
};

/// Split and (optionally) standardized copy of the dataset shared by every
/// method and seed of one experiment.
struct PreparedData {
    Dataset data;
    Split split;
    std::optional<Standardizer> scaler;
};

PreparedData prepare_data(const Dataset& dataset, const ExperimentConfig& cfg);

/// Trains on the training split for each rate in cfg.lr_grid and returns the
/// one with the best validation accuracy (ties to the smaller rate). Returns
/// cfg.train.learning_rate unchanged when it is positive.
double select_learning_rate(const PreparedData& prepared, const ExperimentConfig& cfg);

enum class LoopEvent { train_begin, train_end, evaluate, acquire_begin, acquire_end };

struct LoopHooks {
    /// Monotonic seconds; defaults to std::chrono::steady_clock.
    std::function<double()> clock;
    std::function<void(LoopEvent, int round)> observer;
};

/// One seed of the active-learning loop: for t = 0..rounds, retrain from
/// scratch on the labeled set, record test accuracy, and (for t < rounds)
/// acquire a batch and move it into the labeled set. `learning_rate` must
/// be positive.
SeedRun run_seed(const PreparedData& prepared, const ExperimentConfig& cfg, double learning_rate,
                 std::uint64_t seed, const LoopHooks& hooks = {});

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& dataset, const LoopHooks& hooks = {});

/// Per-round seed streams. Split and pool streams never depend on the method.
std::uint64_t pool_seed(std::uint64_t experiment_seed);
std::uint64_t model_seed(std::uint64_t experiment_seed, int round);
std::uint64_t shuffle_seed(std::uint64_t experiment_seed, int round);
std::uint64_t acquisition_seed(std::uint64_t experiment_seed, int round);

} // namespace dfal
