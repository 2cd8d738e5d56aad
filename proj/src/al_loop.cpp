#include "dfal/al_loop.hpp"

#include <chrono>

namespace dfal {

void ExperimentConfig::validate() const
{
    if (rounds < 0)
        throw std::invalid_argument("rounds must be >= 0");
    if (batch_size < 1)
        throw std::invalid_argument("batch_size must be >= 1");
    if (initial_size < 1)
        throw std::invalid_argument("initial_size must be >= 1");
    if (seeds.empty())
        throw std::invalid_argument("seeds must not be empty");
    if (train.learning_rate <= 0.0 && lr_grid.empty())
        throw std::invalid_argument("learning-rate sweep requested with an empty grid");
    TrainConfig probe = train;
    probe.learning_rate = std::max(0.0, probe.learning_rate);
    probe.validate();
}

std::uint64_t pool_seed(std::uint64_t experiment_seed) { return derive_seed(experiment_seed, "pool"); }
std::uint64_t model_seed(std::uint64_t experiment_seed, int round)
{
    return derive_seed(experiment_seed, "model-init", static_cast<std::uint64_t>(round));
}
std::uint64_t shuffle_seed(std::uint64_t experiment_seed, int round)
{
    return derive_seed(experiment_seed, "train-shuffle", static_cast<std::uint64_t>(round));
}
std::uint64_t acquisition_seed(std::uint64_t experiment_seed, int round)
{
    return derive_seed(experiment_seed, "acquire", static_cast<std::uint64_t>(round));
}

PreparedData prepare_data(const Dataset& dataset, const ExperimentConfig& cfg)
{
    dataset.validate();
    PreparedData out{dataset, split(dataset, cfg.split), std::nullopt};
    if (cfg.standardize) {
        IndexList fit_rows = out.split.train;
        fit_rows.insert(fit_rows.end(), out.split.validation.begin(), out.split.validation.end());
        out.scaler = Standardizer::fit(dataset.features, fit_rows);
        out.data.features = out.scaler->transform(dataset.features);
    }
    if (out.split.test.empty())
        throw std::invalid_argument("test split is empty");
    if (static_cast<Index>(out.split.train.size()) < cfg.initial_size)
        throw std::invalid_argument("training split (" + std::to_string(out.split.train.size()) +
                                    ") is smaller than initial_size (" + std::to_string(cfg.initial_size) + ")");
    return out;
}

namespace {

ArchSpec resolve_arch(const ExperimentConfig& cfg, const Dataset& data)
{
    ArchSpec arch = cfg.arch;
    arch.input_dim = data.n_features();
    arch.n_classes = data.n_classes;
    return arch;
}

} // namespace

double select_learning_rate(const PreparedData& prepared, const ExperimentConfig& cfg)
{
    if (cfg.train.learning_rate > 0.0)
        return cfg.train.learning_rate;
    if (prepared.split.validation.empty())
        throw std::invalid_argument("learning-rate sweep needs a validation split");
    const ArchSpec arch = resolve_arch(cfg, prepared.data);
    const std::uint64_t sweep_seed = derive_seed(cfg.split.seed, "lr-sweep");

    std::vector<double> grid = cfg.lr_grid;
    std::sort(grid.begin(), grid.end());
    double best_rate = grid.front();
    double best_acc = -1.0;
    for (double lr : grid) {
        TrainConfig tc = cfg.train;
        tc.learning_rate = lr;
        tc.seed = derive_seed(sweep_seed, "shuffle");
        double acc = 0.0;
        try {
            const ModelState model = train(init_model(arch, derive_seed(sweep_seed, "init")), prepared.data,
                                           prepared.split.train, tc);
            acc = evaluate_accuracy(model, prepared.data, prepared.split.validation);
        } catch (const TrainingDiverged&) {
            continue;
        }
        if (acc > best_acc) {
            best_acc = acc;
            best_rate = lr;
        }
    }
    return best_rate;
}

SeedRun run_seed(const PreparedData& prepared, const ExperimentConfig& cfg, double learning_rate,
                 std::uint64_t seed, const LoopHooks& hooks)
{
    if (!(learning_rate > 0.0))
        throw std::invalid_argument("run_seed: learning rate must be positive");
    std::function<double()> clock = hooks.clock;
    if (!clock)
        clock = [] {
            return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
        };
    auto notify = [&](LoopEvent e, int round) {
        if (hooks.observer)
            hooks.observer(e, round);
    };

    const Dataset& data = prepared.data;
    const ArchSpec arch = resolve_arch(cfg, data);

    SeedRun run;
    run.seed = seed;
    PoolState pool = init_pool(prepared.split.train, cfg.initial_size, pool_seed(seed));
    run.initial_labeled = pool.labeled;

    for (int t = 0; t <= cfg.rounds; ++t) {
        TrainConfig tc = cfg.train;
        tc.learning_rate = learning_rate;
        tc.seed = shuffle_seed(seed, t);

        notify(LoopEvent::train_begin, t);
        ModelState model;
        try {
            model = train(init_model(arch, model_seed(seed, t)), data, pool.labeled, tc);
        } catch (const TrainingDiverged& e) {
            run.error = "seed " + std::to_string(seed) + ", round " + std::to_string(t) + ": " + e.what();
            return run;
        }
        notify(LoopEvent::train_end, t);

        RoundRecord record;
        record.round = t;
        record.labeled_size = static_cast<Index>(pool.labeled.size());
        record.test_accuracy = evaluate_accuracy(model, data, prepared.split.test);
        notify(LoopEvent::evaluate, t);

        if (t < cfg.rounds) {
            if (pool.unlabeled.empty()) {
                run.truncated = true;
                run.rounds.push_back(std::move(record));
                break;
            }
            // Only labeled-set labels cross this boundary.
            const AcquisitionContext ctx = make_context(model, data, pool, cfg.scope);
            Rng rng(acquisition_seed(seed, t));
            notify(LoopEvent::acquire_begin, t);
            const double start = clock();
            record.batch = select(cfg.method, ctx, cfg.batch_size, rng);
            record.acquisition_seconds = clock() - start;
            notify(LoopEvent::acquire_end, t);
            record.batch.round = t;
            pool.acquire(record.batch.indices); // oracle: labels of the batch become visible
        }
        run.rounds.push_back(std::move(record));
    }
    return run;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Dataset& dataset, const LoopHooks& hooks)
{
    cfg.validate();
    const PreparedData prepared = prepare_data(dataset, cfg);
    ExperimentResult result;
    result.method = cfg.method;
    result.learning_rate = select_learning_rate(prepared, cfg);
    for (std::uint64_t seed : cfg.seeds)
        result.runs.push_back(run_seed(prepared, cfg, result.learning_rate, seed, hooks));
    return result;
}

} // namespace dfal
