#include "dfal/contraction.hpp"

#include <algorithm>
#include <numeric>

namespace dfal {

void ContractionConfig::validate() const
{
    if (s_size < 2)
        throw std::invalid_argument("contraction: S size must be >= 2");
    if (!(subset_fraction > 0.0 && subset_fraction < 1.0))
        throw std::invalid_argument("contraction: subset_fraction must be in (0, 1)");
    if (epochs < 1)
        throw std::invalid_argument("contraction: epochs must be >= 1");
    if (!(learning_rate >= 0.0))
        throw std::invalid_argument("contraction: learning_rate must be non-negative");
    if (!(momentum >= 0.0 && momentum < 1.0))
        throw std::invalid_argument("contraction: momentum must be in [0, 1)");
    if (minibatch_size < 0)
        throw std::invalid_argument("contraction: minibatch_size must be >= 0");
}

std::optional<int> estimate_t0(const std::vector<double>& df, double tol)
{
    const auto n = static_cast<int>(df.size());
    if (n < 2)
        return std::nullopt;
    if (df[n - 1] > df[n - 2] * (1.0 + tol))
        return std::nullopt;
    int t0 = n - 2;
    while (t0 > 0 && df[t0] <= df[t0 - 1] * (1.0 + tol))
        --t0;
    return t0;
}

std::optional<double> estimate_rate(const std::vector<double>& df, int t0)
{
    double rho = 0.0;
    for (std::size_t u = static_cast<std::size_t>(t0); u + 1 < df.size(); ++u) {
        if (!(df[u] > 0.0))
            return std::nullopt;
        rho = std::max(rho, df[u + 1] / df[u]);
    }
    return rho;
}

double df_norm(const ModelState& model, const Dataset& dataset, const IndexList& s, const IndexList& subset,
               EmbeddingScope scope)
{
    const Vector diff = loss_gradient(model, dataset, s) - loss_gradient(model, dataset, subset);
    if (scope == EmbeddingScope::full)
        return l2_norm(diff);
    return l2_norm(diff.tail(embedding_size(model.arch, scope)));
}

ContractionReport run_contraction_trace(const ContractionConfig& cfg, const Dataset& dataset)
{
    cfg.validate();
    if (cfg.s_size > dataset.size())
        throw std::invalid_argument("contraction: S size " + std::to_string(cfg.s_size) + " exceeds dataset size " +
                                    std::to_string(dataset.size()));
    IndexList all(static_cast<std::size_t>(dataset.size()));
    std::iota(all.begin(), all.end(), Index{0});
    Rng rng(cfg.seed, "contraction-sample");
    rng.shuffle(all);
    IndexList s(all.begin(), all.begin() + cfg.s_size);
    std::sort(s.begin(), s.end());

    const auto m = std::clamp<Index>(
        static_cast<Index>(std::llround(cfg.subset_fraction * static_cast<double>(cfg.s_size))), 1, cfg.s_size - 1);
    IndexList shuffled = s;
    rng.shuffle(shuffled);
    IndexList subset(shuffled.begin(), shuffled.begin() + m);
    std::sort(subset.begin(), subset.end());
    return run_contraction_trace(cfg, dataset, s, subset);
}

ContractionReport run_contraction_trace(const ContractionConfig& cfg, const Dataset& dataset, const IndexList& s,
                                        const IndexList& subset)
{
    cfg.validate();
    if (s.empty() || subset.empty())
        throw std::invalid_argument("contraction: S and S_J must be nonempty");

    Dataset data = dataset;
    if (cfg.standardize)
        data.features = Standardizer::fit(dataset.features, s).transform(dataset.features);

    ArchSpec arch;
    arch.input_dim = data.n_features();
    arch.n_classes = data.n_classes;
    arch.hidden_widths = cfg.hidden_widths;

    ContractionReport report;
    report.s_indices = s;
    report.subset_indices = subset;
    report.df_norms.reserve(static_cast<std::size_t>(cfg.epochs));

    TrainConfig tc;
    tc.learning_rate = cfg.learning_rate;
    tc.momentum = cfg.momentum;
    tc.epochs = cfg.epochs;
    tc.seed = derive_seed(cfg.seed, "contraction-shuffle");

    ModelState model = init_model(arch, derive_seed(cfg.seed, "contraction-init"));
    auto record = [&](const ModelState& current, int) {
        report.df_norms.push_back(df_norm(current, data, s, subset, cfg.scope));
    };
    if (cfg.minibatch_size == 0) {
        train_full_batch(std::move(model), data, s, tc, record);
    } else {
        tc.minibatch_size = cfg.minibatch_size;
        tc.epochs = 1;
        for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
            tc.seed = derive_seed(cfg.seed, "contraction-shuffle", static_cast<std::uint64_t>(epoch));
            try {
                model = train(std::move(model), data, s, tc);
            } catch (const TrainingDiverged&) {
                throw TrainingDiverged(epoch);
            }
            record(model, epoch);
        }
    }

    for (double v : report.df_norms)
        if (!std::isfinite(v))
            throw TrainingDiverged(static_cast<int>(report.df_norms.size()));

    report.t0_estimate = estimate_t0(report.df_norms);
    if (report.t0_estimate) {
        for (std::size_t u = static_cast<std::size_t>(*report.t0_estimate); u + 1 < report.df_norms.size(); ++u)
            if (report.df_norms[u + 1] > report.df_norms[u])
                ++report.violation_count_after_t0;
        report.rho_hat = estimate_rate(report.df_norms, *report.t0_estimate);
    }
    return report;
}

BoundCheck cumulative_df_bound_check(const std::vector<double>& df_norms, int t0)
{
    if (df_norms.empty())
        throw std::invalid_argument("cumulative_df_bound_check: empty trace");
    if (t0 < 0 || static_cast<std::size_t>(t0) >= df_norms.size())
        throw std::invalid_argument("cumulative_df_bound_check: t0 out of range");
    BoundCheck out;
    for (std::size_t t = static_cast<std::size_t>(t0); t < df_norms.size(); ++t)
        out.lhs += df_norms[t] * df_norms[t];
    const double base = df_norms[static_cast<std::size_t>(t0)];
    out.rhs = static_cast<double>(df_norms.size() - static_cast<std::size_t>(t0)) * base * base;
    return out;
}

} // namespace dfal
