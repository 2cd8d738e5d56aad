#pragma once

#include "dfal/data.hpp"
#include "dfal/model.hpp"

#include <optional>
#include <vector>

namespace dfal {

struct ContractionConfig {
    Index s_size = 1000;
    double subset_fraction = 0.5;
    int epochs = 150;
    double learning_rate = 1e-4;
    double momentum = 0.0;
    /// 0 means full-batch gradient descent (one step per epoch).
    Index minibatch_size = 0;
    std::vector<Index> hidden_widths{512, 256};
    std::uint64_t seed = 0;
    EmbeddingScope scope = EmbeddingScope::full;
    bool standardize = true;

    void validate() const;
};

struct ContractionReport {
    std::vector<double> df_norms; // one entry per epoch, measured after the epoch's update
    std::optional<int> t0_estimate;
    int violation_count_after_t0 = 0; // strict increases tolerated after t0
    std::optional<double> rho_hat;
    IndexList s_indices;
    IndexList subset_indices;
};

constexpr double monotone_tolerance = 1e-6;

/// Smallest t such that df[u+1] <= df[u] (1 + tol) for every u >= t, with at
/// least one transition after t. None when the last transition increases.
std::optional<int> estimate_t0(const std::vector<double>& df, double tol = monotone_tolerance);

/// max_{u >= t0} df[u+1] / df[u]; none if some df[u] in range is zero.
std::optional<double> estimate_rate(const std::vector<double>& df, int t0);

/// ||grad f(theta; S) - grad f(theta; S_J)|| restricted to `scope`.
double df_norm(const ModelState& model, const Dataset& dataset, const IndexList& s, const IndexList& subset,
               EmbeddingScope scope);

/// Draws S (s_size points) and S_J (a random subset of S), trains from a
/// fresh model on S and records ||DF(S, S_J, t)|| after every epoch.
ContractionReport run_contraction_trace(const ContractionConfig& cfg, const Dataset& dataset);

/// Same, with caller-provided S and S_J (S_J need not be a strict subset).
ContractionReport run_contraction_trace(const ContractionConfig& cfg, const Dataset& dataset, const IndexList& s,
                                        const IndexList& subset);

struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds() const { return lhs <= rhs; }
};

/// lhs = sum_{t=t0}^{T} df[t]^2, rhs = (T - t0 + 1) df[t0]^2 (unit step weights).
BoundCheck cumulative_df_bound_check(const std::vector<double>& df_norms, int t0);

} // namespace dfal
