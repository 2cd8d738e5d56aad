#pragma once

#include "dfal/al_loop.hpp"
#include "dfal/numerics.hpp"

#include <span>
#include <string>
#include <vector>

namespace dfal {

struct TTestResult {
    double t_stat = 0.0;
    double p_value = 1.0;
};

/// Two-sided paired t-test on a - b. Zero-variance differences give p = 1
/// when the mean difference is zero and p = 0 otherwise (t is then +/-inf
/// or 0).
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// Benjamini-Hochberg adjusted p-values, min_{j >= i} m p_(j) / j clipped to 1.
std::vector<double> bh_adjust(std::span<const double> p_values);

/// Rejection flags in input order: adjusted p < alpha.
std::vector<bool> bh_fdr(std::span<const double> p_values, double alpha);

/// Which experiments and rounds enter a penalty matrix. Round 0 (before any
/// acquisition) never participates.
struct ComparisonSlice {
    enum class Kind { all_rounds, early, late, by_dataset, by_arch };
    Kind kind = Kind::all_rounds;
    std::string name; // dataset/arch name for the by_* kinds

    /// "all", "early", "late", "dataset:<name>" or "arch:<name>".
    static ComparisonSlice parse(const std::string& text);
    std::string label() const;
};

/// Per-seed test accuracies of every method in one experiment.
/// accuracy[m][r][s] is method m, round position r, seed position s.
struct ExperimentAccuracies {
    std::string name;
    std::string dataset;
    std::string arch;
    std::vector<int> rounds;
    std::vector<std::uint64_t> seeds;
    std::vector<std::string> methods;
    std::vector<std::vector<std::vector<double>>> accuracy;

    void validate() const;
};

/// Builds an ExperimentAccuracies from one result per method. Throws if seed
/// sets or round grids differ, or a seed run ended in an error.
ExperimentAccuracies collect_accuracies(const std::string& name, const std::string& dataset, const std::string& arch,
                                        const std::vector<ExperimentResult>& per_method);

struct PenaltyMatrix {
    std::vector<std::string> methods;
    Matrix P;
    int experiments_counted = 0;
};

/// Rounds of `exp` selected by `slice` (empty if the experiment is filtered out).
std::vector<int> selected_rounds(const ExperimentAccuracies& exp, const ComparisonSlice& slice);

/// For every experiment and selected round: all pairwise paired t-tests,
/// BH-corrected within the round; each significant win adds 1/n_e to
/// P[winner, loser], with n_e the number of selected rounds of that experiment.
/// `methods` fixes the row/column order (defaults to the first experiment's).
PenaltyMatrix build_ppm(const std::vector<ExperimentAccuracies>& experiments, const ComparisonSlice& slice,
                        double alpha, std::vector<std::string> methods = {});

/// Column means of P (diagonal zero included, so divided by K).
std::vector<double> loss_scores(const PenaltyMatrix& ppm);

struct CurvePoint {
    int round = 0;
    Index labeled_size = 0;
    double mean = 0.0;
    double sd = 0.0;
};

/// Per-round mean and sample standard deviation (n - 1) across seeds.
std::vector<CurvePoint> aggregate_curves(const ExperimentResult& result);

} // namespace dfal
