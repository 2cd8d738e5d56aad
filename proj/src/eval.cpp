#include "dfal/eval.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace dfal {

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size())
        throw std::invalid_argument("paired_t_test: length mismatch (" + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + ")");
    if (a.size() < 2)
        throw std::invalid_argument("paired_t_test: need at least two pairs");
    const auto n = static_cast<double>(a.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        mean += a[i] - b[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / (n - 1.0));
    if (sd == 0.0) {
        if (mean == 0.0)
            return {0.0, 1.0};
        return {mean > 0.0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity(), 0.0};
    }
    const double t = mean / (sd / std::sqrt(n));
    return {t, student_t_sf(t, n - 1.0)};
}

std::vector<double> bh_adjust(std::span<const double> p_values)
{
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("bh_fdr: p-value outside [0, 1]");
    const std::size_t m = p_values.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });
    std::vector<double> adjusted(m, 1.0);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double candidate = static_cast<double>(m) * p_values[order[k]] / static_cast<double>(k + 1);
        running = std::min(running, candidate);
        adjusted[order[k]] = std::min(running, 1.0);
    }
    return adjusted;
}

std::vector<bool> bh_fdr(std::span<const double> p_values, double alpha)
{
    const auto adjusted = bh_adjust(p_values);
    std::vector<bool> reject(adjusted.size());
    for (std::size_t i = 0; i < adjusted.size(); ++i)
        reject[i] = adjusted[i] < alpha;
    return reject;
}

ComparisonSlice ComparisonSlice::parse(const std::string& text)
{
    if (text == "all")
        return {Kind::all_rounds, ""};
    if (text == "early")
        return {Kind::early, ""};
    if (text == "late")
        return {Kind::late, ""};
    if (text.starts_with("dataset:") && text.size() > 8)
        return {Kind::by_dataset, text.substr(8)};
    if (text.starts_with("arch:") && text.size() > 5)
        return {Kind::by_arch, text.substr(5)};
    throw std::invalid_argument("unknown slice '" + text + "' (expected all, early, late, dataset:<name>, arch:<name>)");
}

std::string ComparisonSlice::label() const
{
    switch (kind) {
    case Kind::all_rounds: return "all";
    case Kind::early: return "early";
    case Kind::late: return "late";
    case Kind::by_dataset: return "dataset:" + name;
    case Kind::by_arch: return "arch:" + name;
    }
    return "all";
}

void ExperimentAccuracies::validate() const
{
    if (methods.size() != accuracy.size())
        throw std::invalid_argument("experiment '" + name + "': method/accuracy count mismatch");
    for (std::size_t m = 0; m < methods.size(); ++m) {
        if (accuracy[m].size() != rounds.size())
            throw std::invalid_argument("experiment '" + name + "': method '" + methods[m] +
                                        "' has a different round grid");
        for (const auto& per_seed : accuracy[m])
            if (per_seed.size() != seeds.size())
                throw std::invalid_argument("experiment '" + name + "': method '" + methods[m] +
                                            "' has a different seed set");
    }
}

ExperimentAccuracies collect_accuracies(const std::string& name, const std::string& dataset, const std::string& arch,
                                        const std::vector<ExperimentResult>& per_method)
{
    ExperimentAccuracies out;
    out.name = name;
    out.dataset = dataset;
    out.arch = arch;
    if (per_method.empty())
        return out;
    for (const auto& run : per_method.front().runs)
        out.seeds.push_back(run.seed);
    if (!per_method.front().runs.empty())
        for (const auto& rec : per_method.front().runs.front().rounds)
            out.rounds.push_back(rec.round);

    for (const auto& result : per_method) {
        const std::string method = to_string(result.method);
        if (result.runs.size() != out.seeds.size())
            throw std::invalid_argument("experiment '" + name + "': method '" + method + "' has a different seed set");
        std::vector<std::vector<double>> acc(out.rounds.size(), std::vector<double>(out.seeds.size()));
        for (std::size_t s = 0; s < result.runs.size(); ++s) {
            const auto& run = result.runs[s];
            if (run.seed != out.seeds[s])
                throw std::invalid_argument("experiment '" + name + "': method '" + method +
                                            "' has a different seed set");
            if (run.error)
                throw std::invalid_argument("experiment '" + name + "': method '" + method + "' failed: " + *run.error);
            if (run.rounds.size() != out.rounds.size())
                throw std::invalid_argument("experiment '" + name + "': method '" + method +
                                            "' has a different round grid");
            for (std::size_t r = 0; r < run.rounds.size(); ++r) {
                if (run.rounds[r].round != out.rounds[r])
                    throw std::invalid_argument("experiment '" + name + "': method '" + method +
                                                "' has a different round grid");
                acc[r][s] = run.rounds[r].test_accuracy;
            }
        }
        out.methods.push_back(method);
        out.accuracy.push_back(std::move(acc));
    }
    return out;
}

std::vector<int> selected_rounds(const ExperimentAccuracies& exp, const ComparisonSlice& slice)
{
    if (slice.kind == ComparisonSlice::Kind::by_dataset && exp.dataset != slice.name)
        return {};
    if (slice.kind == ComparisonSlice::Kind::by_arch && exp.arch != slice.name)
        return {};
    std::vector<int> post;
    for (int r : exp.rounds)
        if (r > 0)
            post.push_back(r);
    const std::size_t window = std::min<std::size_t>(3, post.size());
    if (slice.kind == ComparisonSlice::Kind::early)
        post.resize(window);
    else if (slice.kind == ComparisonSlice::Kind::late)
        post.erase(post.begin(), post.end() - static_cast<std::ptrdiff_t>(window));
    return post;
}

PenaltyMatrix build_ppm(const std::vector<ExperimentAccuracies>& experiments, const ComparisonSlice& slice,
                        double alpha, std::vector<std::string> methods)
{
    if (experiments.empty())
        throw std::invalid_argument("build_ppm: no experiments");
    if (methods.empty())
        methods = experiments.front().methods;
    const std::size_t k = methods.size();

    PenaltyMatrix ppm;
    ppm.methods = methods;
    ppm.P = Matrix::Zero(static_cast<Index>(k), static_cast<Index>(k));

    const auto& reference_seeds = experiments.front().seeds;
    for (const auto& exp : experiments) {
        exp.validate();
        if (exp.seeds.size() != reference_seeds.size())
            throw std::invalid_argument("build_ppm: experiment '" + exp.name + "' has a mismatched seed set");
        // Position of each requested method inside this experiment.
        std::vector<std::size_t> pos(k);
        for (std::size_t i = 0; i < k; ++i) {
            const auto it = std::find(exp.methods.begin(), exp.methods.end(), methods[i]);
            if (it == exp.methods.end())
                throw std::invalid_argument("build_ppm: experiment '" + exp.name + "' lacks method '" + methods[i] +
                                            "'");
            pos[i] = static_cast<std::size_t>(it - exp.methods.begin());
        }
        const auto rounds = selected_rounds(exp, slice);
        if (rounds.empty())
            continue;
        ++ppm.experiments_counted;
        const double unit = 1.0 / static_cast<double>(rounds.size());

        for (int round : rounds) {
            const auto r = static_cast<std::size_t>(std::find(exp.rounds.begin(), exp.rounds.end(), round) -
                                                    exp.rounds.begin());
            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            std::vector<double> p_values;
            std::vector<double> t_stats;
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = i + 1; j < k; ++j) {
                    const auto test = paired_t_test(exp.accuracy[pos[i]][r], exp.accuracy[pos[j]][r]);
                    pairs.emplace_back(i, j);
                    p_values.push_back(test.p_value);
                    t_stats.push_back(test.t_stat);
                }
            const auto reject = bh_fdr(p_values, alpha);
            for (std::size_t q = 0; q < pairs.size(); ++q) {
                if (!reject[q] || t_stats[q] == 0.0)
                    continue;
                const auto [i, j] = pairs[q];
                if (t_stats[q] > 0.0)
                    ppm.P(static_cast<Index>(i), static_cast<Index>(j)) += unit;
                else
                    ppm.P(static_cast<Index>(j), static_cast<Index>(i)) += unit;
            }
        }
    }
    if (ppm.experiments_counted == 0)
        throw std::invalid_argument("build_ppm: slice '" + slice.label() + "' selects no rounds");
    return ppm;
}

std::vector<double> loss_scores(const PenaltyMatrix& ppm)
{
    std::vector<double> out;
    const auto k = static_cast<double>(ppm.P.rows());
    for (Index j = 0; j < ppm.P.cols(); ++j)
        out.push_back(ppm.P.col(j).sum() / k);
    return out;
}

std::vector<CurvePoint> aggregate_curves(const ExperimentResult& result)
{
    std::vector<CurvePoint> out;
    if (result.runs.empty())
        throw std::invalid_argument("aggregate_curves: no seeds");
    std::size_t n_rounds = std::numeric_limits<std::size_t>::max();
    for (const auto& run : result.runs)
        n_rounds = std::min(n_rounds, run.rounds.size());
    for (std::size_t r = 0; r < n_rounds; ++r) {
        CurvePoint point;
        point.round = result.runs.front().rounds[r].round;
        point.labeled_size = result.runs.front().rounds[r].labeled_size;
        double sum = 0.0;
        for (const auto& run : result.runs)
            sum += run.rounds[r].test_accuracy;
        const auto n = static_cast<double>(result.runs.size());
        point.mean = sum / n;
        if (result.runs.size() > 1) {
            double ss = 0.0;
            for (const auto& run : result.runs)
                ss += (run.rounds[r].test_accuracy - point.mean) * (run.rounds[r].test_accuracy - point.mean);
            point.sd = std::sqrt(ss / (n - 1.0));
        }
        out.push_back(point);
    }
    return out;
}

} // namespace dfal
