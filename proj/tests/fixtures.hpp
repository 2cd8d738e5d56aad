#pragma once

// Fixtures shared by the unit tests and the acceptance binary.

#include "dfal/eval.hpp"
#include "dfal/model.hpp"
#include "dfal/numerics.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <string>
#include <vector>

namespace fixtures {

using namespace dfal;

/// He-uniform model with small random biases so every block is exercised.
inline ModelState random_model(std::vector<Index> widths, Index input, int classes, std::uint64_t seed)
{
    ArchSpec arch;
    arch.input_dim = input;
    arch.hidden_widths = std::move(widths);
    arch.n_classes = classes;
    ModelState m = init_model(arch, seed);
    Rng rng(seed, "bias");
    for (std::size_t l = 0; l < m.layers.size(); ++l)
        for (Index k = 0; k < m.bias(l).size(); ++k)
            m.bias(l)(k) = 0.1 * rng.normal();
    return m;
}

inline Vector random_vector(Index n, Rng& rng)
{
    Vector v(n);
    for (Index i = 0; i < n; ++i)
        v(i) = rng.normal();
    return v;
}

/// Largest distance from any point to its nearest center.
inline double covering_radius(const Matrix& pts, const std::vector<Index>& centers)
{
    double radius = 0;
    for (Index i = 0; i < pts.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Index c : centers)
            best = std::min(best, (pts.row(i) - pts.row(c)).norm());
        radius = std::max(radius, best);
    }
    return radius;
}

/// Optimal k-center radius by enumerating every k-subset.
inline double optimal_radius(const Matrix& pts, Index k)
{
    const Index n = pts.rows();
    double best = std::numeric_limits<double>::infinity();
    std::vector<int> mask(static_cast<std::size_t>(n), 0);
    std::fill(mask.end() - k, mask.end(), 1);
    do {
        std::vector<Index> c;
        for (Index i = 0; i < n; ++i)
            if (mask[static_cast<std::size_t>(i)])
                c.push_back(i);
        best = std::min(best, covering_radius(pts, c));
    } while (std::next_permutation(mask.begin(), mask.end()));
    return best;
}

/// Exact probability of every ordered k-means++ selection sequence: uniform
/// first pick, then proportional to squared distance to the chosen set.
inline std::map<std::vector<Index>, double> kmeanspp_sequence_probs(const Matrix& pts, Index b)
{
    std::map<std::vector<Index>, double> out;
    const Index n = pts.rows();
    std::function<void(std::vector<Index>, double)> rec = [&](std::vector<Index> seq, double prob) {
        if (static_cast<Index>(seq.size()) == b) {
            out[seq] += prob;
            return;
        }
        std::vector<double> w(static_cast<std::size_t>(n), 0.0);
        double total = 0;
        for (Index i = 0; i < n; ++i) {
            if (std::find(seq.begin(), seq.end(), i) != seq.end())
                continue;
            double d = std::numeric_limits<double>::infinity();
            for (Index c : seq)
                d = std::min(d, (pts.row(i) - pts.row(c)).squaredNorm());
            w[static_cast<std::size_t>(i)] = d;
            total += d;
        }
        for (Index i = 0; i < n; ++i)
            if (w[static_cast<std::size_t>(i)] > 0) {
                auto next = seq;
                next.push_back(i);
                rec(next, prob * w[static_cast<std::size_t>(i)] / total);
            }
    };
    for (Index i = 0; i < n; ++i)
        rec({i}, 1.0 / static_cast<double>(n));
    return out;
}

/// Experiment where A beats B by 0.1 every round and C ties B.
inline ExperimentAccuracies planted_experiment(const std::string& name, int rounds, const std::string& dataset = "blobs",
                                               const std::string& arch = "mlp-8")
{
    ExperimentAccuracies e;
    e.name = name;
    e.dataset = dataset;
    e.arch = arch;
    e.methods = {"A", "B", "C"};
    for (int r = 0; r <= rounds; ++r)
        e.rounds.push_back(r);
    e.seeds = {0, 1, 2, 3, 4, 5};
    const std::vector<double> noise{0.001, -0.002, 0.0015, 0.0, -0.001, 0.002};
    e.accuracy.assign(3, std::vector<std::vector<double>>(e.rounds.size()));
    for (std::size_t r = 0; r < e.rounds.size(); ++r)
        for (std::size_t s = 0; s < e.seeds.size(); ++s) {
            const double base = 0.6 + 0.01 * static_cast<double>(r);
            e.accuracy[0][r].push_back(base + 0.1 + noise[s]);
            e.accuracy[1][r].push_back(base + noise[(s + 1) % 6]);
            e.accuracy[2][r].push_back(base + noise[(s + 2) % 6]);
        }
    return e;
}

} // namespace fixtures
