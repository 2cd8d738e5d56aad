#include "dfal/acquisition.hpp"
#include "fixtures.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>
#include <set>

using namespace dfal;

namespace {

struct Fixture {
    Dataset data;
    ModelState model;
    PoolState pool;
};

Fixture make_fixture(std::uint64_t seed, Index n = 60, int classes = 3, std::vector<Index> widths = {8})
{
    Fixture f;
    f.data = make_blobs(n, classes, 4, 3.0, seed);
    ArchSpec arch;
    arch.input_dim = 4;
    arch.hidden_widths = std::move(widths);
    arch.n_classes = classes;
    IndexList all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    f.pool = init_pool(all, 10, seed);
    TrainConfig tc;
    tc.epochs = 5;
    tc.seed = seed;
    f.model = train(init_model(arch, seed), f.data, f.pool.labeled, tc);
    return f;
}

} // namespace

TEST_CASE("reduced DF score equals the naive set gradient difference")
{
    Rng rng(77);
    for (int trial = 0; trial < 25; ++trial) {
        const int classes = 2 + static_cast<int>(rng.below(9));
        const Index width = 4 + static_cast<Index>(rng.below(29));
        const Dataset ds = make_blobs(80, classes, 3, 2.0, 300 + static_cast<std::uint64_t>(trial));
        ArchSpec arch;
        arch.input_dim = 3;
        arch.hidden_widths = {width};
        arch.n_classes = classes;
        const ModelState m = init_model(arch, static_cast<std::uint64_t>(trial));
        const Index r_size = 1 + static_cast<Index>(rng.below(50));
        IndexList r(static_cast<std::size_t>(r_size));
        std::iota(r.begin(), r.end(), Index{0});
        const Index x = 79;
        const auto block = static_cast<std::size_t>(embedding_size(arch, EmbeddingScope::last_layer));
        const double expected = oracle::naive_df(m, ds, r, x, block);
        const double got = df_score(m, ds, r, x).score;
        CHECK(std::abs(got - expected) <= 1e-10 * std::max(expected, 1e-300));
    }
}

TEST_CASE("reduced DF score identity also holds on the full parameter vector")
{
    const Fixture f = make_fixture(5, 40, 3, {6, 5});
    const auto block = static_cast<std::size_t>(parameter_count(f.model.arch));
    for (Index x : {Index{20}, Index{33}}) {
        const double expected = oracle::naive_df(f.model, f.data, f.pool.labeled, x, block);
        CHECK(df_score(f.model, f.data, f.pool.labeled, x, EmbeddingScope::full).score ==
              doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("batched DF scores agree with single-point scoring")
{
    const Fixture f = make_fixture(8);
    for (EmbeddingScope scope : {EmbeddingScope::last_layer, EmbeddingScope::full}) {
        const AcquisitionContext ctx = make_context(f.model, f.data, f.pool, scope);
        const auto scores = df_scores(ctx);
        REQUIRE(scores.size() == f.pool.unlabeled.size());
        for (std::size_t i = 0; i < scores.size(); i += 7) {
            const auto single = df_score(f.model, f.data, f.pool.labeled, scores[i].pool_index, scope);
            CHECK(scores[i].score == doctest::Approx(single.score).epsilon(1e-12));
            CHECK(scores[i].pseudo_label == single.pseudo_label);
        }
    }
    CHECK_THROWS_AS(df_score(f.model, f.data, {}, 3), std::invalid_argument);
}

TEST_CASE("pseudo-label ties go to the lowest class")
{
    Vector p(4);
    p << 0.3, 0.2, 0.3, 0.2;
    CHECK(argmax_class(p) == 0);
    p << 0.1, 0.4, 0.1, 0.4;
    CHECK(argmax_class(p) == 1);
}

TEST_CASE("top-b breaks ties by lower index")
{
    CHECK(top_b({9, 4, 7, 1}, {1.0, 2.0, 2.0, 0.5}, 2) == IndexList{4, 7});
    CHECK(top_b({9, 4, 7, 1}, {1.0, 1.0, 1.0, 1.0}, 3) == IndexList{1, 4, 7});
    CHECK(top_b({3, 2}, {0.0, 1.0}, 10) == IndexList{2, 3});
    CHECK(top_b({3, 2}, {0.0, 1.0}, 0).empty());
}

TEST_CASE("entropy")
{
    Vector p(3);
    p << 1.0, 0.0, 0.0;
    CHECK(entropy(p) == 0.0);
    p << 1.0 / 3, 1.0 / 3, 1.0 / 3;
    CHECK(entropy(p) == doctest::Approx(std::log(3.0)));
}

TEST_CASE("k-center greedy matches hand enumeration")
{
    Matrix cand(4, 1), centers(1, 1);
    cand << 1, 5, 10, 6;
    centers << 0;
    std::vector<double> dist;
    // Farthest from 0 is 10; then 5 (distance 5) beats 6 (distance 4) and 1.
    CHECK(kcenter_greedy(cand, centers, 2, {0, 1, 2, 3}, &dist) == std::vector<Index>{2, 1});
    CHECK(dist == std::vector<double>{10.0, 5.0});

    // Equal distances resolve to the lower id, not the lower row.
    Matrix sym(2, 1);
    sym << -3, 3;
    CHECK(kcenter_greedy(sym, centers, 1, {8, 2}) == std::vector<Index>{1});
    CHECK(kcenter_greedy(sym, centers, 1, {2, 8}) == std::vector<Index>{0});

    // Without initial centers the first pick is the lowest id.
    Matrix line(3, 1);
    line << 0, 1, 4;
    CHECK(kcenter_greedy(line, Matrix(0, 1), 3, {5, 6, 7}) == std::vector<Index>{0, 2, 1});
}

TEST_CASE("k-center greedy radius is within twice the optimum on small pools")
{
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
        const Index n = 3 + static_cast<Index>(rng.below(6));
        const Index k = 1 + static_cast<Index>(rng.below(static_cast<std::uint64_t>(n - 1)));
        Matrix pts(n, 2);
        for (Index i = 0; i < n; ++i)
            pts.row(i) << rng.normal(), rng.normal();
        IndexList ids(static_cast<std::size_t>(n));
        std::iota(ids.begin(), ids.end(), Index{0});
        const double greedy = fixtures::covering_radius(pts, kcenter_greedy(pts, Matrix(0, 2), k, ids));

        const double best = fixtures::optimal_radius(pts, k);
        CHECK(greedy <= 2.0 * best + 1e-12);
    }
}

TEST_CASE("k-means++ seeding follows squared-distance probabilities")
{
    Matrix three(3, 2), four(4, 2);
    three << 0, 0, 1, 0, 0, 3;
    four << 0, 0, 2, 0, 2, 1, -1, -1;
    const int trials = 10000;
    for (const auto& [pts, b] : {std::pair<Matrix, Index>{three, 2}, {three, 3}, {four, 2}, {four, 3}}) {
        const auto probs = fixtures::kmeanspp_sequence_probs(pts, b);
        std::map<std::vector<Index>, int> counts;
        Rng rng(derive_seed(static_cast<std::uint64_t>(pts.rows()), "kmeanspp", static_cast<std::uint64_t>(b)));
        for (int t = 0; t < trials; ++t)
            ++counts[kmeanspp_seeding(pts, b, rng)];
        for (const auto& [seq, n] : counts)
            CHECK(probs.count(seq) == 1);
        for (const auto& [seq, p] : probs) {
            const double sigma = std::sqrt(p * (1 - p) / trials);
            const double freq = static_cast<double>(counts[seq]) / trials;
            CHECK(std::abs(freq - p) <= 3 * sigma);
        }
    }
}

TEST_CASE("k-means++ falls back to uniform picks on coincident points")
{
    const Matrix same = Matrix::Ones(4, 2);
    Rng rng(1);
    std::map<Index, int> second;
    for (int t = 0; t < 4000; ++t) {
        const auto seq = kmeanspp_seeding(same, 2, rng);
        REQUIRE(seq.size() == 2);
        REQUIRE(seq[0] != seq[1]);
        ++second[seq[1]];
    }
    CHECK(second.size() == 4);
    for (const auto& [i, n] : second)
        CHECK(std::abs(n - 1000) < 3 * std::sqrt(4000 * 0.25 * 0.75));
}

TEST_CASE("selectors are deterministic, duplicate-free and sized")
{
    const Fixture f = make_fixture(12);
    const AcquisitionContext ctx = make_context(f.model, f.data, f.pool);
    for (Method m : all_methods()) {
        for (Index b : {Index{1}, Index{7}, Index{1000}}) {
            Rng r1(5), r2(5);
            const auto a = select(m, ctx, b, r1);
            const auto c = select(m, ctx, b, r2);
            CHECK(a.indices == c.indices);
            CHECK(a.method == m);
            const auto expected = std::min<std::size_t>(static_cast<std::size_t>(b), ctx.pool.size());
            CHECK(a.indices.size() == expected);
            std::set<Index> uniq(a.indices.begin(), a.indices.end());
            CHECK(uniq.size() == a.indices.size());
            for (Index i : a.indices)
                CHECK(std::binary_search(ctx.pool.begin(), ctx.pool.end(), i));
        }
    }
}

TEST_CASE("grad selects the highest DF scores")
{
    const Fixture f = make_fixture(13);
    const AcquisitionContext ctx = make_context(f.model, f.data, f.pool);
    const auto scored = df_scores(ctx);
    const auto batch = select_grad(ctx, 5);
    const double fifth = batch.scores.back();
    for (const auto& s : scored)
        if (std::find(batch.indices.begin(), batch.indices.end(), s.pool_index) == batch.indices.end())
            CHECK(s.score <= fifth);
    CHECK(std::is_sorted(batch.scores.rbegin(), batch.scores.rend()));
}

TEST_CASE("selectors never read pool labels")
{
    const Fixture f = make_fixture(21);
    Dataset poisoned = f.data;
    Rng rng(2);
    for (Index i : f.pool.unlabeled)
        poisoned.labels[static_cast<std::size_t>(i)] =
            static_cast<int>(rng.below(static_cast<std::uint64_t>(poisoned.n_classes)));
    for (EmbeddingScope scope : {EmbeddingScope::last_layer, EmbeddingScope::full}) {
        const auto clean_ctx = make_context(f.model, f.data, f.pool, scope);
        const auto poisoned_ctx = make_context(f.model, poisoned, f.pool, scope);
        for (Method m : all_methods()) {
            Rng r1(9), r2(9);
            const auto a = select(m, clean_ctx, 6, r1);
            const auto b = select(m, poisoned_ctx, 6, r2);
            CHECK(a.indices == b.indices);
            CHECK(a.scores == b.scores);
        }
    }
}

TEST_CASE("selectors return an empty batch on an empty pool")
{
    Fixture f = make_fixture(3);
    PoolState drained = f.pool;
    drained.acquire(drained.unlabeled);
    const auto ctx = make_context(f.model, f.data, drained);
    for (Method m : all_methods()) {
        Rng rng(0);
        CHECK(select(m, ctx, 4, rng).indices.empty());
    }
    Rng rng(0);
    CHECK_THROWS_AS(select(Method::grad, make_context(f.model, f.data, f.pool), 0, rng), std::invalid_argument);
}
