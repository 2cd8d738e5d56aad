#include "dfal/contraction.hpp"

#include <doctest.h>

#include <numeric>

using namespace dfal;

TEST_CASE("t0 is the start of the final non-increasing run")
{
    CHECK(estimate_t0({5, 4, 3, 2}) == 0);
    CHECK(estimate_t0({1, 3, 2, 2, 1}) == 1);
    CHECK(estimate_t0({3, 1, 2, 1.5, 1.0}) == 2);
    CHECK_FALSE(estimate_t0({3, 2, 1, 2}).has_value());
    CHECK_FALSE(estimate_t0({1}).has_value());
    // Increases within the relative tolerance count as non-increasing.
    CHECK(estimate_t0({1.0, 1.0 + 5e-7, 0.9}) == 0);
    CHECK(estimate_t0({1.0, 1.0 + 5e-6, 0.9}) == 1);
}

TEST_CASE("rate and bound check")
{
    const std::vector<double> df{4, 2, 1, 0.5};
    CHECK(estimate_rate(df, 0) == doctest::Approx(0.5));
    CHECK(estimate_rate({1, 0, 0}, 0) == std::nullopt);
    const auto check = cumulative_df_bound_check(df, 1);
    CHECK(check.lhs == doctest::Approx(4 + 1 + 0.25));
    CHECK(check.rhs == doctest::Approx(3 * 4.0));
    CHECK(check.holds());
    CHECK_FALSE(cumulative_df_bound_check({1, 2}, 0).holds());
    CHECK_THROWS_AS(cumulative_df_bound_check(df, 4), std::invalid_argument);
}

TEST_CASE("df norm is the gradient gap between S and its subset")
{
    const Dataset ds = make_blobs(30, 3, 4, 1.0, 2);
    ArchSpec arch;
    arch.input_dim = 4;
    arch.hidden_widths = {6};
    arch.n_classes = 3;
    const ModelState m = init_model(arch, 4);
    IndexList s(30);
    std::iota(s.begin(), s.end(), Index{0});
    CHECK(df_norm(m, ds, s, s, EmbeddingScope::full) == 0.0);
    const IndexList sub{0, 3, 7, 11};
    const Vector full = loss_gradient(m, ds, s) - loss_gradient(m, ds, sub);
    CHECK(df_norm(m, ds, s, sub, EmbeddingScope::full) == doctest::Approx(full.norm()));
    const Index tail = embedding_size(arch, EmbeddingScope::last_layer);
    CHECK(df_norm(m, ds, s, sub, EmbeddingScope::last_layer) == doctest::Approx(full.tail(tail).norm()));
}

TEST_CASE("trace has one entry per epoch and is flat without learning")
{
    const Dataset ds = make_blobs(120, 3, 4, 1.0, 7);
    ContractionConfig cfg;
    cfg.s_size = 60;
    cfg.epochs = 12;
    cfg.hidden_widths = {8};
    cfg.learning_rate = 0.0;
    const auto flat = run_contraction_trace(cfg, ds);
    REQUIRE(flat.df_norms.size() == 12);
    for (double v : flat.df_norms)
        CHECK(v == flat.df_norms.front());
    CHECK(flat.t0_estimate == 0);
    CHECK(flat.violation_count_after_t0 == 0);
    CHECK(flat.s_indices.size() == 60);
    CHECK(flat.subset_indices.size() == 30);
    for (Index i : flat.subset_indices)
        CHECK(std::binary_search(flat.s_indices.begin(), flat.s_indices.end(), i));

    cfg.learning_rate = 0.05;
    const auto a = run_contraction_trace(cfg, ds);
    const auto b = run_contraction_trace(cfg, ds);
    CHECK(a.df_norms == b.df_norms);
    CHECK(a.df_norms != flat.df_norms);

    cfg.minibatch_size = 16;
    CHECK(run_contraction_trace(cfg, ds).df_norms.size() == 12);

    cfg.s_size = 500;
    CHECK_THROWS_AS(run_contraction_trace(cfg, ds), std::invalid_argument);
}
