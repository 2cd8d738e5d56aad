#include "dfal/numerics.hpp"
#include "oracle.hpp"

#include <doctest.h>

#include <map>
#include <set>

using namespace dfal;

TEST_CASE("rng streams are reproducible and label-separated")
{
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    CHECK(derive_seed(7, "pool") == derive_seed(7, "pool"));
    CHECK(derive_seed(7, "pool") != derive_seed(7, "model"));
    CHECK(derive_seed(7, "x", 0) != derive_seed(7, "x", 1));
    CHECK(Rng(7, "x").next_u64() == Rng(derive_seed(7, "x")).next_u64());
}

TEST_CASE("rng uniform, below and normal have the expected moments")
{
    Rng rng(1);
    const int n = 200000;
    double sum = 0, sumsq = 0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));

    // Chi-square against uniform on 7 cells, 6 dof: 99.9% quantile is 22.46.
    std::vector<int> counts(7, 0);
    for (int i = 0; i < 70000; ++i)
        ++counts[static_cast<std::size_t>(rng.below(7))];
    double chi2 = 0;
    for (int c : counts)
        chi2 += (c - 10000.0) * (c - 10000.0) / 10000.0;
    CHECK(chi2 < 22.46);

    sum = 0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sumsq += z * z;
    }
    CHECK(std::abs(sum / n) < 0.01);
    CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.02));
    CHECK(rng.below(1) == 0);
}

TEST_CASE("shuffle is a permutation")
{
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i)
        v[static_cast<std::size_t>(i)] = i;
    Rng rng(3);
    rng.shuffle(v);
    std::set<int> seen(v.begin(), v.end());
    CHECK(seen.size() == 50);
    CHECK(*seen.begin() == 0);
    CHECK(*seen.rbegin() == 49);
}

TEST_CASE("two-sided t tail matches quadrature of the density")
{
    CHECK(student_t_sf(2.776445, 4.0) == doctest::Approx(0.05).epsilon(1e-6));
    CHECK(student_t_sf(0.0, 5.0) == 1.0);
    CHECK(student_t_sf(-2.0, 9.0) == doctest::Approx(student_t_sf(2.0, 9.0)));
    Rng rng(11);
    for (int i = 0; i < 40; ++i) {
        const double nu = 1.0 + static_cast<double>(rng.below(30));
        const double t = 6.0 * rng.uniform();
        const double expected = static_cast<double>(oracle::t_two_sided_by_quadrature(t, nu));
        CHECK(student_t_sf(t, nu) == doctest::Approx(expected).epsilon(1e-8));
    }
    CHECK_THROWS_AS(student_t_sf(std::nan(""), 3.0), std::invalid_argument);
}

TEST_CASE("incomplete beta matches known closed forms")
{
    // I_x(1, b) = 1 - (1 - x)^b and I_x(a, 1) = x^a.
    for (double x : {0.0, 0.1, 0.37, 0.5, 0.9, 1.0}) {
        CHECK(incomplete_beta(1.0, 3.5, x) == doctest::Approx(1.0 - std::pow(1.0 - x, 3.5)));
        CHECK(incomplete_beta(2.5, 1.0, x) == doctest::Approx(std::pow(x, 2.5)));
    }
    CHECK(incomplete_beta(4.0, 4.0, 0.5) == doctest::Approx(0.5));
}

TEST_CASE("l2_norm agrees with extended precision and survives extreme scales")
{
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        Vector v(17);
        std::vector<long double> ref;
        for (Index i = 0; i < v.size(); ++i) {
            v(i) = rng.normal();
            ref.push_back(v(i));
        }
        CHECK(l2_norm(v) == doctest::Approx(static_cast<double>(oracle::norm(ref))).epsilon(1e-14));
    }
    Vector big = Vector::Constant(4, 1e200);
    CHECK(l2_norm(big) == doctest::Approx(2e200));
    Vector tiny = Vector::Constant(4, 1e-200);
    CHECK(l2_norm(tiny) == doctest::Approx(2e-200));
}

TEST_CASE("pca projection matches an SVD of the centered data")
{
    Rng rng(9);
    Matrix x(40, 5);
    for (Index i = 0; i < x.rows(); ++i)
        for (Index j = 0; j < x.cols(); ++j)
            x(i, j) = rng.normal() * static_cast<double>(j + 1) + (j == 2 ? 0.5 * x(i, 0) : 0.0);
    const Matrix scores = pca_project<double>(x, 2);

    const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
    for (Index k = 0; k < 2; ++k) {
        Eigen::VectorXd v = svd.matrixV().col(k);
        Index arg = 0;
        v.cwiseAbs().maxCoeff(&arg);
        if (v(arg) < 0)
            v = -v;
        const Eigen::VectorXd expected = centered * v;
        CHECK((scores.col(k) - expected).norm() < 1e-9 * expected.norm());
    }
    CHECK(scores.col(0).squaredNorm() >= scores.col(1).squaredNorm());

    const Matrix flat = Matrix::Ones(6, 3);
    CHECK(pca_project<double>(flat, 2).isZero());
    CHECK_THROWS_AS(pca_project<double>(Matrix::Ones(1, 3), 1), std::invalid_argument);

    const MatrixX<float> xf = x.cast<float>();
    CHECK(pca_project<float>(xf, 1).rows() == 40);
}
