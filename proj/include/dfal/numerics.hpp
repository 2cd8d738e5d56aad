#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace dfal {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;
using IndexList = std::vector<Index>;

// ---------------------------------------------------------------------------
// Random numbers
// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t& state);

/// 64-bit FNV-1a over raw bytes.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

/// Derive a child seed from a parent seed and a purpose label. Pure function of
/// its arguments, so derived streams never depend on how many draws happened
/// elsewhere.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label);
std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t counter);

/// xoshiro256** seeded through splitmix64. All draws are computed with integer
/// arithmetic or IEEE-exact operations so sequences are identical on every
/// platform; normal() additionally relies on std::log/std::sqrt/std::cos.
class Rng {
public:
    explicit Rng(std::uint64_t seed);
    Rng(std::uint64_t seed, std::string_view label);
    Rng(std::uint64_t seed, std::string_view label, std::uint64_t counter);

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, bound), unbiased (Lemire's rejection method).
    std::uint64_t below(std::uint64_t bound);
    /// Standard normal via Box-Muller; the second variate is cached.
    double normal();

    std::uint64_t seed() const { return seed_; }

    template <typename T>
    void shuffle(std::vector<T>& values)
    {
        for (std::size_t i = values.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(below(i));
            std::swap(values[i - 1], values[j]);
        }
    }

private:
    std::uint64_t seed_;
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// ---------------------------------------------------------------------------
// Special functions
// ---------------------------------------------------------------------------

/// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double incomplete_beta(double a, double b, double x);

/// Two-sided tail probability P(|T_dof| >= |t|) of Student's t distribution.
double student_t_sf(double t_stat, double dof);

// ---------------------------------------------------------------------------
// Dense helpers
// ---------------------------------------------------------------------------

template <typename Derived>
typename Derived::Scalar l2_norm(const Eigen::MatrixBase<Derived>& v)
{
    // Eigen's stableNorm rescales to avoid overflow/underflow on extreme inputs.
    return v.stableNorm();
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m)
{
    return m.allFinite();
}

/// Scores of mean-centered rows on the top `dims` principal components.
/// Components are ordered by descending eigenvalue and signed so that the
/// largest-magnitude loading is positive. Degenerate input (zero variance)
/// yields a zero matrix.
template <typename Scalar>
MatrixX<Scalar> pca_project(const MatrixX<Scalar>& points, Index dims)
{
    const Index rows = points.rows();
    const Index cols = points.cols();
    if (rows < 2)
        throw std::invalid_argument("pca_project: need at least two rows");
    if (dims < 0 || dims > std::min(rows, cols))
        throw std::invalid_argument("pca_project: dims must be <= min(rows, cols)");

    const VectorX<Scalar> mean = points.colwise().mean().transpose();
    const MatrixX<Scalar> centered = points.rowwise() - mean.transpose();
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> cov =
        (centered.transpose() * centered) / static_cast<Scalar>(rows - 1);

    MatrixX<Scalar> scores = MatrixX<Scalar>::Zero(rows, dims);
    if (cov.trace() <= Scalar(0))
        return scores;

    Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> solver(cov);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("pca_project: eigendecomposition failed");

    // Eigen returns ascending eigenvalues.
    for (Index k = 0; k < dims; ++k) {
        VectorX<Scalar> component = solver.eigenvectors().col(cols - 1 - k);
        Index arg = 0;
        component.cwiseAbs().maxCoeff(&arg);
        if (component(arg) < Scalar(0))
            component = -component;
        scores.col(k) = centered * component;
    }
    return scores;
}

} // namespace dfal
