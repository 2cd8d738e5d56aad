#include "dfal/numerics.hpp"

#include <algorithm>
#include <numbers>

namespace dfal {

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis)
{
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label)
{
    std::uint64_t state = seed ^ fnv1a(label);
    splitmix64(state);
    return splitmix64(state);
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view label, std::uint64_t counter)
{
    std::uint64_t state = derive_seed(seed, label) ^ (counter * 0xd1342543de82ef95ULL + 1);
    return splitmix64(state);
}

namespace {

inline std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

} // namespace

Rng::Rng(std::uint64_t seed) : seed_(seed)
{
    std::uint64_t state = seed;
    for (auto& s : s_)
        s = splitmix64(state);
}

Rng::Rng(std::uint64_t seed, std::string_view label) : Rng(derive_seed(seed, label)) {}

Rng::Rng(std::uint64_t seed, std::string_view label, std::uint64_t counter)
    : Rng(derive_seed(seed, label, counter))
{
}

std::uint64_t Rng::next_u64()
{
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
}

double Rng::uniform()
{
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound)
{
    if (bound == 0)
        throw std::invalid_argument("Rng::below: bound must be positive");
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
        const std::uint64_t threshold = (0 - bound) % bound;
        while (low < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * bound;
            low = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

double Rng::normal()
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(angle);
    has_spare_ = true;
    return r * std::cos(angle);
}

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double a, double b, double x)
{
    constexpr int max_iterations = 10000;
    constexpr double eps = 1e-15;
    constexpr double tiny = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < tiny)
        d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iterations; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < tiny)
            d = tiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < eps)
            return h;
    }
    throw std::runtime_error("incomplete_beta: continued fraction did not converge");
}

} // namespace

double incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0))
        throw std::invalid_argument("incomplete_beta: shape parameters must be positive");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::invalid_argument("incomplete_beta: x outside [0, 1]");
    if (x == 0.0 || x == 1.0)
        return x;

    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0))
        return front * beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_sf(double t_stat, double dof)
{
    if (!std::isfinite(t_stat))
        throw std::invalid_argument("invalid statistic");
    if (!(dof >= 1.0))
        throw std::invalid_argument("student_t_sf: dof must be >= 1");
    if (t_stat == 0.0)
        return 1.0;
    const double t2 = t_stat * t_stat;
    // P(|T| >= |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2)
    const double x = dof / (dof + t2);
    const double p = incomplete_beta(0.5 * dof, 0.5, x);
    return std::clamp(p, 0.0, 1.0);
}

} // namespace dfal
