#pragma once

// Shared scalar/matrix aliases, torus geometry and error types used across
// the library.

#include <cmath>
#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace bjlab {

using Mat     = Eigen::MatrixXd;
using CMat    = Eigen::MatrixXcd;
using Vec     = Eigen::VectorXd;
using CVec    = Eigen::VectorXcd;
using Complex = std::complex<double>;

inline constexpr double two_pi      = 6.28318530717958647692528676656;
inline constexpr double golden_mean = 0.61803398874989484820458683437;  // (sqrt(5)-1)/2

// representative of x + Z in [0,1)
inline double wrap01(double x) {
    double y = x - std::floor(x);
    return (y < 1.0) ? y : 0.0;
}

// e(x) = exp(2 pi i x)
inline Complex unit_phase(double x) {
    return {std::cos(two_pi * x), std::sin(two_pi * x)};
}

// ||x|| = distance from x to the nearest integer
inline double torus_dist(double x) {
    double f = x - std::floor(x);
    return std::min(f, 1.0 - f);
}

// Point s e(x) of the annulus around the unit circle, kept in polar form so
// that the translation x -> x + n omega leaves the radius untouched exactly.
struct AnnulusPoint {
    double radius{1.0};
    double phase{0.0};

    Complex to_complex() const { return radius * unit_phase(phase); }
    bool on_torus() const { return radius == 1.0; }
    AnnulusPoint translated(double omega, long n) const {
        return {radius, wrap01(phase + static_cast<double>(n) * omega)};
    }
};

inline AnnulusPoint torus_point(double x) { return {1.0, wrap01(x)}; }

// throws when s e(x) lies outside { 1-r < |z| < 1+r }
inline void require_in_annulus(const AnnulusPoint& p, double annulus_r) {
    if (!(p.radius > 1.0 - annulus_r && p.radius < 1.0 + annulus_r))
        throw std::domain_error("point with |z| = " + std::to_string(p.radius) +
                                " lies outside the annulus of width " + std::to_string(annulus_r));
}

// integer interval [a,b], never empty
struct Interval {
    long a{1};
    long b{1};

    Interval() = default;
    Interval(long a_, long b_) : a(a_), b(b_) {
        if (b < a)
            throw std::domain_error("Interval: empty interval [" + std::to_string(a_) + "," +
                                    std::to_string(b_) + "]");
    }
    long size() const { return b - a + 1; }
    bool contains(long n) const { return a <= n && n <= b; }
    Interval shifted(long j) const { return {a + j, b + j}; }
};

// exhaustive enumeration exceeded its node budget
class resource_error : public std::runtime_error {
  public:
    explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

// H - E I was numerically singular; carries the smallest singular value
class spectral_hit_error : public std::runtime_error {
  public:
    spectral_hit_error(const std::string& what, double smallest_singular_value)
        : std::runtime_error(what), smin(smallest_singular_value) {}
    double smin;
};

// largest singular value
inline double operator_norm(const Mat& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Mat>(m).singularValues()(0);
}

inline double operator_norm(const CMat& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<CMat>(m).singularValues()(0);
}

inline double smallest_singular_value(const Mat& m) {
    Eigen::JacobiSVD<Mat> svd(m);
    return svd.singularValues()(svd.singularValues().size() - 1);
}

// SplitMix64, used to derive independent per-cell seeds from a campaign seed
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t campaign_seed, std::uint64_t index) {
    std::uint64_t s = campaign_seed ^ (0x6A09E667F3BCC909ull + index * 0x9E3779B97F4A7C15ull);
    return splitmix64(s);
}

// Deterministic random source. The generator state evolution is fixed by the
// standard and the value mappings below are spelled out, so streams are
// reproducible across platforms and library versions.
class DetRng {
  public:
    explicit DetRng(std::uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

    std::uint64_t next_u64() { return splitmix64(state_); }

    // uniform in [0,1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    long uniform_int(long lo, long hi) {  // inclusive bounds
        return lo + static_cast<long>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    double normal() {
        // Box-Muller; second variate discarded
        double u1 = uniform(), u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
    }

  private:
    std::uint64_t state_;
};

}  // namespace bjlab
