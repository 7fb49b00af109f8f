#pragma once

// The subharmonic observable
//
//     u_N(z) = (1/(N l)) log |det[H_N(z) - E I]|,
//
// its circle averages, and the machinery around the average lower bound
// log|lambda| - C: the split H_N - E I = lambda D_N + B_N, the
// eps0 circle scan for det[F(z) - t I], the determinant-norm inequality
// |det(I+g)| >= (1-||g||)^m, and radial log-convexity of circle means.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bjlab/common.hpp"
#include "bjlab/minor_paths.hpp"
#include "bjlab/operator_core.hpp"
#include "bjlab/parallel.hpp"

namespace bjlab {

// log of the sentinel threshold on raw determinant magnitudes
inline constexpr double sentinel_log_threshold = -690.77552789821368;  // log(1e-300)

struct UValue {
    double value{0.0};
    bool finite{true};  // false: |det| fell below 1e-300, value is -inf sentinel
};

inline UValue from_log_abs_det(const LogAbsDet& d, long m) {
    if (d.zero || d.log_abs < sentinel_log_threshold)
        return {-std::numeric_limits<double>::infinity(), false};
    return {d.log_abs / static_cast<double>(m), true};
}

inline UValue u_value(const OperatorSpec& spec, const AnnulusPoint& z, long N, double E) {
    require_in_annulus(z, spec.annulus_r);
    const long m = N * spec.l;
    if (z.on_torus()) {
        Mat g = dirichlet_real(spec, z.phase, {1, N}, E);
        return from_log_abs_det(log_abs_det(g), m);
    }
    CMat g = dirichlet_complex(spec, z, {1, N}, E);
    return from_log_abs_det(log_abs_det(g), m);
}

// equispaced samples of u_N on the circle |z| = radius; the sample count must
// be a power of two >= 256
struct SubharmonicSamples {
    double radius;
    long N;
    int l;
    double energy;
    std::vector<UValue> samples;

    long sentinel_count() const {
        long c = 0;
        for (const auto& s : samples)
            if (!s.finite) ++c;
        return c;
    }

    // mean over finite samples
    double mean() const {
        double acc = 0.0;
        long n = 0;
        for (const auto& s : samples)
            if (s.finite) {
                acc += s.value;
                ++n;
            }
        return n ? acc / static_cast<double>(n) : -std::numeric_limits<double>::infinity();
    }
};

inline bool is_power_of_two(long v) { return v > 0 && (v & (v - 1)) == 0; }

inline SubharmonicSamples circle_samples(const OperatorSpec& spec, double radius, long N, double E,
                                         long count, int threads = 1) {
    if (!is_power_of_two(count) || count < 256)
        throw std::invalid_argument("circle_samples: count must be a power of two >= 256");
    SubharmonicSamples out{radius, N, spec.l, E, {}};
    out.samples.resize(static_cast<std::size_t>(count));
    parallel_for(static_cast<std::size_t>(count), threads, [&](std::size_t j) {
        out.samples[j] =
            u_value(spec, {radius, static_cast<double>(j) / static_cast<double>(count)}, N, E);
    });
    return out;
}

// --- Hadamard-style upper bound ----------------------------------------------
//
// u(z) <= log|lambda| + O(1) uniformly on the annulus. The scan reports the
// largest gap u - log|lambda| on a circle, for N and 2N; the campaign passes
// when the gap is stable under doubling N.

struct HadamardCheck {
    double gap_n;
    double gap_2n;
    long sentinels;
    double tolerance;
    bool pass;
};

inline double max_u_gap(const OperatorSpec& spec, double radius, long N, double E, long grid,
                        int threads, long* sentinels) {
    SubharmonicSamples s = circle_samples(spec, radius, N, E, grid, threads);
    double gap = -std::numeric_limits<double>::infinity();
    for (const auto& v : s.samples)
        if (v.finite) gap = std::max(gap, v.value);
    if (sentinels) *sentinels += s.sentinel_count();
    return gap - std::log(std::abs(spec.lambda));
}

inline HadamardCheck hadamard_upper_check(const OperatorSpec& spec, long N, double E, double radius,
                                          long grid = 512, int threads = 1) {
    HadamardCheck out{0.0, 0.0, 0, 0.0, false};
    out.gap_n = max_u_gap(spec, radius, N, E, grid, threads, &out.sentinels);
    out.gap_2n = max_u_gap(spec, radius, 2 * N, E, grid, threads, &out.sentinels);
    // stability relative to the natural scale of the bound, log|lambda|
    out.tolerance = std::max(0.1 * std::abs(out.gap_n), 0.1 * std::log(std::abs(spec.lambda)));
    out.pass = std::isfinite(out.gap_n) && std::isfinite(out.gap_2n) &&
               std::abs(out.gap_2n - out.gap_n) <= out.tolerance;
    return out;
}

// --- determinant-norm inequality ----------------------------------------------
//
// |det(I + g)| >= (1 - ||g||)^m whenever ||g|| < 1.

inline bool det_norm_inequality_check(const Mat& g) {
    double nrm = operator_norm(g);
    if (!(nrm < 1.0))
        throw std::domain_error("det_norm_inequality_check: requires ||g|| < 1");
    const long m = g.rows();
    Mat a = Mat::Identity(m, m) + g;
    LogAbsDet d = log_abs_det<double>(a);
    double rhs = static_cast<double>(m) * std::log1p(-nrm);
    if (d.zero) return false;
    return d.log_abs >= rhs - 1e-9 * (1.0 + std::abs(rhs));
}

struct DetNormCampaign {
    long trials;
    long violations;
    double min_slack;  // smallest log|det(I+g)| - m log(1-||g||) seen
};

inline DetNormCampaign det_norm_campaign(std::uint64_t seed, long trials = 10000, int max_m = 32) {
    DetNormCampaign out{trials, 0, std::numeric_limits<double>::infinity()};
    for (long t = 0; t < trials; ++t) {
        DetRng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        int m = static_cast<int>(rng.uniform_int(1, max_m));
        Mat g(m, m);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j) g(i, j) = rng.normal();
        double target = rng.uniform(0.0, 0.999);
        double nrm = operator_norm(g);
        if (nrm > 0.0) g *= target / nrm;
        nrm = operator_norm(g);
        if (!(nrm < 1.0)) g *= 0.5, nrm = operator_norm(g);
        Mat a = Mat::Identity(m, m) + g;
        LogAbsDet d = log_abs_det<double>(a);
        double slack = (d.zero ? -std::numeric_limits<double>::infinity() : d.log_abs) -
                       m * std::log1p(-nrm);
        out.min_slack = std::min(out.min_slack, slack);
        if (slack < -1e-9 * (1.0 + std::abs(m * std::log1p(-nrm)))) ++out.violations;
    }
    return out;
}

// --- eps0 circle scan -----------------------------------------------------------
//
// Searches radii y in [delta/2, 2 delta] for the circle |z| = 1 + y maximizing
//
//     min over (z on circle, t in [t_lo, t_hi]) of |det[F(z) - t I]|^{1/l},
//
// and returns that radius y0 and value eps0. Per circle point the eigenvalues
// of F(z) are computed once; |det[F(z)-tI]| = prod |mu_j(z) - t| then scans the
// t-grid cheaply. Degenerate data (constant eigenvalue branches hit by the
// t-range) drives the minimum to zero and the scan reports failure.

struct Epsilon0Scan {
    bool found{false};
    double y0{0.0};
    double eps0{0.0};
    double t_lo{0.0}, t_hi{0.0}, t_step{0.0};
    int radii{0};
    int circle_grid{0};
    std::string message;
};

inline Epsilon0Scan epsilon0_scan(const TrigMatrixPoly& F, double delta, double t_lo, double t_hi,
                                  int circle_grid = 256, int radii = 64,
                                  double t_step_factor = 1e-3) {
    if (!(delta > 0.0)) throw std::invalid_argument("epsilon0_scan: delta must be positive");
    if (!(t_hi > t_lo)) throw std::invalid_argument("epsilon0_scan: empty t-range");
    const int l = F.dim();
    const double span = t_hi - t_lo;
    const long t_steps = std::max<long>(2, static_cast<long>(std::ceil(1.0 / t_step_factor)));

    Epsilon0Scan out;
    out.t_lo = t_lo;
    out.t_hi = t_hi;
    out.t_step = span / static_cast<double>(t_steps);
    out.radii = radii;
    out.circle_grid = circle_grid;

    Eigen::ComplexEigenSolver<CMat> solver;
    double best = -1.0, best_y = 0.0;
    for (int ri = 0; ri < radii; ++ri) {
        double y = (radii == 1) ? delta
                                : delta / 2.0 + (2.0 * delta - delta / 2.0) * ri / (radii - 1.0);
        double circle_min = std::numeric_limits<double>::infinity();
        for (int j = 0; j < circle_grid && circle_min > 0.0; ++j) {
            CMat fz = F.eval({1.0 + y, static_cast<double>(j) / circle_grid});
            CVec mu;
            if (l == 1) {
                mu.resize(1);
                mu(0) = fz(0, 0);
            } else {
                solver.compute(fz, false);
                mu = solver.eigenvalues();
            }
            for (long k = 0; k <= t_steps; ++k) {
                double t = t_lo + span * static_cast<double>(k) / static_cast<double>(t_steps);
                double logabs = 0.0;
                for (int q = 0; q < l; ++q) logabs += std::log(std::abs(mu(q) - t));
                circle_min = std::min(circle_min, std::exp(logabs / l));
            }
        }
        if (circle_min > best) {
            best = circle_min;
            best_y = y;
        }
    }
    out.y0 = best_y;
    out.eps0 = std::max(best, 0.0);
    out.found = best > 1e-12;
    if (!out.found)
        out.message =
            "no good circle found: every scanned radius has a near-vanishing "
            "det[F(z) - t I]; shrink the t-range or refine the t-grid/degree";
    return out;
}

// --- the split H_N - E I = lambda D_N + B_N --------------------------------------

struct DiagonalSplit {
    CMat D;  // blockdiag(F_n(z) - (E/lambda) I)
    CMat B;  // tridiagonal remainder: R_n on the diagonal, -W off it
};

inline DiagonalSplit diagonal_split(const OperatorSpec& spec, const AnnulusPoint& p,
                                    const Interval& iv, double E) {
    const int l = spec.l;
    const long N = iv.size();
    DiagonalSplit out;
    out.D = CMat::Zero(N * l, N * l);
    out.B = detail::fill_block_tridiagonal<CMat>(
        N, l, [&](long j) -> CMat { return spec.R.eval(spec.site_point(p, iv.a + j)); },
        [&](long j) -> CMat { return spec.W.eval(spec.site_point(p, iv.a + j + 1)); });
    CMat eye = CMat::Identity(l, l);
    for (long j = 0; j < N; ++j)
        out.D.block(j * l, j * l, l, l) =
            spec.F.eval(spec.site_point(p, iv.a + j)) - (E / spec.lambda) * eye;
    return out;
}

// |log|det(H-E)| - (N l log|lambda| + log|det D| + log|det(I + D^{-1}B/lambda)|)|,
// relative to max(1, |log|det(H-E)||); requires D invertible
inline double factorization_residual(const OperatorSpec& spec, const AnnulusPoint& p, long N,
                                     double E) {
    DiagonalSplit split = diagonal_split(spec, p, {1, N}, E);
    CMat h = dirichlet_complex(spec, p, {1, N}, E);
    LogAbsDet direct = log_abs_det(h);
    LogAbsDet dd = log_abs_det(split.D);
    if (dd.zero) throw std::domain_error("factorization_residual: D_N singular");
    const long m = N * spec.l;
    CMat corr = CMat::Identity(m, m) +
                Eigen::PartialPivLU<CMat>(split.D).solve(split.B) / spec.lambda;
    LogAbsDet dc = log_abs_det(corr);
    double recon = m * std::log(std::abs(spec.lambda)) + dd.log_abs + dc.log_abs;
    return std::abs(direct.log_abs - recon) / std::max(1.0, std::abs(direct.log_abs));
}

// smallest |lambda| keeping ||lambda^{-1} D_N^{-1} B_N|| <= 1/2 on the circle
// |z| = 1 + y0, i.e. 2 max_z ||D_N^{-1}(z) B_N(z)||
inline double lambda0_estimate(const OperatorSpec& spec, long N, double E, double y0,
                               int grid = 64, int threads = 1) {
    std::vector<double> norms(static_cast<std::size_t>(grid), 0.0);
    parallel_for(static_cast<std::size_t>(grid), threads, [&](std::size_t j) {
        AnnulusPoint p{1.0 + y0, static_cast<double>(j) / grid};
        DiagonalSplit split = diagonal_split(spec, p, {1, N}, E);
        Eigen::PartialPivLU<CMat> lu(split.D);
        if (std::abs(lu.determinant()) == 0.0) {
            norms[j] = std::numeric_limits<double>::infinity();
            return;
        }
        norms[j] = operator_norm(CMat(lu.solve(split.B)));
    });
    double worst = 0.0;
    for (double v : norms) worst = std::max(worst, v);
    return 2.0 * worst;
}

// --- phase-averaged lower bound ----------------------------------------------
//
// Equispaced quadrature of u_N over the torus; the deficit is
// log|lambda| - average. Sentinel samples (eigenvalue hits) are excluded and
// counted; above 1% of the grid they raise a warning flag.

struct LowerBoundResult {
    double energy;
    double average;
    double deficit;
    long sentinels;
};

struct LowerBoundReportData {
    std::vector<LowerBoundResult> per_energy;
    double max_deficit{-std::numeric_limits<double>::infinity()};
    double sentinel_fraction{0.0};
    Epsilon0Scan eps_scan;
    double lambda0{0.0};
    bool lambda_warning{false};
};

inline LowerBoundReportData verify_lower_bound(const OperatorSpec& spec, long N,
                                               const std::vector<double>& energies,
                                               long quadrature, int threads = 1,
                                               std::optional<double> delta = {}) {
    if (quadrature < 512)
        throw std::invalid_argument("verify_lower_bound: quadrature must be >= 512");
    LowerBoundReportData out;
    const double log_lambda = std::log(std::abs(spec.lambda));

    double emax = 0.0;
    for (double e : energies) emax = std::max(emax, std::abs(e));
    double d = delta.value_or(0.05 * spec.annulus_r);
    double t_pad = spec.F.sup_norm(1.0) + emax / std::abs(spec.lambda);
    out.eps_scan = epsilon0_scan(spec.F, d, -t_pad, t_pad);
    if (out.eps_scan.found) {
        out.lambda0 = lambda0_estimate(spec, std::min<long>(N, 8), emax, out.eps_scan.y0, 64,
                                       threads);
        out.lambda_warning = std::abs(spec.lambda) < out.lambda0;
    }

    long total = 0, sentinels = 0;
    for (double E : energies) {
        SubharmonicSamples s = circle_samples(spec, 1.0, N, E, quadrature, threads);
        LowerBoundResult r{E, s.mean(), log_lambda - s.mean(), s.sentinel_count()};
        out.per_energy.push_back(r);
        out.max_deficit = std::max(out.max_deficit, r.deficit);
        total += quadrature;
        sentinels += r.sentinels;
    }
    out.sentinel_fraction = total ? static_cast<double>(sentinels) / total : 0.0;
    return out;
}

// --- Hardy convexity of radial means -------------------------------------------
//
// m(s) = circle average of u_N at radius s must be convex in log s: for each
// consecutive triple, m(s2) may exceed the chord through (log s1, m1) and
// (log s3, m3) by at most the quadrature tolerance.

struct HardyTriple {
    double s1, s2, s3;
    double excess;  // m(s2) - chord value
};

struct HardyCheckData {
    std::vector<double> radii;
    std::vector<double> means;
    std::vector<HardyTriple> triples;
    long sentinels{0};
    double tolerance{1e-3};
    bool pass{true};
};

inline HardyCheckData hardy_convexity_check(const OperatorSpec& spec, long N, double E,
                                            std::vector<double> radii, long quadrature = 512,
                                            int threads = 1, double tolerance = 1e-3) {
    if (radii.size() < 5)
        throw std::invalid_argument("hardy_convexity_check: need at least 5 radii");
    std::sort(radii.begin(), radii.end());
    for (double s : radii)
        if (!(s > 1.0 - spec.annulus_r && s < 1.0 + spec.annulus_r))
            throw std::domain_error("hardy_convexity_check: radius outside the annulus");

    HardyCheckData out;
    out.radii = radii;
    out.tolerance = tolerance;
    for (double s : radii) {
        SubharmonicSamples samples = circle_samples(spec, s, N, E, quadrature, threads);
        out.means.push_back(samples.mean());
        out.sentinels += samples.sentinel_count();
    }
    for (std::size_t i = 1; i + 1 < radii.size(); ++i) {
        double l1 = std::log(radii[i - 1]), l2 = std::log(radii[i]), l3 = std::log(radii[i + 1]);
        double chord = out.means[i - 1] + (out.means[i + 1] - out.means[i - 1]) * (l2 - l1) / (l3 - l1);
        HardyTriple t{radii[i - 1], radii[i], radii[i + 1], out.means[i] - chord};
        out.triples.push_back(t);
        if (t.excess > tolerance) out.pass = false;
    }
    return out;
}

}  // namespace bjlab
