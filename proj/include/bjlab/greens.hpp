#pragma once

// Finite-volume Green's functions G_Lambda(x; E) = (H_Lambda(x) - E I)^{-1},
// the good-Green decay classifier, and grid estimates of the bad phase set
//
//   B_N^M(omega, E) = { x : (1/M) sum_{j<M} u_N(x + j omega) <= (1-delta) log|lambda| }.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/LU>

#include "bjlab/common.hpp"
#include "bjlab/det_bounds.hpp"
#include "bjlab/operator_core.hpp"
#include "bjlab/parallel.hpp"

namespace bjlab {

struct GreenMatrix {
    Interval interval;
    int l;
    double phase;
    double energy;
    Mat entries;
    double condition;

    long size() const { return interval.size() * l; }

    // l x l block for absolute sites n, n' in [a,b]
    Mat block(long n, long np) const {
        if (!interval.contains(n) || !interval.contains(np))
            throw std::out_of_range("GreenMatrix::block: site outside interval");
        return entries.block((n - interval.a) * l, (np - interval.a) * l, l, l);
    }

    // scalar entry, local 1-based indices consistent with split_index
    double scalar(long alpha, long alpha_prime) const {
        if (alpha < 1 || alpha > size() || alpha_prime < 1 || alpha_prime > size())
            throw std::out_of_range("GreenMatrix::scalar: index outside [1, |L| l]");
        return entries(alpha - 1, alpha_prime - 1);
    }
};

// Solves (H_Lambda(x) - E I) G = I through the pivoted factorization. A
// numerically singular system raises spectral_hit_error carrying the smallest
// singular value.
inline GreenMatrix greens(const OperatorSpec& spec, double x, const Interval& iv, double E) {
    Mat h = dirichlet_real(spec, x, iv, E);
    Eigen::PartialPivLU<Mat> lu(h);
    double diag_min = std::numeric_limits<double>::infinity(), diag_max = 0.0;
    for (long i = 0; i < h.rows(); ++i) {
        double d = std::abs(lu.matrixLU()(i, i));
        diag_min = std::min(diag_min, d);
        diag_max = std::max(diag_max, d);
    }
    GreenMatrix out{iv, spec.l, x, E, lu.solve(Mat::Identity(h.rows(), h.cols())), 0.0};
    double hn = h.cwiseAbs().rowwise().sum().maxCoeff();
    double gn = out.entries.cwiseAbs().rowwise().sum().maxCoeff();
    out.condition = hn * gn;
    // LU pivots can badly overestimate the smallest singular value, so the
    // solve is screened by its residual and confirmed by an SVD before a
    // spectral hit is raised
    double residual = (h * out.entries - Mat::Identity(h.rows(), h.cols())).cwiseAbs().maxCoeff();
    if (diag_min == 0.0 || diag_min < 1e-6 * diag_max || residual > 1e-8 * out.condition) {
        double smin = smallest_singular_value(h);
        if (smin < 1e-11 * hn)
            throw spectral_hit_error(
                "greens: H - E I numerically singular at x=" + std::to_string(x), smin);
    }
    return out;
}

// --- good Green's functions ----------------------------------------------------
//
// G_Lambda is good when every block satisfies
//   ||G_(n,n')|| <= exp(-(|n-n'| - |Lambda|/50) log|lambda|).

struct GoodGreenCheck {
    bool good{true};
    long n{0}, np{0};       // worst cell
    double log_ratio{-std::numeric_limits<double>::infinity()};  // log(||block|| / bound)
};

inline GoodGreenCheck is_good_green(const GreenMatrix& g, double lambda,
                                    double divisor = 50.0) {
    if (!(std::abs(lambda) > 1.0))
        throw std::domain_error("is_good_green: requires |lambda| > 1");
    const double log_lambda = std::log(std::abs(lambda));
    const double window = static_cast<double>(g.interval.size()) / divisor;
    GoodGreenCheck out;
    for (long n = g.interval.a; n <= g.interval.b; ++n) {
        for (long np = g.interval.a; np <= g.interval.b; ++np) {
            double nrm = operator_norm(g.block(n, np));
            double log_bound = -(std::abs(static_cast<double>(n - np)) - window) * log_lambda;
            double lr = (nrm == 0.0 ? -std::numeric_limits<double>::infinity()
                                    : std::log(nrm)) - log_bound;
            if (lr > out.log_ratio) {
                out.log_ratio = lr;
                out.n = n;
                out.np = np;
            }
        }
    }
    out.good = out.log_ratio <= 0.0;
    return out;
}

// --- bad phase set ---------------------------------------------------------------

struct BadSetEstimate {
    long N;
    int M;
    double energy;
    double delta;
    int grid;
    double fraction;                              // at M
    std::vector<std::pair<int, double>> ladder;   // (M', fraction) for the doubling ladder
    std::vector<double> orbit_averages;           // per grid phase, at M
    long sentinel_count{0};
};

// Equispaced-grid estimate of the measure of B_N^M. Sentinel u-values place
// the phase in the bad set for every window containing them (conservative).
inline BadSetEstimate bad_set_estimate(const OperatorSpec& spec, long N, int M, double E, int grid,
                                       int threads = 1, std::optional<double> delta_override = {}) {
    if (M < 1) throw std::invalid_argument("bad_set_estimate: M must be >= 1");
    double delta = delta_override.value_or(1.0 / (100.0 * spec.l));
    const double threshold = (1.0 - delta) * std::log(std::abs(spec.lambda));

    // u table: row i holds u_N(x_i + j omega), j < M
    std::vector<double> table(static_cast<std::size_t>(grid) * M);
    std::vector<long> row_sentinels(static_cast<std::size_t>(grid), 0);
    parallel_for(static_cast<std::size_t>(grid), threads, [&](std::size_t i) {
        double x = static_cast<double>(i) / grid;
        for (int j = 0; j < M; ++j) {
            UValue u = u_value(spec, torus_point(x + j * spec.omega), N, E);
            if (!u.finite) ++row_sentinels[i];
            table[i * static_cast<std::size_t>(M) + static_cast<std::size_t>(j)] =
                u.finite ? u.value : -std::numeric_limits<double>::infinity();
        }
    });

    BadSetEstimate out{N, M, E, delta, grid, 0.0, {}, {}, 0};
    for (long s : row_sentinels) out.sentinel_count += s;
    out.orbit_averages.resize(static_cast<std::size_t>(grid));

    std::vector<int> ladder;
    for (int m = M; m >= 1; m /= 2) ladder.push_back(m);
    std::reverse(ladder.begin(), ladder.end());

    for (int m : ladder) {
        long bad = 0;
        for (long i = 0; i < grid; ++i) {
            double acc = 0.0;
            for (int j = 0; j < m; ++j)
                acc += table[static_cast<std::size_t>(i) * M + static_cast<std::size_t>(j)];
            double avg = acc / m;
            if (m == M) out.orbit_averages[static_cast<std::size_t>(i)] = avg;
            if (!(avg > threshold)) ++bad;  // -inf sentinels land here
        }
        double frac = static_cast<double>(bad) / grid;
        out.ladder.emplace_back(m, frac);
        if (m == M) out.fraction = frac;
    }
    return out;
}

// least-squares slope of log(fraction) against M over the strictly positive
// ladder entries; diagnostic only
inline std::optional<double> ladder_decay_slope(const BadSetEstimate& est) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [m, f] : est.ladder)
        if (f > 0.0) pts.emplace_back(static_cast<double>(m), std::log(f));
    if (pts.size() < 2) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [x, y] : pts) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    double n = static_cast<double>(pts.size());
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / denom;
}

// --- orbit searches ---------------------------------------------------------------

struct WindowTraceEntry {
    int j;
    bool spectral_hit;
    GoodGreenCheck check;
};

struct GoodWindowSearch {
    std::optional<int> j;
    std::vector<WindowTraceEntry> trace;
};

// smallest 0 <= j < M with G_N(x + j omega; E) good, with the per-j diagnostic
inline GoodWindowSearch good_window_search(const OperatorSpec& spec, double x, long N, int M,
                                           double E) {
    GoodWindowSearch out;
    for (int j = 0; j < M; ++j) {
        WindowTraceEntry entry{j, false, {}};
        try {
            GreenMatrix g = greens(spec, wrap01(x + j * spec.omega), {1, N}, E);
            entry.check = is_good_green(g, spec.lambda);
        } catch (const spectral_hit_error&) {
            entry.spectral_hit = true;
            entry.check.good = false;
        }
        out.trace.push_back(entry);
        if (entry.check.good) {
            out.j = j;
            return out;
        }
    }
    return out;
}

// fraction of n < horizon with G_N(x + n omega; E) good
inline double orbit_good_fraction(const OperatorSpec& spec, double x, long N, double E,
                                  long horizon, int threads = 1) {
    if (horizon < 1 || horizon > 1000000)
        throw std::domain_error("orbit_good_fraction: horizon must lie in [1, 1e6]");
    std::vector<char> good(static_cast<std::size_t>(horizon), 0);
    parallel_for(static_cast<std::size_t>(horizon), threads, [&](std::size_t n) {
        try {
            GreenMatrix g =
                greens(spec, wrap01(x + static_cast<double>(n) * spec.omega), {1, N}, E);
            good[n] = is_good_green(g, spec.lambda).good ? 1 : 0;
        } catch (const spectral_hit_error&) {
            good[n] = 0;
        }
    });
    long count = 0;
    for (char c : good) count += c;
    return static_cast<double>(count) / static_cast<double>(horizon);
}

// --- Diophantine preflight ----------------------------------------------------------
//
// ||k omega|| >= t / k^2 for 0 < k <= kmax; reports the smallest k^2 ||k omega||.

struct DiophantineScan {
    double t;
    long worst_k;
};

inline DiophantineScan diophantine_scan(double omega, long kmax = 100000) {
    DiophantineScan out{std::numeric_limits<double>::infinity(), 0};
    for (long k = 1; k <= kmax; ++k) {
        double v = torus_dist(static_cast<double>(k) * omega) * static_cast<double>(k) *
                   static_cast<double>(k);
        if (v < out.t) {
            out.t = v;
            out.worst_k = k;
        }
    }
    return out;
}

}  // namespace bjlab
