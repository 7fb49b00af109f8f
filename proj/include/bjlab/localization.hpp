#pragma once

// Numerical Anderson-localization detector: eigen-decomposition of finite
// boxes, exponential decay-rate fits of eigenvectors, the Poisson identity
//
//   psi_j = G_{L,(j,a)} W_a^T psi_{a-1} + G_{L,(j,b)} W_{b+1} psi_{b+1},
//
// a distance-to-spectrum bound for almost-eigenvalues, and a transfer-cocycle
// Lyapunov diagnostic.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "bjlab/common.hpp"
#include "bjlab/greens.hpp"
#include "bjlab/operator_core.hpp"
#include "bjlab/parallel.hpp"

namespace bjlab {

// --- decay-rate fit ---------------------------------------------------------

struct DecayFit {
    bool defined{false};
    double rate{0.0};       // c in ||psi_n|| ~ e^{-c |n - n*|}
    double intercept{0.0};
    double r_squared{0.0};
    long n_star{0};
    int points{0};
};

// Least-squares fit of log||psi_n|| against |n - n*|, using blocks with norm
// above 1e-14 and |n - n*| >= 2. Fewer than 4 usable points leaves the rate
// undefined.
inline DecayFit decay_rate(const std::vector<double>& block_norms, long first_site) {
    DecayFit out;
    if (block_norms.empty()) return out;
    std::size_t peak = 0;
    for (std::size_t i = 1; i < block_norms.size(); ++i)
        if (block_norms[i] > block_norms[peak]) peak = i;
    out.n_star = first_site + static_cast<long>(peak);

    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    for (std::size_t i = 0; i < block_norms.size(); ++i) {
        long dist = std::labs(static_cast<long>(i) - static_cast<long>(peak));
        if (dist < 2 || block_norms[i] <= 1e-14) continue;
        double x = static_cast<double>(dist), y = std::log(block_norms[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        ++n;
    }
    out.points = n;
    if (n < 4) return out;
    double denom = n * sxx - sx * sx;
    if (denom == 0.0) return out;
    double slope = (n * sxy - sx * sy) / denom;
    out.rate = -slope;
    out.intercept = (sy - slope * sx) / n;
    double ss_tot = syy - sy * sy / n;
    double ss_res = 0.0;
    // second pass for the residual sum
    for (std::size_t i = 0; i < block_norms.size(); ++i) {
        long dist = std::labs(static_cast<long>(i) - static_cast<long>(peak));
        if (dist < 2 || block_norms[i] <= 1e-14) continue;
        double pred = out.intercept + slope * static_cast<double>(dist);
        double r = std::log(block_norms[i]) - pred;
        ss_res += r * r;
    }
    out.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
    out.defined = true;
    return out;
}

// --- finite-box eigenpairs -----------------------------------------------------

struct EigenPair {
    double energy;
    BlockSequence psi;  // normalized eigenvector over the box
    std::vector<double> block_norms;
    DecayFit fit;
};

// Full spectrum of the real symmetric Dirichlet matrix over the box, energies
// ascending, eigenvectors orthonormal.
inline std::vector<EigenPair> eigensolve(const OperatorSpec& spec, double x, const Interval& box) {
    Mat h = dirichlet_real(spec, x, box, 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (h + h.transpose()));
    const int l = spec.l;
    const long N = box.size();
    std::vector<EigenPair> out;
    out.reserve(static_cast<std::size_t>(N) * l);
    for (long k = 0; k < N * l; ++k) {
        EigenPair pair;
        pair.energy = solver.eigenvalues()(k);
        pair.psi.dim = l;
        pair.psi.first = box.a;
        pair.psi.blocks.resize(static_cast<std::size_t>(N));
        pair.block_norms.resize(static_cast<std::size_t>(N));
        for (long j = 0; j < N; ++j) {
            pair.psi.blocks[static_cast<std::size_t>(j)] =
                solver.eigenvectors().col(k).segment(j * l, l);
            pair.block_norms[static_cast<std::size_t>(j)] =
                pair.psi.blocks[static_cast<std::size_t>(j)].norm();
        }
        pair.fit = decay_rate(pair.block_norms, box.a);
        out.push_back(std::move(pair));
    }
    return out;
}

// --- Poisson identity ------------------------------------------------------------

// ||psi_j - G_{L,(j,a)} W_a^T psi_{a-1} - G_{L,(j,b)} W_{b+1} psi_{b+1}||_2.
// Exact (up to solver precision) whenever H psi = E psi holds on the rows of
// [a,b], e.g. for eigenvectors of a strictly larger box.
inline double poisson_identity_residual(const OperatorSpec& spec, double x,
                                        const BlockSequence& psi, double E, const Interval& iv,
                                        long j) {
    if (!iv.contains(j))
        throw std::out_of_range("poisson_identity_residual: j outside the interval");
    GreenMatrix g = greens(spec, x, iv, E);
    Mat wa = spec.W.eval_torus(spec.site_phase(x, iv.a));
    Mat wb1 = spec.W.eval_torus(spec.site_phase(x, iv.b + 1));
    Vec rhs = g.block(j, iv.a) * (wa.transpose() * psi.block(iv.a - 1)) +
              g.block(j, iv.b) * (wb1 * psi.block(iv.b + 1));
    return (psi.block(j) - rhs).norm();
}

// --- distance to spectrum ---------------------------------------------------------

struct DistanceCheck {
    bool ok;
    double dist;   // dist(E, spectrum H_(-N0,N0)(x))
    double bound;  // K eta with K = 2 ||W||_sup ||G_Lambda(x;E)||
};

// Verifies dist(E, spec H_(-N0,N0)(x)) <= 2 ||W||_sup ||G|| eta for a
// generalized-eigenvector surrogate with ||psi_{+-N0}|| <= eta. For the
// symmetric Dirichlet matrix ||G||_2 is exactly 1/dist.
inline DistanceCheck distance_to_spectrum_check(const OperatorSpec& spec, double x, long N0,
                                                double E, double eta) {
    if (N0 < 2) throw std::invalid_argument("distance_to_spectrum_check: N0 must be >= 2");
    Interval inner{-N0 + 1, N0 - 1};
    Mat h = dirichlet_real(spec, x, inner, 0.0);
    Eigen::SelfAdjointEigenSolver<Mat> solver(0.5 * (h + h.transpose()),
                                              Eigen::EigenvaluesOnly);
    double dist = std::numeric_limits<double>::infinity();
    for (long i = 0; i < solver.eigenvalues().size(); ++i)
        dist = std::min(dist, std::abs(solver.eigenvalues()(i) - E));
    double w_sup = spec.W.sup_norm(1.0);
    if (dist == 0.0) return {true, 0.0, std::numeric_limits<double>::infinity()};
    double bound = 2.0 * w_sup * (1.0 / dist) * eta;
    return {dist <= bound, dist, bound};
}

// --- Lyapunov diagnostic -----------------------------------------------------------

struct LyapunovResult {
    std::vector<double> exponents;  // top l, non-increasing
    long flagged_steps{0};
    bool aborted{false};
};

// Iterates the 2l-dimensional transfer cocycle of the difference equation
//   psi_{n+1} = W_{n+1}^{-1} ((V_n - E) psi_n - W_n^T psi_{n-1})
// on an l-frame with periodic QR re-orthonormalization and returns the top l
// exponents. Steps with near-singular W_{n+1} are flagged; past a 0.1% flag
// rate the run aborts.
inline LyapunovResult lyapunov_diagnostic(const OperatorSpec& spec, double E, long num_steps,
                                          double x = 0.0, int renorm_period = 8) {
    const int l = spec.l;
    LyapunovResult out;
    out.exponents.assign(static_cast<std::size_t>(l), 0.0);

    Eigen::MatrixXd frame = Mat::Zero(2 * l, l);
    frame.topRows(l) = Mat::Identity(l, l);
    Vec accum = Vec::Zero(l);

    Mat a(2 * l, 2 * l);
    long max_flags = std::max<long>(1, num_steps / 1000);
    for (long n = 0; n < num_steps; ++n) {
        Mat wn = spec.W.eval_torus(spec.site_phase(x, n));
        Mat wn1 = spec.W.eval_torus(spec.site_phase(x, n + 1));
        Mat vn = spec.V.eval_torus(spec.site_phase(x, n));
        Eigen::PartialPivLU<Mat> lu(wn1);
        double dmin = std::numeric_limits<double>::infinity(), dmax = 0.0;
        for (int i = 0; i < l; ++i) {
            double d = std::abs(lu.matrixLU()(i, i));
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        if (dmin == 0.0 || dmin < 1e-12 * dmax) {
            if (++out.flagged_steps > max_flags) {
                out.aborted = true;
                return out;
            }
            continue;  // skip the unresolvable step
        }
        a.topLeftCorner(l, l) = lu.solve(vn - E * Mat::Identity(l, l));
        a.topRightCorner(l, l) = -lu.solve(wn.transpose());
        a.bottomLeftCorner(l, l) = Mat::Identity(l, l);
        a.bottomRightCorner(l, l) = Mat::Zero(l, l);
        frame = a * frame;
        if ((n + 1) % renorm_period == 0 || n + 1 == num_steps) {
            Eigen::HouseholderQR<Mat> qr(frame);
            Mat r = qr.matrixQR().topRows(l).triangularView<Eigen::Upper>();
            for (int i = 0; i < l; ++i) accum(i) += std::log(std::abs(r(i, i)));
            frame = qr.householderQ() * Mat::Identity(2 * l, l);
        }
    }
    for (int i = 0; i < l; ++i) out.exponents[static_cast<std::size_t>(i)] = accum(i) / num_steps;
    std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());
    return out;
}

// --- localization campaign ----------------------------------------------------------

struct LocalizationOptions {
    double inside_low = 2.0;    // peak filter: inside_low * a <= n*
    double inside_high = 2.0;   //              n* <= b / inside_high
    double rate_bar = 0.5;      // localized when c >= rate_bar * |log|lambda||
    std::optional<double> energy_window;  // keep |E| <= window; absent keeps all
};

struct LocalizationRow {
    double energy;
    long n_star;
    double rate;
    double r_squared;
    bool defined;
    bool localized;
};

struct LocalizationReport {
    Interval box{1, 1};
    double phase{0.0};
    double lambda{0.0};
    double rate_bar{0.0};
    long tested{0};
    double fraction_localized{0.0};
    double median_rate{0.0};
    double median_ratio{0.0};  // median rate / |log|lambda||
    std::vector<LocalizationRow> rows;
    std::vector<EigenPair> pairs;  // the tested eigenpairs, for CSV export
};

// Eigen-decomposes the box, keeps eigenpairs whose peak block is well inside
// (inside_low * a <= n* <= b / inside_high), fits decay rates, and reports
// the fraction clearing rate_bar * |log|lambda|| together with the median
// rate. Peaks near the box edges are excluded to avoid Dirichlet artifacts.
inline LocalizationReport localization_campaign(const OperatorSpec& spec, double x,
                                                const Interval& box,
                                                const LocalizationOptions& opt = {}) {
    LocalizationReport report;
    report.box = box;
    report.phase = x;
    report.lambda = spec.lambda;
    const double log_lambda = std::abs(std::log(std::abs(spec.lambda)));
    report.rate_bar = opt.rate_bar * log_lambda;

    std::vector<EigenPair> pairs = eigensolve(spec, x, box);
    std::vector<double> rates;
    long localized = 0;
    for (auto& pair : pairs) {
        if (opt.energy_window && std::abs(pair.energy) > *opt.energy_window) continue;
        long n_star = pair.fit.n_star;
        if (static_cast<double>(n_star) < opt.inside_low * static_cast<double>(box.a)) continue;
        if (static_cast<double>(n_star) > static_cast<double>(box.b) / opt.inside_high) continue;
        LocalizationRow row{pair.energy, n_star,          pair.fit.rate,
                            pair.fit.r_squared, pair.fit.defined, false};
        if (pair.fit.defined) {
            rates.push_back(pair.fit.rate);
            row.localized = pair.fit.rate >= report.rate_bar;
            if (row.localized) ++localized;
        }
        report.rows.push_back(row);
        report.pairs.push_back(std::move(pair));
    }
    report.tested = static_cast<long>(report.rows.size());
    if (report.tested > 0)
        report.fraction_localized = static_cast<double>(localized) / report.tested;
    if (!rates.empty()) {
        std::sort(rates.begin(), rates.end());
        std::size_t mid = rates.size() / 2;
        report.median_rate = rates.size() % 2 ? rates[mid] : 0.5 * (rates[mid - 1] + rates[mid]);
        report.median_ratio = log_lambda > 0.0 ? report.median_rate / log_lambda : 0.0;
    }
    return report;
}

}  // namespace bjlab
