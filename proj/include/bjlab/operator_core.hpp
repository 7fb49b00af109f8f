#pragma once

// The quasi-periodic block Jacobi operator
//
//   [H psi]_n = -(W_{n+1} psi_{n+1} + W_n^T psi_{n-1} + R_n psi_n) + lambda F_n psi_n,
//
// its finite-volume Dirichlet matrices over integer intervals, and the maps
// between scalar and block indices.

#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bjlab/common.hpp"
#include "bjlab/trig_poly.hpp"

namespace bjlab {

// --- scalar/block index maps -------------------------------------------------
//
// Scalar index gamma in [1, N l] sits in block n(gamma) = ceil(gamma / l)
// with offset r = gamma - l n(gamma) in (-l, 0], i.e. block n covers
// gamma in ((n-1) l, n l].

struct BlockIndex {
    long n;
    int r;
};

inline long block_of(long gamma, int l) {
    if (gamma < 1) throw std::out_of_range("block_of: scalar index must be >= 1");
    return (gamma + l - 1) / l;
}

inline BlockIndex split_index(long gamma, int l) {
    long n = block_of(gamma, l);
    return {n, static_cast<int>(gamma - l * n)};
}

inline long scalar_index(const BlockIndex& bi, int l) {
    if (bi.r <= -l || bi.r > 0) throw std::out_of_range("scalar_index: offset outside (-l, 0]");
    return l * bi.n + bi.r;
}

// checked bijection for a fixed (l, N) geometry
struct IndexMap {
    int l;
    long N;

    long size() const { return N * l; }
    long block(long gamma) const {
        check(gamma);
        return block_of(gamma, l);
    }
    BlockIndex split(long gamma) const {
        check(gamma);
        return split_index(gamma, l);
    }
    long scalar(const BlockIndex& bi) const {
        long gamma = scalar_index(bi, l);
        check(gamma);
        return gamma;
    }

  private:
    void check(long gamma) const {
        if (gamma < 1 || gamma > size())
            throw std::out_of_range("IndexMap: scalar index " + std::to_string(gamma) +
                                    " outside [1," + std::to_string(size()) + "]");
    }
};

// --- model data ---------------------------------------------------------------

// Full model (l, lambda, omega, W, R, F) with V = lambda F + R.
struct OperatorSpec {
    int l;
    double lambda;
    double omega;
    double annulus_r;
    TrigMatrixPoly W;
    TrigMatrixPoly R;
    TrigMatrixPoly F;
    TrigMatrixPoly V;

    OperatorSpec(int l_, double lambda_, double omega_, double annulus_r_, TrigMatrixPoly W_,
                 TrigMatrixPoly R_, TrigMatrixPoly F_)
        : l(l_),
          lambda(lambda_),
          omega(wrap01(omega_)),
          annulus_r(annulus_r_),
          W(std::move(W_)),
          R(std::move(R_)),
          F(std::move(F_)),
          V(lambda_ * F + R) {
        if (l < 1) throw std::invalid_argument("OperatorSpec: band width l must be >= 1");
        if (lambda == 0.0) throw std::invalid_argument("OperatorSpec: coupling must be nonzero");
        if (!(annulus_r > 0.0) || annulus_r >= 1.0)
            throw std::invalid_argument("OperatorSpec: annulus_r must lie in (0,1)");
        if (W.dim() != l || R.dim() != l || F.dim() != l)
            throw std::invalid_argument("OperatorSpec: W, R, F must be l x l");
        if (!R.symmetric_on_torus()) throw std::invalid_argument("OperatorSpec: R(x) must be symmetric");
        if (!F.symmetric_on_torus()) throw std::invalid_argument("OperatorSpec: F(x) must be symmetric");
    }

    // phase of lattice site n seen from base phase x
    double site_phase(double x, long n) const { return wrap01(x + static_cast<double>(n) * omega); }

    AnnulusPoint site_point(const AnnulusPoint& p, long n) const { return p.translated(omega, n); }

    // default energy window |E| <= 4 (1+|lambda|) max(||F||, ||R||, ||W||)
    double energy_window() const {
        double scale = std::max({F.sup_norm(1.0), R.sup_norm(1.0), W.sup_norm(1.0)});
        return 4.0 * (1.0 + std::abs(lambda)) * scale;
    }
};

// smallest |det W(x)| over a probe grid; the assumption det W != 0 fails
// (numerically) when this is tiny relative to the largest value
struct DetWProbe {
    double min_abs;
    double max_abs;
    bool nonvanishing;
};

inline DetWProbe probe_det_w(const OperatorSpec& spec, int grid = 128) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (int j = 0; j < grid; ++j) {
        double d = std::abs(spec.W.eval_torus(static_cast<double>(j) / grid).determinant());
        lo = std::min(lo, d);
        hi = std::max(hi, d);
    }
    return {lo, hi, hi > 1e-12};
}

// --- states -------------------------------------------------------------------

// finitely supported sequence of l-vectors; zero outside the stored window
struct BlockSequence {
    int dim{1};
    long first{0};
    std::vector<Vec> blocks;

    long last() const { return first + static_cast<long>(blocks.size()) - 1; }
    bool stores(long n) const { return n >= first && n <= last(); }
    Vec block(long n) const {
        if (!stores(n)) return Vec::Zero(dim);
        return blocks[static_cast<std::size_t>(n - first)];
    }
    double norm() const {
        double s = 0.0;
        for (const auto& b : blocks) s += b.squaredNorm();
        return std::sqrt(s);
    }
};

// [H psi]_n = -(W_{n+1} psi_{n+1} + W_n^T psi_{n-1}) + V_n psi_n with
// V = lambda F + R, matching the block-matrix form of H and the diagonal
// split used by the determinant bounds
inline Vec apply(const OperatorSpec& spec, double x, const BlockSequence& psi, long n) {
    Mat Wn = spec.W.eval_torus(spec.site_phase(x, n));
    Mat Wn1 = spec.W.eval_torus(spec.site_phase(x, n + 1));
    Mat Vn = spec.V.eval_torus(spec.site_phase(x, n));
    return -(Wn1 * psi.block(n + 1) + Wn.transpose() * psi.block(n - 1)) + Vn * psi.block(n);
}

// --- Dirichlet matrices -------------------------------------------------------

// H_Lambda(.) - E I over Lambda = [a,b], an (N l) x (N l) block-tridiagonal
// matrix with diagonal blocks V_n - E I and off-diagonal blocks -W_{n+1} /
// -W_{n+1}^T; site n uses the translate by n omega.
struct DirichletMatrix {
    Interval interval;
    int l;
    double energy;
    AnnulusPoint point;
    CMat entries;

    long blocks() const { return interval.size(); }
    long size() const { return interval.size() * l; }

    // l x l block for absolute sites n, n' in [a,b]
    CMat block(long n, long np) const {
        if (!interval.contains(n) || !interval.contains(np))
            throw std::out_of_range("DirichletMatrix::block: site outside interval");
        return entries.block((n - interval.a) * l, (np - interval.a) * l, l, l);
    }

    // real part; valid on the torus, where the matrix is real symmetric
    Mat real_entries(double tol = 1e-9) const {
        if (entries.imag().cwiseAbs().maxCoeff() > tol * (1.0 + entries.cwiseAbs().maxCoeff()))
            throw std::logic_error("DirichletMatrix: non-real entries off the torus");
        return entries.real();
    }
};

namespace detail {

// shared block-tridiagonal fill; Diag(j) and Hop(j) give the blocks of the
// j-th site (j = 0..N-1 for sites a..b) and of the coupling a+j <-> a+j+1
template <class MatT, class DiagFn, class HopFn>
MatT fill_block_tridiagonal(long N, int l, DiagFn&& diag, HopFn&& hop) {
    MatT out = MatT::Zero(N * l, N * l);
    for (long j = 0; j < N; ++j) {
        out.block(j * l, j * l, l, l) = diag(j);
        if (j + 1 < N) {
            MatT w = hop(j);
            out.block(j * l, (j + 1) * l, l, l) = -w;
            out.block((j + 1) * l, j * l, l, l) = -w.transpose();
        }
    }
    return out;
}

}  // namespace detail

// fast real path used by campaigns; x is a torus phase
inline Mat dirichlet_real(const OperatorSpec& spec, double x, const Interval& iv, double E) {
    const int l = spec.l;
    Mat eye = Mat::Identity(l, l);
    return detail::fill_block_tridiagonal<Mat>(
        iv.size(), l,
        [&](long j) -> Mat { return spec.V.eval_torus(spec.site_phase(x, iv.a + j)) - E * eye; },
        [&](long j) -> Mat { return spec.W.eval_torus(spec.site_phase(x, iv.a + j + 1)); });
}

inline CMat dirichlet_complex(const OperatorSpec& spec, const AnnulusPoint& p, const Interval& iv,
                              double E) {
    require_in_annulus(p, spec.annulus_r);
    const int l = spec.l;
    CMat eye = CMat::Identity(l, l);
    return detail::fill_block_tridiagonal<CMat>(
        iv.size(), l,
        [&](long j) -> CMat { return spec.V.eval(spec.site_point(p, iv.a + j)) - E * eye; },
        [&](long j) -> CMat { return spec.W.eval(spec.site_point(p, iv.a + j + 1)); });
}

inline DirichletMatrix dirichlet_matrix(const OperatorSpec& spec, const AnnulusPoint& p,
                                        const Interval& iv, double E) {
    DirichletMatrix out{iv, spec.l, E, p, {}};
    if (p.on_torus())
        out.entries = dirichlet_real(spec, p.phase, iv, E).cast<Complex>();
    else
        out.entries = dirichlet_complex(spec, p, iv, E);
    return out;
}

inline DirichletMatrix dirichlet_matrix(const OperatorSpec& spec, double x, const Interval& iv,
                                        double E) {
    return dirichlet_matrix(spec, torus_point(x), iv, E);
}

}  // namespace bjlab
