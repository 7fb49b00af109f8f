#pragma once

// Matrix-valued trigonometric polynomials on the torus,
//
//     M(x) = sum_{|k| <= d} C_k e(k x),      e(x) = exp(2 pi i x),
//
// evaluated on the annulus { 1-r < |z| < 1+r } via z = s e(x) and
// M(z) = sum C_k z^k. Values on the real torus are real matrices; this is
// equivalent to C_{-k} = conj(C_k) entrywise, which the class makes
// structural by storing only the k >= 0 half.

#include <algorithm>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "bjlab/common.hpp"

namespace bjlab {

class TrigMatrixPoly {
  public:
    // coeffs[k] is C_k for k = 0..degree; C_{-k} := conj(C_k)
    TrigMatrixPoly(int dim, std::vector<CMat> coeffs) : dim_(dim), coeffs_(std::move(coeffs)) {
        if (dim_ < 1) throw std::invalid_argument("TrigMatrixPoly: dimension must be >= 1");
        if (coeffs_.empty()) coeffs_.emplace_back(CMat::Zero(dim_, dim_));
        for (const auto& c : coeffs_)
            if (c.rows() != dim_ || c.cols() != dim_)
                throw std::invalid_argument("TrigMatrixPoly: coefficient dimension mismatch");
        if (coeffs_[0].imag().cwiseAbs().maxCoeff() > 1e-12 * (1.0 + coeff_scale()))
            throw std::invalid_argument(
                "TrigMatrixPoly: constant-mode coefficient must be real for real torus values");
        coeffs_[0] = coeffs_[0].real().cast<Complex>();
        trim();
    }

    static TrigMatrixPoly zero(int dim) { return TrigMatrixPoly(dim, {CMat::Zero(dim, dim)}); }

    static TrigMatrixPoly constant(const Mat& value) {
        return TrigMatrixPoly(static_cast<int>(value.rows()), {value.cast<Complex>()});
    }

    // builds from a full two-sided table; rejects tables violating
    // C_{-k} = conj(C_k)
    static TrigMatrixPoly from_two_sided(int dim, int degree, const std::vector<CMat>& table) {
        if (static_cast<int>(table.size()) != 2 * degree + 1)
            throw std::invalid_argument("from_two_sided: table must hold 2*degree+1 coefficients");
        double scale = 0.0;
        for (const auto& c : table) scale = std::max(scale, c.cwiseAbs().maxCoeff());
        std::vector<CMat> half(static_cast<std::size_t>(degree) + 1);
        for (int k = 0; k <= degree; ++k) {
            const CMat& pos = table[static_cast<std::size_t>(degree + k)];
            const CMat& neg = table[static_cast<std::size_t>(degree - k)];
            if ((neg - pos.conjugate()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + scale))
                throw std::invalid_argument(
                    "from_two_sided: reality violated, coeff(-k) != conj(coeff(k)) at k=" +
                    std::to_string(k));
            half[static_cast<std::size_t>(k)] = pos;
        }
        return TrigMatrixPoly(dim, std::move(half));
    }

    int dim() const { return dim_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

    CMat coeff(int k) const {
        int a = std::abs(k);
        if (a > degree()) return CMat::Zero(dim_, dim_);
        return k >= 0 ? coeffs_[static_cast<std::size_t>(a)]
                      : coeffs_[static_cast<std::size_t>(a)].conjugate();
    }

    // sum_k C_k z^k at z = p.radius * e(p.phase)
    CMat eval(const AnnulusPoint& p) const {
        Complex z = p.to_complex();
        Complex zinv = 1.0 / z;
        CMat acc = coeffs_[0];
        Complex zp = 1.0, zm = 1.0;
        for (int k = 1; k <= degree(); ++k) {
            zp *= z;
            zm *= zinv;
            const CMat& c = coeffs_[static_cast<std::size_t>(k)];
            acc += c * zp + c.conjugate() * zm;
        }
        return acc;
    }

    CMat eval(const AnnulusPoint& p, double annulus_r) const {
        require_in_annulus(p, annulus_r);
        return eval(p);
    }

    // value at a real phase; imaginary residual beyond 1e-12 * scale is a bug
    Mat eval_torus(double x) const {
        CMat v = eval(torus_point(x));
        double scale = 1.0 + coeff_scale();
        if (v.imag().cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::logic_error("eval_torus: non-real value on the torus");
        return v.real();
    }

    // M_n(x) = M(x + n omega): multiplies C_k by e(k n omega)
    TrigMatrixPoly translated(double omega, long n) const {
        std::vector<CMat> out(coeffs_.size());
        out[0] = coeffs_[0];
        double shift = wrap01(static_cast<double>(n) * omega);
        for (int k = 1; k <= degree(); ++k)
            out[static_cast<std::size_t>(k)] =
                coeffs_[static_cast<std::size_t>(k)] * unit_phase(wrap01(k * shift));
        return TrigMatrixPoly(dim_, std::move(out));
    }

    // drops modes with |k| > new_degree
    TrigMatrixPoly truncated(int new_degree) const {
        if (new_degree < 0) throw std::invalid_argument("truncated: degree must be >= 0");
        int d = std::min(new_degree, degree());
        std::vector<CMat> out(coeffs_.begin(), coeffs_.begin() + d + 1);
        return TrigMatrixPoly(dim_, std::move(out));
    }

    // max operator norm over grid points of the circle |z| = radius
    double sup_norm(double radius, int grid_size = 256) const {
        grid_size = std::max(grid_size, 64);
        double best = 0.0;
        for (int j = 0; j < grid_size; ++j)
            best = std::max(best, operator_norm(eval({radius, static_cast<double>(j) / grid_size})));
        return best;
    }

    // sum over dropped modes of the coefficient norms; bounds the torus
    // sup-norm error of truncated(new_degree)
    double tail_bound(int new_degree) const {
        double tail = 0.0;
        for (int k = new_degree + 1; k <= degree(); ++k)
            tail += 2.0 * operator_norm(CMat(coeffs_[static_cast<std::size_t>(k)]));
        return tail;
    }

    bool symmetric_on_torus(int probe_grid = 32, double tol = 1e-9) const {
        for (int j = 0; j < probe_grid; ++j) {
            Mat v = eval_torus(static_cast<double>(j) / probe_grid);
            if ((v - v.transpose()).cwiseAbs().maxCoeff() > tol * (1.0 + v.cwiseAbs().maxCoeff()))
                return false;
        }
        return true;
    }

    friend TrigMatrixPoly operator+(const TrigMatrixPoly& a, const TrigMatrixPoly& b) {
        if (a.dim_ != b.dim_) throw std::invalid_argument("TrigMatrixPoly: dimension mismatch");
        std::vector<CMat> out(std::max(a.coeffs_.size(), b.coeffs_.size()),
                              CMat::Zero(a.dim_, a.dim_));
        for (std::size_t k = 0; k < out.size(); ++k) {
            if (k < a.coeffs_.size()) out[k] += a.coeffs_[k];
            if (k < b.coeffs_.size()) out[k] += b.coeffs_[k];
        }
        return TrigMatrixPoly(a.dim_, std::move(out));
    }

    friend TrigMatrixPoly operator*(double s, const TrigMatrixPoly& a) {
        std::vector<CMat> out = a.coeffs_;
        for (auto& c : out) c *= s;
        return TrigMatrixPoly(a.dim_, std::move(out));
    }

  private:
    double coeff_scale() const {
        double s = 0.0;
        for (const auto& c : coeffs_) s = std::max(s, c.cwiseAbs().maxCoeff());
        return s;
    }

    void trim() {
        while (coeffs_.size() > 1 && coeffs_.back().cwiseAbs().maxCoeff() == 0.0)
            coeffs_.pop_back();
    }

    int dim_;
    std::vector<CMat> coeffs_;  // k = 0..degree
};

// --- scalar (1x1) convenience builders, used heavily in tests and configs ---

inline TrigMatrixPoly scalar_constant(double c) {
    Mat m(1, 1);
    m(0, 0) = c;
    return TrigMatrixPoly::constant(m);
}

// f(x) = 2 cos(2 pi (x + shift)): C_{+1} = e(shift), C_{-1} = conj
inline TrigMatrixPoly scalar_two_cos(double shift = 0.0) {
    CMat c0 = CMat::Zero(1, 1), c1(1, 1);
    c1(0, 0) = unit_phase(shift);
    return TrigMatrixPoly(1, {c0, c1});
}

// f(x) = sin(2 pi x): C_{+1} = -i/2
inline TrigMatrixPoly scalar_sin() {
    CMat c0 = CMat::Zero(1, 1), c1(1, 1);
    c1(0, 0) = Complex(0.0, -0.5);
    return TrigMatrixPoly(1, {c0, c1});
}

// block-diagonal stack of scalar polynomials
inline TrigMatrixPoly diag_poly(const std::vector<TrigMatrixPoly>& entries) {
    int l = static_cast<int>(entries.size());
    int d = 0;
    for (const auto& e : entries) {
        if (e.dim() != 1) throw std::invalid_argument("diag_poly: entries must be scalar");
        d = std::max(d, e.degree());
    }
    std::vector<CMat> out(static_cast<std::size_t>(d) + 1, CMat::Zero(l, l));
    for (int j = 0; j < l; ++j)
        for (int k = 0; k <= entries[static_cast<std::size_t>(j)].degree(); ++k)
            out[static_cast<std::size_t>(k)](j, j) =
                entries[static_cast<std::size_t>(j)].coeff(k)(0, 0);
    return TrigMatrixPoly(l, std::move(out));
}

// --- sampled check of "F has no constant eigenvalues" -----------------------
//
// Sorted eigenvalue branches of F(x) are sampled on the probe grid; a branch
// whose relative spread stays below the tolerance is reported as a witness.
// A finite sample cannot certify the property, so callers surface this as a
// preflight warning rather than a hard gate.

struct ConstantEigenvalueCheck {
    bool ok{true};
    int branch{-1};
    double witness{0.0};
    double spread{0.0};
};

inline ConstantEigenvalueCheck no_constant_eigenvalue_check(const TrigMatrixPoly& f,
                                                            int probe_grid = 128,
                                                            double tol = 1e-8) {
    probe_grid = std::max(probe_grid, 8);
    int l = f.dim();
    Mat branches(probe_grid, l);
    Eigen::SelfAdjointEigenSolver<Mat> solver;
    for (int j = 0; j < probe_grid; ++j) {
        Mat v = f.eval_torus(static_cast<double>(j) / probe_grid);
        solver.compute(0.5 * (v + v.transpose()), Eigen::EigenvaluesOnly);
        branches.row(j) = solver.eigenvalues().transpose();
    }
    ConstantEigenvalueCheck out;
    for (int j = 0; j < l; ++j) {
        double lo = branches.col(j).minCoeff();
        double hi = branches.col(j).maxCoeff();
        double spread = (hi - lo) / std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        if (spread <= tol) {
            out.ok = false;
            out.branch = j;
            out.witness = 0.5 * (hi + lo);
            out.spread = spread;
            return out;
        }
    }
    return out;
}

}  // namespace bjlab
