#include <catch2/catch_amalgamated.hpp>

#include "bjlab/trig_poly.hpp"

using namespace bjlab;
using Catch::Approx;

namespace {

// random reality-respecting polynomial, seeded deterministically
TrigMatrixPoly random_poly(int dim, int degree, std::uint64_t seed) {
    DetRng rng(seed);
    std::vector<CMat> half(static_cast<std::size_t>(degree) + 1);
    half[0] = CMat::Zero(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) half[0](i, j) = Complex(rng.uniform(-1, 1), 0.0);
    for (int k = 1; k <= degree; ++k) {
        half[static_cast<std::size_t>(k)] = CMat::Zero(dim, dim);
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                half[static_cast<std::size_t>(k)](i, j) =
                    Complex(rng.uniform(-1, 1), rng.uniform(-1, 1));
    }
    return TrigMatrixPoly(dim, std::move(half));
}

}  // namespace

TEST_CASE("eval: constant identity") {
    TrigMatrixPoly m = TrigMatrixPoly::constant(Mat::Identity(2, 2));
    CMat v = m.eval({0.9, 0.0});
    REQUIRE((v - CMat::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("eval: 2cos at z = 1 and on the outer circle") {
    TrigMatrixPoly f = scalar_two_cos();
    REQUIRE(f.eval({1.0, 0.0})(0, 0).real() == Approx(2.0).margin(1e-14));
    // z = 1.1: value z + 1/z
    Complex v = f.eval({1.1, 0.0})(0, 0);
    REQUIRE(v.real() == Approx(1.1 + 1.0 / 1.1).margin(1e-13));
    REQUIRE(std::abs(v.imag()) < 1e-13);
}

TEST_CASE("eval: domain check against the annulus") {
    TrigMatrixPoly f = scalar_two_cos();
    REQUIRE_THROWS_AS(f.eval({1.25, 0.0}, 0.1), std::domain_error);
    REQUIRE_NOTHROW(f.eval({1.05, 0.3}, 0.1));
}

TEST_CASE("eval on the torus is real") {
    TrigMatrixPoly m = random_poly(3, 4, 11);
    for (int j = 0; j < 64; ++j) {
        CMat v = m.eval(torus_point(j / 64.0 + 0.0137));
        double scale = 1.0 + v.cwiseAbs().maxCoeff();
        REQUIRE(v.imag().cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
}

TEST_CASE("reality constraint is rejected when violated") {
    // sin coefficients without the conjugate pairing
    std::vector<CMat> table(3, CMat::Zero(1, 1));
    table[2](0, 0) = Complex(0.0, -0.5);
    table[0](0, 0) = Complex(0.0, -0.5);  // should be +0.5i
    REQUIRE_THROWS_AS(TrigMatrixPoly::from_two_sided(1, 1, table), std::invalid_argument);
    table[0](0, 0) = Complex(0.0, 0.5);
    REQUIRE_NOTHROW(TrigMatrixPoly::from_two_sided(1, 1, table));
}

TEST_CASE("translate: identity cases") {
    TrigMatrixPoly f = scalar_two_cos();
    TrigMatrixPoly f0 = f.translated(0.37, 0);
    REQUIRE((f0.coeff(1) - f.coeff(1)).cwiseAbs().maxCoeff() < 1e-15);

    TrigMatrixPoly c = TrigMatrixPoly::constant(Mat::Identity(2, 2) * 3.0);
    TrigMatrixPoly c5 = c.translated(0.37, 5);
    REQUIRE((c5.coeff(0) - c.coeff(0)).cwiseAbs().maxCoeff() < 1e-15);
    REQUIRE(c5.degree() == 0);
}

TEST_CASE("translate: quarter shift of 2cos vanishes at 0") {
    TrigMatrixPoly f = scalar_two_cos();
    TrigMatrixPoly g = f.translated(0.25, 1);
    REQUIRE(std::abs(g.eval_torus(0.0)(0, 0)) < 1e-12);
}

TEST_CASE("translate agrees with phase shift and composes") {
    TrigMatrixPoly m = random_poly(2, 3, 5);
    double omega = 0.3716;
    for (long n : {-3L, 1L, 7L}) {
        TrigMatrixPoly t = m.translated(omega, n);
        for (int j = 0; j < 16; ++j) {
            double x = j / 16.0;
            CMat lhs = t.eval(torus_point(x));
            CMat rhs = m.eval(torus_point(x + n * omega));
            REQUIRE((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
        }
    }
    TrigMatrixPoly two_step = m.translated(omega, 2).translated(omega, 3);
    TrigMatrixPoly one_step = m.translated(omega, 5);
    for (int k = 0; k <= m.degree(); ++k)
        REQUIRE((two_step.coeff(k) - one_step.coeff(k)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sup_norm on circles") {
    TrigMatrixPoly id = TrigMatrixPoly::constant(Mat::Identity(2, 2));
    REQUIRE(id.sup_norm(1.0) == Approx(1.0));
    REQUIRE(id.sup_norm(1.07) == Approx(1.0));

    TrigMatrixPoly f = scalar_two_cos();
    REQUIRE(f.sup_norm(1.0) == Approx(2.0).margin(1e-12));
    REQUIRE(f.sup_norm(1.1) == Approx(1.1 + 1.0 / 1.1).margin(1e-12));
}

TEST_CASE("sup_norm grid refinement is monotone toward the sup") {
    TrigMatrixPoly m = random_poly(2, 3, 99);
    double coarse = m.sup_norm(1.0, 64);
    double fine = m.sup_norm(1.0, 256);
    double finer = m.sup_norm(1.0, 1024);
    REQUIRE(coarse <= fine + 1e-15);
    REQUIRE(fine <= finer + 1e-15);
    REQUIRE(finer <= coarse * 1.05 + 1e-12);  // low degree: grid already close
}

TEST_CASE("no_constant_eigenvalue_check") {
    TrigMatrixPoly good = diag_poly({scalar_two_cos(), scalar_sin()});
    REQUIRE(no_constant_eigenvalue_check(good).ok);

    Mat c(2, 2);
    c << 1.0, 0.5, 0.5, -2.0;
    ConstantEigenvalueCheck bad = no_constant_eigenvalue_check(TrigMatrixPoly::constant(c));
    REQUIRE_FALSE(bad.ok);

    TrigMatrixPoly one_const = diag_poly({scalar_two_cos(), scalar_constant(5.0)});
    ConstantEigenvalueCheck witness = no_constant_eigenvalue_check(one_const);
    REQUIRE_FALSE(witness.ok);
    REQUIRE(witness.witness == Approx(5.0).margin(1e-9));
}

TEST_CASE("fourier_truncate") {
    TrigMatrixPoly f = scalar_two_cos();
    REQUIRE(f.truncated(3).degree() == 1);  // unchanged beyond its degree
    REQUIRE((f.truncated(3).coeff(1) - f.coeff(1)).cwiseAbs().maxCoeff() < 1e-15);

    TrigMatrixPoly zero = f.truncated(0);
    REQUIRE(zero.degree() == 0);
    REQUIRE(zero.eval_torus(0.33)(0, 0) == Approx(0.0).margin(1e-15));

    // oracle: direct re-summation of the kept modes
    TrigMatrixPoly m = random_poly(2, 3, 21);
    TrigMatrixPoly t = m.truncated(1);
    for (int j = 0; j < 32; ++j) {
        AnnulusPoint p{1.03, j / 32.0};
        CMat expect = m.coeff(0);
        Complex z = p.to_complex();
        expect += m.coeff(1) * z + m.coeff(-1) / z;
        REQUIRE((t.eval(p) - expect).cwiseAbs().maxCoeff() < 1e-13);
    }
    // tail bound controls the truncation error on the torus
    double tail = m.tail_bound(1);
    for (int j = 0; j < 32; ++j) {
        double x = j / 32.0;
        REQUIRE(operator_norm(Mat(m.eval_torus(x) - t.eval_torus(x))) <= tail + 1e-12);
    }
}

TEST_CASE("conjugate symmetry survives translate and truncate") {
    TrigMatrixPoly m = random_poly(2, 4, 31).translated(golden_mean, 9).truncated(2);
    for (int k = 0; k <= m.degree(); ++k)
        REQUIRE((m.coeff(-k) - m.coeff(k).conjugate()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("poly arithmetic backs V = lambda F + R") {
    TrigMatrixPoly f = scalar_two_cos();
    TrigMatrixPoly r = scalar_constant(0.5);
    TrigMatrixPoly v = 3.0 * f + r;
    REQUIRE(v.eval_torus(0.2)(0, 0) ==
            Approx(3.0 * 2.0 * std::cos(two_pi * 0.2) + 0.5).margin(1e-12));
}
