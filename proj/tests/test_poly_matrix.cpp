#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "test_util.hpp"

using namespace crouzeix;
using testutil::random_matrix;
using testutil::random_poly;
using testutil::random_unitary;

namespace {
const cplx I(0.0, 1.0);
}

TEST(EvalPoly, Examples) {
    EXPECT_EQ(eval_poly(Polynomial{0.0, 1.0}, cplx(2.0)), cplx(2.0));
    EXPECT_NEAR(std::abs(eval_poly(Polynomial{0.0, 0.0, 0.0, 1.0}, I) - (-I)), 0.0, 1e-15);
    EXPECT_EQ(eval_poly(Polynomial{5.0}, cplx(3.0, 4.0)), cplx(5.0));
}

TEST(EvalPolyDeriv, Examples) {
    EXPECT_EQ(eval_poly_deriv(Polynomial{0.0, 0.0, 1.0}, cplx(3.0)), cplx(6.0));
    EXPECT_EQ(eval_poly_deriv(Polynomial{7.0}, cplx(1.5, -2.0)), cplx(0.0));
    EXPECT_EQ(eval_poly_deriv(Polynomial{0.0, 1.0}, cplx(-4.0, 9.0)), cplx(1.0));
}

TEST(EvalPolyDeriv, CombinedPassMatchesSeparate) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 20; ++t) {
        const Polynomial p = random_poly(rng, 1 + t % 6);
        const cplx z(0.3 * t - 2.0, 0.7 - 0.1 * t);
        const auto [v, d] = eval_poly_with_deriv(p, z);
        EXPECT_LE(std::abs(v - eval_poly(p, z)), 1e-13 * (1 + std::abs(v)));
        EXPECT_LE(std::abs(d - eval_poly_deriv(p, z)), 1e-13 * (1 + std::abs(d)));
    }
}

TEST(EvalPolyMatrix, Examples) {
    const Matrix X2 = crabb_matrix(2);
    EXPECT_EQ(eval_poly_matrix(Polynomial{0.0, 1.0}, X2), X2);
    std::mt19937_64 rng(1);
    const Matrix A = random_matrix(rng, 4);
    EXPECT_EQ(eval_poly_matrix(Polynomial{1.0}, A), Matrix(Matrix::Identity(4, 4)));
}

TEST(EvalPolyMatrix, CrabbPowerHasSingleEntry) {
    for (int k = 2; k <= 8; ++k) {
        const Matrix P = eval_poly_matrix(Polynomial::monomial(k - 1, k - 1), crabb_matrix(k));
        for (int i = 0; i < k; ++i)
            for (int j = 0; j < k; ++j) {
                const double expect = (i == 0 && j == k - 1) ? 2.0 : 0.0;
                EXPECT_LE(std::abs(P(i, j) - expect), 4 * std::numeric_limits<double>::epsilon() * 2.0) << "k=" << k << " (" << i << "," << j << ")";
            }
    }
}

TEST(EvalPolyMatrix, HornerMatchesPowerSum) {
    std::mt19937_64 rng(11);
    for (int n = 1; n <= 6; ++n)
        for (int m = 0; m <= 5; ++m) {
            const Matrix A = random_matrix(rng, n);
            const Polynomial p = random_poly(rng, m);
            Matrix S = Matrix::Zero(n, n), Ak = Matrix::Identity(n, n);
            for (int j = 0; j <= m; ++j) {
                S += p[static_cast<std::size_t>(j)] * Ak;
                Ak = Ak * A;
            }
            const Matrix H = eval_poly_matrix(p, A);
            EXPECT_LE((H - S).norm(), 1e-12 * S.norm()) << "n=" << n << " m=" << m;
        }
}

TEST(CrabbMatrix, Definition) {
    const double r2 = std::sqrt(2.0);
    Matrix X2 = Matrix::Zero(2, 2);
    X2(0, 1) = 2.0;
    EXPECT_EQ(crabb_matrix(2), X2);
    Matrix X3 = Matrix::Zero(3, 3);
    X3(0, 1) = r2;
    X3(1, 2) = r2;
    EXPECT_EQ(crabb_matrix(3), X3);
    Matrix X4 = Matrix::Zero(4, 4);
    X4(0, 1) = r2;
    X4(1, 2) = 1.0;
    X4(2, 3) = r2;
    EXPECT_EQ(crabb_matrix(4), X4);
    EXPECT_THROW(crabb_matrix(1), Error);
}

TEST(Pack, LengthFormula) {
    EXPECT_EQ((ParameterLayout{2, 1, FieldMode::Real}.size()), 6);
    EXPECT_EQ((ParameterLayout{2, 1, FieldMode::Complex}.size()), 10);
    EXPECT_EQ((ParameterLayout{2, 3, FieldMode::Real}.size()), 8);
    EXPECT_EQ((ParameterLayout{2, 3, FieldMode::Complex}.size()), 14);
    for (int n = 2; n <= 6; ++n)
        for (int m = 1; m <= 5; ++m) {
            EXPECT_EQ((ParameterLayout{n, m, FieldMode::Real}.size()), (m + 1) + n * (n + 1) / 2 + (n - 1));
            EXPECT_EQ((ParameterLayout{n, m, FieldMode::Complex}.size()), 2 * (m + 1) + n * (n + 1));
        }
}

TEST(Pack, RoundTripBothWays) {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> N;
    for (FieldMode mode : {FieldMode::Real, FieldMode::Complex})
        for (int n = 2; n <= 5; ++n)
            for (int m = 1; m <= 4; ++m) {
                const ParameterLayout L{n, m, mode};
                RealVector x(L.size());
                for (auto& v : x) v = N(rng);
                const StructuredMatrixPoint pt = unpack({x, L});
                EXPECT_NO_THROW(check_structure(pt));
                EXPECT_EQ(pack(pt).values, x);
                const StructuredMatrixPoint back = unpack(pack(pt));
                EXPECT_EQ(back.A, pt.A);
                EXPECT_EQ(back.p.coeffs(), pt.p.coeffs());
            }
}

TEST(Pack, UnpackZeroFillsStructuralZeros) {
    const ParameterLayout L{4, 2, FieldMode::Real};
    const StructuredMatrixPoint pt = unpack({RealVector::Ones(L.size()), L});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_EQ(pt.A(i, j), i > j + 1 ? cplx(0.0) : cplx(1.0));
    const ParameterLayout C{4, 2, FieldMode::Complex};
    const StructuredMatrixPoint pc = unpack({RealVector::Ones(C.size()), C});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) EXPECT_EQ(pc.A(i, j), i > j ? cplx(0.0) : cplx(1.0, 1.0));
}

TEST(Pack, Errors) {
    const ParameterLayout L{3, 2, FieldMode::Real};
    EXPECT_THROW(unpack({RealVector::Zero(L.size() + 1), L}), Error);
    StructuredMatrixPoint bad{Polynomial{0.0, 1.0}, Matrix::Ones(3, 3), FieldMode::Real};
    EXPECT_THROW(pack(bad), Error);
    StructuredMatrixPoint cx{Polynomial{cplx(0.0, 1.0), 1.0}, Matrix::Zero(2, 2), FieldMode::Real};
    EXPECT_THROW(pack(cx), Error);
}

TEST(PolyRoots, Examples) {
    auto r = poly_roots(Polynomial{-1.0, 0.0, 1.0}).finite;
    std::sort(r.begin(), r.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    ASSERT_EQ(r.size(), 2u);
    EXPECT_NEAR(std::abs(r[0] + 1.0), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(r[1] - 1.0), 0.0, 1e-12);

    const auto t = poly_roots(Polynomial::shifted_power(2.0, 3, 3)).finite;
    ASSERT_EQ(t.size(), 3u);
    for (cplx z : t) EXPECT_LE(std::abs(z - 2.0), 1e-6);

    const auto d = poly_roots(Polynomial{0.0, 1.0, 1e-300});
    ASSERT_EQ(d.finite.size(), 1u);
    EXPECT_EQ(d.at_infinity, 1);
    EXPECT_NEAR(std::abs(d.finite[0]), 0.0, 1e-15);

    EXPECT_THROW(poly_roots(Polynomial{0.0, 0.0}), Error);
}

TEST(Reference, CrabbDiskBasic) {
    const StructuredMatrixPoint pt = assemble_reference(CrabbDisk{}, 2, 1, FieldMode::Complex);
    EXPECT_EQ(pt.p.coeffs(), (std::vector<cplx>{0.0, 1.0}));
    EXPECT_NEAR(crouzeix_ratio(pt).f, 0.5, 1e-8);
}

TEST(Reference, CrabbDiskShiftedScaledRotated) {
    std::mt19937_64 rng(9);
    CrabbDisk cfg;
    cfg.k = 3;
    cfg.center = 1.0;
    cfg.scale = 2.0;
    cfg.unitary = random_unitary(rng, 4);
    cfg.fill = Matrix::Zero(1, 1);
    const StructuredMatrixPoint pt = assemble_reference(cfg, 4, 2, FieldMode::Complex);
    EXPECT_NEAR(crouzeix_ratio(pt).f, 0.5, 1e-8);
}

TEST(Reference, IceCreamConeGivesOne) {
    IceCreamCone cfg{5.0, crabb_matrix(2), Polynomial{0.0, 1.0}};
    const StructuredMatrixPoint pt = assemble_reference(cfg, FieldMode::Complex);
    const RatioEvaluation ev = crouzeix_ratio(pt);
    EXPECT_NEAR(ev.numerator, 5.0, 1e-12);
    EXPECT_NEAR(ev.denominator, 5.0, 1e-12);
    EXPECT_NEAR(ev.f, 1.0, 1e-12);
}

TEST(Reference, Errors) {
    CrabbDisk k4;
    k4.k = 4;
    EXPECT_THROW(assemble_reference(k4, 3, 3, FieldMode::Complex), Error);  // k > n
    EXPECT_THROW(assemble_reference(k4, 4, 2, FieldMode::Complex), Error);  // k > m + 1
    IceCreamCone inside{0.5, crabb_matrix(2), Polynomial{0.0, 1.0}};
    EXPECT_THROW(assemble_reference(inside, FieldMode::Complex), Error);    // vertex in W(B)
    IceCreamCone squared{1.5, crabb_matrix(2), Polynomial{0.0, 0.0, 1.0}};  // p(B) = 0
    EXPECT_NO_THROW(assemble_reference(squared, FieldMode::Complex));
    IceCreamCone dominated{1.2, crabb_matrix(2), Polynomial{0.0, 1.0}};      // |p(1.2)| < ||B|| = 2
    EXPECT_THROW(assemble_reference(dominated, FieldMode::Complex), Error);
}

TEST(PolyRoots, MultipleRootsAndCloseDistinctRoots) {
    for (int k = 2; k <= 5; ++k) {
        const cplx r(0.7, -1.3);
        for (cplx z : poly_roots(Polynomial::shifted_power(r, k, k)).finite) EXPECT_LE(std::abs(z - r), 1e-6) << k;
    }
    // (z - 2)(z - 2 - 1e-3)(z - 2 + 1e-3): distinct roots stay distinct.
    std::vector<cplx> c{1.0};
    for (double s : {2.0, 2.001, 1.999}) {
        std::vector<cplx> next(c.size() + 1, 0.0);
        for (std::size_t j = 0; j < c.size(); ++j) {
            next[j + 1] += c[j];
            next[j] -= s * c[j];
        }
        c = next;
    }
    auto z = poly_roots(Polynomial(c)).finite;
    std::sort(z.begin(), z.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
    EXPECT_NEAR(z[0].real(), 1.999, 1e-7);
    EXPECT_NEAR(z[1].real(), 2.0, 1e-7);
    EXPECT_NEAR(z[2].real(), 2.001, 1e-7);
}
