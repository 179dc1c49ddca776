#pragma once

// The Crouzeix ratio f(p, A) = max_{z in W(A)} |p(z)| / ||p(A)||_2 and its
// gradient in the packed real parameter space.

#include <cmath>
#include <limits>
#include <memory>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fov_boundary.hpp"
#include "poly_matrix.hpp"

namespace crouzeix {

class OverflowError : public Error {
public:
    using Error::Error;
};

struct RatioOptions {
    BoundaryOptions boundary;
    double sigma_gap_tol = 1e-10;    // relative to D
    double overflow_limit = 1e150;
};

struct NumeratorResult {
    double value = 0.0;
    AttainmentSet attainment;        // eps = 0 view
    ModulusAnalysis analysis;
};

inline NumeratorResult numerator(const Polynomial& p, const BoundaryApproximant& B) {
    NumeratorResult out;
    out.analysis = analyze_modulus(p, B);
    out.value = out.analysis.global_value;
    out.attainment = z_eps_set(out.analysis, 0.0, 1e-10 * B.scale);
    return out;
}

struct DenominatorResult {
    double value = 0.0;
    Vector u;  // left singular vector
    Vector w;  // right singular vector
    double sigma_gap = 0.0;
};

inline DenominatorResult denominator(const Polynomial& p, const Matrix& A) {
    const Matrix P = eval_poly_matrix(p, A);
    Eigen::JacobiSVD<Matrix> svd(P, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    double bound = 0.0;
    const double anorm = A.norm();
    double power = 1.0;
    for (auto c : p.coeffs()) {
        bound += std::abs(c) * power;
        power *= anorm;
    }
    if (!std::isfinite(s[0])) throw OverflowError("denominator: p(A) is not finite");
    if (!(s[0] > 64.0 * std::numeric_limits<double>::epsilon() * bound))
        throw Error("denominator: p(A) is numerically zero");
    DenominatorResult out;
    out.value = s[0];
    out.u = svd.matrixU().col(0);
    out.w = svd.matrixV().col(0);
    out.sigma_gap = s.size() > 1 ? s[0] - s[1] : s[0];
    return out;
}

/// Gradient of |p(z)| at an attainment point z = v^* A v, holding the
/// maximizing unit vector v fixed (envelope argument).
inline ComplexGradient grad_numerator_complex(cplx z, const Vector& v, const Polynomial& p,
                                              [[maybe_unused]] const Matrix& A) {
    const auto [pz, dpz] = eval_poly_with_deriv(p, z);
    const double apz = std::abs(pz);
    if (!(apz > 0.0)) throw Error("grad_numerator_at: p(z) = 0, phase undefined");
    const cplx phase = std::conj(pz) / apz;
    ComplexGradient g;
    g.coeffs.resize(p.size());
    cplx zj = 1.0;
    for (auto& c : g.coeffs) {
        c = phase * zj;
        zj *= z;
    }
    g.matrix = (phase * dpz) * (v.conjugate() * v.transpose());
    return g;
}

inline RealVector grad_numerator_at(cplx z, const Vector& v, const Polynomial& p, const Matrix& A,
                                    FieldMode mode) {
    return pack_gradient(grad_numerator_complex(z, v, p, A),
                         {static_cast<int>(A.rows()), p.max_degree(), mode});
}

/// Gradient of sigma_max(p(A)) for a simple top singular value with pair (u, w).
inline ComplexGradient grad_denominator_complex(const Polynomial& p, const Matrix& A, const Vector& u,
                                                const Vector& w) {
    const int m = p.max_degree();
    const Eigen::Index n = A.rows();
    std::vector<Vector> right(static_cast<std::size_t>(m + 1));  // A^i w
    std::vector<Vector> left(static_cast<std::size_t>(m + 1));   // (u^* A^i)^T
    right[0] = w;
    left[0] = u.conjugate();
    for (int i = 1; i <= m; ++i) {
        right[static_cast<std::size_t>(i)] = A * right[static_cast<std::size_t>(i - 1)];
        left[static_cast<std::size_t>(i)] = A.transpose() * left[static_cast<std::size_t>(i - 1)];
    }
    ComplexGradient g;
    g.coeffs.resize(p.size());
    for (int j = 0; j <= m; ++j)
        g.coeffs[static_cast<std::size_t>(j)] = left[0].transpose() * right[static_cast<std::size_t>(j)];
    // G = sum_{a+b <= m-1} c_{a+b+1} (A^a w)(u^* A^b); the functional is Re tr(G dA).
    Matrix G = Matrix::Zero(n, n);
    for (int a = 0; a < m; ++a)
        for (int b = 0; a + b < m; ++b) {
            const cplx c = p[static_cast<std::size_t>(a + b + 1)];
            if (c == cplx(0.0)) continue;
            G.noalias() += c * right[static_cast<std::size_t>(a)] * left[static_cast<std::size_t>(b)].transpose();
        }
    g.matrix = G.transpose();
    return g;
}

inline RealVector grad_denominator(const Polynomial& p, const Matrix& A, const Vector& u, const Vector& w,
                                   FieldMode mode) {
    return pack_gradient(grad_denominator_complex(p, A, u, w),
                         {static_cast<int>(A.rows()), p.max_degree(), mode});
}

struct RatioEvaluation {
    double f = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
    AttainmentSet attainment;            // eps = 0
    ModulusAnalysis analysis;
    std::shared_ptr<const BoundaryApproximant> boundary;
    double sigma = 0.0;
    Vector u;
    Vector w;
    double sigma_gap = 0.0;
    bool sigma_multiple = false;         // diagnostic only
    bool multiple_max = false;           // |Z| > 1 numerically
    AttainmentPoint representative;      // attainment point used for the gradient
    RealVector grad_numerator;
    RealVector grad_denominator;
    RealVector gradient;
    ParameterLayout layout;
};

inline double max_abs_parameter(const StructuredMatrixPoint& pt) {
    double m = pt.p.max_abs_coeff();
    if (pt.A.size() > 0) m = std::max(m, pt.A.cwiseAbs().maxCoeff());
    return m;
}

inline RatioEvaluation crouzeix_ratio(const StructuredMatrixPoint& pt, const RatioOptions& opt = {}) {
    if (pt.p.is_zero()) throw Error("crouzeix_ratio: zero polynomial");
    const double big = max_abs_parameter(pt);
    if (!std::isfinite(big) || big > opt.overflow_limit) throw OverflowError("parameters exceed overflow guard");

    RatioEvaluation ev;
    ev.layout = layout_of(pt);
    DenominatorResult den = denominator(pt.p, pt.A);
    auto bd = std::make_shared<BoundaryApproximant>(build_boundary(pt.A, pt.mode, opt.boundary));
    NumeratorResult num = numerator(pt.p, *bd);
    ev.boundary = std::move(bd);

    ev.numerator = num.value;
    ev.denominator = den.value;
    ev.f = ev.numerator / ev.denominator;
    if (!std::isfinite(ev.f)) throw OverflowError("crouzeix_ratio: non-finite ratio");
    ev.attainment = std::move(num.attainment);
    ev.analysis = std::move(num.analysis);
    ev.sigma = den.value;
    ev.u = std::move(den.u);
    ev.w = std::move(den.w);
    ev.sigma_gap = den.sigma_gap;
    ev.sigma_multiple = den.sigma_gap < opt.sigma_gap_tol * den.value;

    // Largest |p(z)| first, ties by smallest theta.
    ev.multiple_max = ev.analysis.argmax.size() > 1;
    ev.representative = ev.analysis.argmax.front();
    ev.grad_numerator = grad_numerator_at(ev.representative.z, ev.representative.v, pt.p, pt.A, pt.mode);
    ev.grad_denominator = grad_denominator(pt.p, pt.A, ev.u, ev.w, pt.mode);
    const double D = ev.denominator;
    ev.gradient = (D * ev.grad_numerator - ev.numerator * ev.grad_denominator) / (D * D);
    return ev;
}

inline RatioEvaluation crouzeix_ratio(const Polynomial& p, const Matrix& A, FieldMode mode = FieldMode::Complex,
                                      const RatioOptions& opt = {}) {
    return crouzeix_ratio(StructuredMatrixPoint{p, A, mode}, opt);
}

inline RealVector grad_ratio(const RatioEvaluation& ev) { return ev.gradient; }

}  // namespace crouzeix
