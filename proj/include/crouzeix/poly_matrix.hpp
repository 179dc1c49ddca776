#pragma once

// Polynomials, structured matrices, parameter packing and the reference
// (Crabb disk / ice-cream cone) constructions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace crouzeix {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FieldMode { Real, Complex };

inline const char* to_string(FieldMode mode) { return mode == FieldMode::Real ? "real" : "complex"; }

inline FieldMode field_mode_from_string(const std::string& s) {
    if (s == "real" || s == "R") return FieldMode::Real;
    if (s == "complex" || s == "C") return FieldMode::Complex;
    throw Error("unknown field mode '" + s + "' (expected real|complex)");
}

/// Polynomial with ascending complex coefficients: coeffs[j] multiplies z^j.
class Polynomial {
public:
    Polynomial() : coeffs_{cplx(0.0)} {}
    explicit Polynomial(std::vector<cplx> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) throw Error("polynomial needs at least one coefficient");
    }
    Polynomial(std::initializer_list<cplx> coeffs) : Polynomial(std::vector<cplx>(coeffs)) {}

    /// z^k padded with zeros up to max degree m.
    static Polynomial monomial(int k, int m) {
        std::vector<cplx> c(static_cast<std::size_t>(std::max(k, m) + 1), cplx(0.0));
        c[static_cast<std::size_t>(k)] = 1.0;
        return Polynomial(std::move(c));
    }

    /// (z - root)^k padded with zeros up to max degree m.
    static Polynomial shifted_power(cplx root, int k, int m) {
        std::vector<cplx> c{cplx(1.0)};
        for (int i = 0; i < k; ++i) {
            std::vector<cplx> next(c.size() + 1, cplx(0.0));
            for (std::size_t j = 0; j < c.size(); ++j) {
                next[j + 1] += c[j];
                next[j] -= root * c[j];
            }
            c = std::move(next);
        }
        if (static_cast<int>(c.size()) < m + 1) c.resize(static_cast<std::size_t>(m + 1), cplx(0.0));
        return Polynomial(std::move(c));
    }

    int max_degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    std::size_t size() const { return coeffs_.size(); }
    const std::vector<cplx>& coeffs() const { return coeffs_; }
    std::vector<cplx>& coeffs() { return coeffs_; }
    cplx operator[](std::size_t j) const { return coeffs_[j]; }
    cplx& operator[](std::size_t j) { return coeffs_[j]; }

    bool is_zero() const {
        return std::all_of(coeffs_.begin(), coeffs_.end(), [](cplx c) { return c == cplx(0.0); });
    }
    bool is_real() const {
        return std::all_of(coeffs_.begin(), coeffs_.end(), [](cplx c) { return c.imag() == 0.0; });
    }
    double max_abs_coeff() const {
        double m = 0.0;
        for (auto c : coeffs_) m = std::max(m, std::abs(c));
        return m;
    }

private:
    std::vector<cplx> coeffs_;
};

inline cplx eval_poly(const Polynomial& p, cplx z) {
    const auto& c = p.coeffs();
    cplx acc = c.back();
    for (std::size_t j = c.size() - 1; j-- > 0;) acc = acc * z + c[j];
    return acc;
}

inline cplx eval_poly_deriv(const Polynomial& p, cplx z) {
    const auto& c = p.coeffs();
    if (c.size() < 2) return cplx(0.0);
    cplx acc = c.back() * static_cast<double>(c.size() - 1);
    for (std::size_t j = c.size() - 1; j-- > 1;) acc = acc * z + c[j] * static_cast<double>(j);
    return acc;
}

/// Value and derivative in one Horner pass.
inline std::pair<cplx, cplx> eval_poly_with_deriv(const Polynomial& p, cplx z) {
    const auto& c = p.coeffs();
    cplx val = c.back();
    cplx der = 0.0;
    for (std::size_t j = c.size() - 1; j-- > 0;) {
        der = der * z + val;
        val = val * z + c[j];
    }
    return {val, der};
}

inline Matrix eval_poly_matrix(const Polynomial& p, const Matrix& A) {
    if (A.rows() != A.cols()) throw Error("eval_poly_matrix: matrix must be square");
    const auto& c = p.coeffs();
    const Eigen::Index n = A.rows();
    Matrix P = c.back() * Matrix::Identity(n, n);
    for (std::size_t j = c.size() - 1; j-- > 0;) {
        P = P * A;
        P.diagonal().array() += c[j];
    }
    return P;
}

/// Crabb matrix of order k: nilpotent, W = closed unit disk.
inline Matrix crabb_matrix(int k) {
    if (k < 2) throw Error("crabb_matrix: order must be >= 2");
    Matrix X = Matrix::Zero(k, k);
    if (k == 2) {
        X(0, 1) = 2.0;
        return X;
    }
    for (int i = 0; i + 1 < k; ++i) X(i, i + 1) = 1.0;
    X(0, 1) = std::sqrt(2.0);
    X(k - 2, k - 1) = std::sqrt(2.0);
    return X;
}

struct StructuredMatrixPoint {
    Polynomial p;
    Matrix A;
    FieldMode mode = FieldMode::Complex;

    int n() const { return static_cast<int>(A.rows()); }
    int m() const { return p.max_degree(); }
};

/// Throws unless A is real upper Hessenberg and p real (Real mode), or A is
/// upper triangular (Complex mode).
inline void check_structure(const StructuredMatrixPoint& pt) {
    if (pt.A.rows() != pt.A.cols() || pt.A.rows() < 1) throw Error("matrix must be square and nonempty");
    const Eigen::Index n = pt.A.rows();
    const int band = pt.mode == FieldMode::Real ? 1 : 0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = j + 1 + band; i < n; ++i)
            if (pt.A(i, j) != cplx(0.0))
                throw Error(pt.mode == FieldMode::Real ? "real mode requires upper Hessenberg A"
                                                       : "complex mode requires upper triangular A");
    if (pt.mode == FieldMode::Real) {
        if (!pt.p.is_real()) throw Error("real mode requires real polynomial coefficients");
        if ((pt.A.imag().array() != 0.0).any()) throw Error("real mode requires a real matrix");
    }
}

/// Shape of the flat real parameter vector.
struct ParameterLayout {
    int n = 2;
    int m = 1;
    FieldMode mode = FieldMode::Real;

    Eigen::Index size() const {
        if (mode == FieldMode::Real) return (m + 1) + n * (n + 1) / 2 + (n - 1);
        return 2 * (m + 1) + n * (n + 1);
    }
    // Last structurally nonzero row of column j.
    int last_row(int j) const { return std::min(n - 1, mode == FieldMode::Real ? j + 1 : j); }
};

inline ParameterLayout layout_of(const StructuredMatrixPoint& pt) { return {pt.n(), pt.m(), pt.mode}; }

struct ParameterVector {
    RealVector values;
    ParameterLayout layout;
};

// Order: coefficients c_0..c_m, then matrix entries column-major over the
// structural support. Complex mode interleaves (re, im) per entry.
inline ParameterVector pack(const StructuredMatrixPoint& pt) {
    check_structure(pt);
    const ParameterLayout L = layout_of(pt);
    RealVector x(L.size());
    Eigen::Index k = 0;
    const bool cx = L.mode == FieldMode::Complex;
    auto put = [&](cplx v) {
        x[k++] = v.real();
        if (cx) x[k++] = v.imag();
    };
    for (auto c : pt.p.coeffs()) put(c);
    for (int j = 0; j < L.n; ++j)
        for (int i = 0; i <= L.last_row(j); ++i) put(pt.A(i, j));
    return {std::move(x), L};
}

inline StructuredMatrixPoint unpack(const ParameterVector& v) {
    const ParameterLayout& L = v.layout;
    if (L.n < 1 || L.m < 0) throw Error("unpack: invalid layout");
    if (v.values.size() != L.size())
        throw Error("unpack: expected " + std::to_string(L.size()) + " parameters, got " +
                    std::to_string(v.values.size()));
    Eigen::Index k = 0;
    const bool cx = L.mode == FieldMode::Complex;
    auto take = [&]() {
        const double re = v.values[k++];
        const double im = cx ? v.values[k++] : 0.0;
        return cplx(re, im);
    };
    std::vector<cplx> c(static_cast<std::size_t>(L.m + 1));
    for (auto& ci : c) ci = take();
    Matrix A = Matrix::Zero(L.n, L.n);
    for (int j = 0; j < L.n; ++j)
        for (int i = 0; i <= L.last_row(j); ++i) A(i, j) = take();
    return {Polynomial(std::move(c)), std::move(A), L.mode};
}

/// Gradient of a real function of (c, A) written as the linear functional
/// dF = Re(sum_j coeffs[j] dc_j + sum_ab matrix(a,b) dA_ab).
struct ComplexGradient {
    std::vector<cplx> coeffs;
    Matrix matrix;
};

inline RealVector pack_gradient(const ComplexGradient& g, const ParameterLayout& L) {
    RealVector x(L.size());
    Eigen::Index k = 0;
    const bool cx = L.mode == FieldMode::Complex;
    // d/d(re) = Re g, d/d(im) = -Im g.
    auto put = [&](cplx v) {
        x[k++] = v.real();
        if (cx) x[k++] = -v.imag();
    };
    for (auto c : g.coeffs) put(c);
    for (int j = 0; j < L.n; ++j)
        for (int i = 0; i <= L.last_row(j); ++i) put(g.matrix(i, j));
    return x;
}

struct PolynomialRoots {
    std::vector<cplx> finite;
    int at_infinity = 0;
};

inline PolynomialRoots poly_roots(const Polynomial& p, double deflation = 1e-12) {
    if (p.is_zero()) throw Error("poly_roots: zero polynomial");
    const double cmax = p.max_abs_coeff();
    int deg = p.max_degree();
    PolynomialRoots out;
    while (deg > 0 && std::abs(p[static_cast<std::size_t>(deg)]) < deflation * cmax) {
        --deg;
        ++out.at_infinity;
    }
    if (deg == 0) return out;
    Matrix C = Matrix::Zero(deg, deg);
    const cplx lead = p[static_cast<std::size_t>(deg)];
    for (int j = 0; j < deg; ++j) C(0, j) = -p[static_cast<std::size_t>(deg - 1 - j)] / lead;
    for (int i = 1; i < deg; ++i) C(i, i - 1) = 1.0;
    Eigen::ComplexEigenSolver<Matrix> es(C, false);
    if (es.info() != Eigen::Success) throw Error("poly_roots: eigensolver failed");
    std::vector<cplx> ev(es.eigenvalues().data(), es.eigenvalues().data() + deg);

    // A multiple root comes back as a cluster of radius ~eps^(1/k). Its
    // centroid is well conditioned; use it when p, ..., p^(k-1) all vanish
    // there to rounding level.
    std::vector<cplx> c(p.coeffs().begin(), p.coeffs().begin() + deg + 1);
    std::vector<int> label(ev.size(), -1);
    int nclusters = 0;
    for (std::size_t i = 0; i < ev.size(); ++i) {
        if (label[i] >= 0) continue;
        label[i] = nclusters;
        for (std::size_t grow = 1; grow;) {
            grow = 0;
            for (std::size_t j = 0; j < ev.size(); ++j)
                if (label[j] < 0)
                    for (std::size_t k = 0; k < ev.size(); ++k)
                        if (label[k] == nclusters && std::abs(ev[j] - ev[k]) <= 1e-3 * (1.0 + std::abs(ev[k]))) {
                            label[j] = nclusters;
                            grow = 1;
                            break;
                        }
        }
        ++nclusters;
    }
    for (int g = 0; g < nclusters; ++g) {
        std::vector<std::size_t> idx;
        cplx centroid = 0.0;
        for (std::size_t i = 0; i < ev.size(); ++i)
            if (label[i] == g) {
                idx.push_back(i);
                centroid += ev[i];
            }
        if (idx.size() < 2) continue;
        centroid /= static_cast<double>(idx.size());
        std::vector<cplx> d = c;
        bool multiple = true;
        for (std::size_t order = 0; order < idx.size() && multiple; ++order) {
            cplx val = 0.0;
            double scale = 0.0;
            for (std::size_t j = d.size(); j-- > 0;) {
                val = val * centroid + d[j];
                scale = scale * std::abs(centroid) + std::abs(d[j]);
            }
            multiple = std::abs(val) <= 1e-12 * scale;
            for (std::size_t j = 1; j < d.size(); ++j) d[j - 1] = d[j] * static_cast<double>(j);
            d.pop_back();
        }
        if (multiple)
            for (std::size_t i : idx) ev[i] = centroid;
    }
    out.finite = std::move(ev);
    return out;
}

// ---------------------------------------------------------------------------
// Reference configurations

struct CrabbDisk {
    int k = 2;
    cplx center = 0.0;  // lambda
    cplx scale = 1.0;   // beta, nonzero
    Matrix unitary;     // U; empty means identity
    Matrix fill;        // B with W(B) in the unit disk; may be empty
};

struct IceCreamCone {
    cplx vertex = 0.0;  // lambda, outside W(B)
    Matrix block;       // B
    Polynomial p;       // must satisfy the dominance conditions
};

struct PlainPair {
    Polynomial p;
    Matrix A;
};

inline Matrix block_diag(const Matrix& X, const Matrix& Y) {
    Matrix D = Matrix::Zero(X.rows() + Y.rows(), X.cols() + Y.cols());
    D.topLeftCorner(X.rows(), X.cols()) = X;
    D.bottomRightCorner(Y.rows(), Y.cols()) = Y;
    return D;
}

/// (p, A) = ((z - lambda)^{k-1}, lambda I + beta U diag(Xi_k, B) U^*).
inline PlainPair crabb_pair(const CrabbDisk& cfg, int n, int m) {
    if (cfg.k < 2) throw Error("crabb configuration needs k >= 2");
    if (cfg.k > std::min(n, m + 1)) throw Error("crabb configuration needs k <= min(n, m+1)");
    if (cfg.scale == cplx(0.0)) throw Error("crabb configuration needs nonzero scale");
    if (cfg.k + cfg.fill.rows() != n) throw Error("crabb configuration: k + dim(B) must equal n");
    Matrix D = block_diag(crabb_matrix(cfg.k), cfg.fill);
    Matrix U = cfg.unitary.size() == 0 ? Matrix::Identity(n, n) : cfg.unitary;
    if (U.rows() != n || U.cols() != n) throw Error("crabb configuration: unitary has wrong size");
    if (!(U.adjoint() * U).isIdentity(1e-10)) throw Error("crabb configuration: U is not unitary");
    Matrix A = cfg.scale * (U * D * U.adjoint());
    A.diagonal().array() += cfg.center;
    return {Polynomial::shifted_power(cfg.center, cfg.k - 1, m), std::move(A)};
}

/// Upper triangular (Complex) or real upper Hessenberg (Real) matrix that is
/// unitarily similar to A.
inline Matrix structured_form(const Matrix& A, FieldMode mode) {
    if (mode == FieldMode::Complex) {
        Eigen::ComplexSchur<Matrix> schur(A);
        if (schur.info() != Eigen::Success) throw Error("complex Schur decomposition failed");
        Matrix T = schur.matrixT();
        for (Eigen::Index j = 0; j < T.cols(); ++j)
            for (Eigen::Index i = j + 1; i < T.rows(); ++i) T(i, j) = 0.0;
        return T;
    }
    if (A.imag().norm() > 1e-14 * (1.0 + A.norm())) throw Error("real mode requires a real matrix");
    Eigen::MatrixXd R = A.real();
    Eigen::HessenbergDecomposition<Eigen::MatrixXd> hd(R);
    Eigen::MatrixXd Hm = hd.matrixH();
    for (Eigen::Index j = 0; j < Hm.cols(); ++j)
        for (Eigen::Index i = j + 2; i < Hm.rows(); ++i) Hm(i, j) = 0.0;
    return Hm.cast<cplx>();
}

inline StructuredMatrixPoint make_structured(PlainPair pair, FieldMode mode) {
    StructuredMatrixPoint pt{std::move(pair.p), structured_form(pair.A, mode), mode};
    if (mode == FieldMode::Real) {
        for (auto& c : pt.p.coeffs()) {
            if (std::abs(c.imag()) > 1e-14 * (1.0 + std::abs(c)))
                throw Error("real mode requires a real polynomial");
            c = c.real();
        }
    }
    check_structure(pt);
    return pt;
}

inline StructuredMatrixPoint assemble_reference(const CrabbDisk& cfg, int n, int m, FieldMode mode) {
    return make_structured(crabb_pair(cfg, n, m), mode);
}

}  // namespace crouzeix
