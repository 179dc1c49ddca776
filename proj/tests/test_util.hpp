#pragma once

#include <complex>
#include <random>

#include <crouzeix/crouzeix.hpp>

namespace testutil {

using namespace crouzeix;

inline Matrix random_matrix(std::mt19937_64& rng, int n, bool real = false) {
    std::normal_distribution<double> N;
    Matrix A(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = cplx(N(rng), real ? 0.0 : N(rng));
    return A;
}

inline Matrix random_unitary(std::mt19937_64& rng, int n) {
    Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n));
    return qr.householderQ() * Matrix::Identity(n, n);
}

inline Polynomial random_poly(std::mt19937_64& rng, int m, bool real = false) {
    std::normal_distribution<double> N;
    std::vector<cplx> c(static_cast<std::size_t>(m + 1));
    for (auto& x : c) x = cplx(N(rng), real ? 0.0 : N(rng));
    return Polynomial(c);
}

inline StructuredMatrixPoint random_point(std::mt19937_64& rng, int n, int m, FieldMode mode) {
    std::normal_distribution<double> N;
    const ParameterLayout L{n, m, mode};
    RealVector x(L.size());
    for (auto& v : x) v = N(rng);
    return unpack({x, L});
}

// Central differences of f along each packed coordinate.
template <class F>
RealVector fd_gradient(const F& f, const RealVector& x, double h = 1e-6) {
    RealVector g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        RealVector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2 * h);
    }
    return g;
}

inline double ratio_at(const RealVector& x, const ParameterLayout& L) { return crouzeix_ratio(unpack({x, L})).f; }

}  // namespace testutil
