#pragma once

// A-posteriori check of approximate nonsmooth stationarity: gradients of the
// ratio at every point of Z_eps span an approximate subdifferential, and the
// norm of its min-norm element measures stationarity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "fov_boundary.hpp"
#include "poly_matrix.hpp"
#include "ratio.hpp"

namespace crouzeix {

struct MinNormResult {
    RealVector d;
    RealVector weights;  // convex weights, one per generator
    double norm = 0.0;
    int iterations = 0;
};

namespace detail {

// Minimizes ||sum_i a_i g_i|| over the affine hull (sum a_i = 1) of the
// generators listed in `active`, via least squares on the differences.
inline RealVector affine_min_weights(const std::vector<RealVector>& gens, const std::vector<int>& active) {
    const std::size_t s = active.size();
    RealVector a = RealVector::Zero(static_cast<Eigen::Index>(s));
    if (s == 1) {
        a[0] = 1.0;
        return a;
    }
    const RealVector& g0 = gens[static_cast<std::size_t>(active[0])];
    Eigen::MatrixXd M(g0.size(), static_cast<Eigen::Index>(s - 1));
    for (std::size_t k = 1; k < s; ++k) M.col(static_cast<Eigen::Index>(k - 1)) = gens[static_cast<std::size_t>(active[k])] - g0;
    const RealVector mu = M.completeOrthogonalDecomposition().solve(-g0);
    a[0] = 1.0 - mu.sum();
    a.tail(static_cast<Eigen::Index>(s - 1)) = mu;
    return a;
}

}  // namespace detail

/// Min-norm point of the convex hull of the generators (Wolfe's algorithm).
inline MinNormResult min_norm_point(const std::vector<RealVector>& gens, double tol = 1e-14) {
    if (gens.empty()) throw Error("min_norm_point: empty generator list");
    const std::size_t k = gens.size();
    const Eigen::Index dim = gens[0].size();
    for (const auto& g : gens)
        if (g.size() != dim) throw Error("min_norm_point: generators differ in dimension");
    double gmax2 = 0.0;
    std::size_t start = 0;
    for (std::size_t i = 0; i < k; ++i) {
        gmax2 = std::max(gmax2, gens[i].squaredNorm());
        if (gens[i].squaredNorm() < gens[start].squaredNorm()) start = i;
    }

    std::vector<int> active{static_cast<int>(start)};
    RealVector lam = RealVector::Ones(1);
    RealVector x = gens[start];
    MinNormResult out;
    auto combine = [&](const std::vector<int>& idx, const RealVector& w) {
        RealVector y = RealVector::Zero(dim);
        for (std::size_t i = 0; i < idx.size(); ++i) y += w[static_cast<Eigen::Index>(i)] * gens[static_cast<std::size_t>(idx[i])];
        return y;
    };

    for (int major = 0; major < 1000; ++major) {
        ++out.iterations;
        std::size_t j = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i) {
            const double v = gens[i].dot(x);
            if (v < best) {
                best = v;
                j = i;
            }
        }
        if (x.squaredNorm() - best <= tol * std::max(gmax2, 1e-300)) break;
        if (std::find(active.begin(), active.end(), static_cast<int>(j)) != active.end()) break;
        active.push_back(static_cast<int>(j));
        lam.conservativeResize(static_cast<Eigen::Index>(active.size()));
        lam[lam.size() - 1] = 0.0;

        for (int minor = 0; minor < 1000; ++minor) {
            const RealVector a = detail::affine_min_weights(gens, active);
            if ((a.array() > 0.0).all()) {
                lam = a;
                x = combine(active, lam);
                break;
            }
            double theta = 1.0;
            for (Eigen::Index i = 0; i < a.size(); ++i)
                if (a[i] <= 0.0 && lam[i] - a[i] > 0.0) theta = std::min(theta, lam[i] / (lam[i] - a[i]));
            lam = (1.0 - theta) * lam + theta * a;
            std::vector<int> keep_idx;
            std::vector<double> keep_w;
            for (Eigen::Index i = 0; i < lam.size(); ++i)
                if (lam[i] > 1e-15) {
                    keep_idx.push_back(active[static_cast<std::size_t>(i)]);
                    keep_w.push_back(lam[i]);
                }
            if (keep_idx.empty()) {
                keep_idx.push_back(active.back());
                keep_w.push_back(1.0);
            }
            active = keep_idx;
            lam = Eigen::Map<RealVector>(keep_w.data(), static_cast<Eigen::Index>(keep_w.size()));
            lam /= lam.sum();
            x = combine(active, lam);
        }
    }
    out.d = x;
    out.norm = x.norm();
    out.weights = RealVector::Zero(static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < active.size(); ++i) out.weights[active[i]] += lam[static_cast<Eigen::Index>(i)];
    return out;
}

struct SubdifferentialResult {
    std::vector<RealVector> generators;
    AttainmentSet z_eps;
    bool forgo = false;
};

/// One generator per z in Z_eps: (D grad N(z) - N grad D) / D^2, sharing the
/// denominator gradient.
inline SubdifferentialResult approx_subdifferential(const StructuredMatrixPoint& pt, const RatioEvaluation& ev,
                                                    double eps) {
    SubdifferentialResult out;
    out.z_eps = z_eps_set(ev.analysis, eps, 1e-10 * ev.boundary->scale);
    out.forgo = out.z_eps.forgo;
    if (out.forgo) return out;
    const double N = ev.numerator;
    const double D = ev.denominator;
    for (const auto& q : out.z_eps.points) {
        const RealVector gN = grad_numerator_at(q.z, q.v, pt.p, pt.A, pt.mode);
        out.generators.push_back((D * gN - N * ev.grad_denominator) / (D * D));
    }
    return out;
}

inline SubdifferentialResult approx_subdifferential(const StructuredMatrixPoint& pt, double eps,
                                                    const RatioOptions& opt = {}) {
    return approx_subdifferential(pt, crouzeix_ratio(pt, opt), eps);
}

struct StationarityReport {
    double epsilon = 1e-4;
    int z_count = 0;
    std::vector<AttainmentPoint> points;
    std::vector<RealVector> generators;
    RealVector d;
    RealVector weights;
    double d_norm = std::numeric_limits<double>::quiet_NaN();
    bool forgo = false;
    double f = 0.0;
    double numerator = 0.0;
    double denominator = 0.0;
};

inline StationarityReport stationarity_report(const StructuredMatrixPoint& pt, const RatioEvaluation& ev,
                                              double eps = 1e-4) {
    StationarityReport r;
    r.epsilon = eps;
    r.f = ev.f;
    r.numerator = ev.numerator;
    r.denominator = ev.denominator;
    SubdifferentialResult sub = approx_subdifferential(pt, ev, eps);
    r.forgo = sub.forgo;
    if (r.forgo) return r;
    r.points = sub.z_eps.points;
    r.z_count = static_cast<int>(r.points.size());
    r.generators = std::move(sub.generators);
    const MinNormResult mn = min_norm_point(r.generators);
    r.d = mn.d;
    r.weights = mn.weights;
    r.d_norm = mn.norm;
    return r;
}

inline StationarityReport stationarity_report(const StructuredMatrixPoint& pt, double eps = 1e-4,
                                              const RatioOptions& opt = {}) {
    return stationarity_report(pt, crouzeix_ratio(pt, opt), eps);
}

}  // namespace crouzeix
