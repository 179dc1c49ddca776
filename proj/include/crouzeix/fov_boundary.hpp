#pragma once

// Boundary of the field of values W(A) via the extreme-eigenvalue sweep
//   z(theta) = v^* A v,  v = top eigenvector of H(theta) = (e^{i theta} A + e^{-i theta} A^*) / 2,
// with adaptive refinement, line-segment and corner detection, and the
// search for global and local maximizers of |p| on the boundary.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "poly_matrix.hpp"

namespace crouzeix {

struct BoundaryOptions {
    int grid = 1024;               // initial theta samples per 2*pi
    double tol = 1e-10;            // interpolation error, relative to 1 + ||A||_F
    double gap_tol = 1e-8;         // multiple top eigenvalue, relative to 1 + ||A||_F
    double const_tol = 1e-8;       // relative variation of |p| treated as constant
    double corner_tol = 1e-9;      // stationary z(theta), relative to 1 + ||A||_F
    double min_width = 1e-12;      // theta width at which a jump is declared
    double theta_tol = 1e-12;      // bisection tolerance for local maximizers
    int max_depth = 64;
    std::size_t max_samples = std::size_t{1} << 18;
    int segment_grid = 64;         // sign-change grid along each segment
};

inline Matrix hermitian_sweep_matrix(const Matrix& A, double theta) {
    const cplx e = std::polar(1.0, theta);
    Matrix H = 0.5 * (e * A + std::conj(e) * A.adjoint());
    return 0.5 * (H + H.adjoint());
}

struct HermitianEigen {
    RealVector values;  // ascending
    Matrix vectors;     // columns
};

inline HermitianEigen hermitian_eig(const Matrix& H) {
    const Eigen::Index n = H.rows();
    if (n == 1) return {RealVector::Constant(1, H(0, 0).real()), Matrix::Identity(1, 1)};
    if (n == 2) {
        const double a = H(0, 0).real();
        const double d = H(1, 1).real();
        const cplx b = H(0, 1);
        const double mean = 0.5 * (a + d);
        const double half = 0.5 * (a - d);
        const double r = std::hypot(half, std::abs(b));
        HermitianEigen out{RealVector(2), Matrix(2, 2)};
        out.values << mean - r, mean + r;
        if (r == 0.0) {
            out.vectors = Matrix::Identity(2, 2);
            return out;
        }
        Vector v(2);
        if (half >= 0.0)
            v << cplx(half + r), std::conj(b);
        else
            v << b, cplx(r - half);
        v /= v.norm();
        out.vectors(0, 1) = v(0);
        out.vectors(1, 1) = v(1);
        out.vectors(0, 0) = -std::conj(v(1));
        out.vectors(1, 0) = std::conj(v(0));
        return out;
    }
    Eigen::SelfAdjointEigenSolver<Matrix> es(H);
    if (es.info() != Eigen::Success) throw Error("Hermitian eigensolver failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

/// One point of the sweep: z = v^* A v for the top eigenvector v of H(theta),
/// dz = dz/dtheta from first-order eigenvector perturbation, gap = l1 - l2.
struct BoundarySample {
    double theta = 0.0;
    cplx z;
    cplx dz;
    Vector v;
    double lambda = 0.0;
    double gap = std::numeric_limits<double>::infinity();
};

inline BoundarySample boundary_sample(const Matrix& A, double theta) {
    const HermitianEigen eig = hermitian_eig(hermitian_sweep_matrix(A, theta));
    const Eigen::Index n = A.rows();
    BoundarySample s;
    s.theta = theta;
    s.v = eig.vectors.col(n - 1);
    s.lambda = eig.values[n - 1];
    if (n > 1) s.gap = s.lambda - eig.values[n - 2];
    const Vector Av = A * s.v;
    const Vector Ahv = A.adjoint() * s.v;
    s.z = s.v.dot(Av);
    const cplx e = std::polar(1.0, theta);
    const cplx two_i(0.0, 2.0);
    cplx dz = 0.0;
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        const double sep = s.lambda - eig.values[k];
        if (!(sep > 0.0)) continue;
        const cplx alpha = eig.vectors.col(k).dot(Av);
        const cplx beta = eig.vectors.col(k).dot(Ahv);
        const cplx c = -(e * alpha - std::conj(e) * beta) / (two_i * sep);
        dz += std::conj(c) * alpha + c * std::conj(beta);
    }
    s.dz = dz;
    return s;
}

struct BoundaryPointResult {
    cplx z;
    Vector v;
    double gap;
};

inline BoundaryPointResult boundary_point(const Matrix& A, double theta) {
    BoundarySample s = boundary_sample(A, theta);
    return {s.z, std::move(s.v), s.gap};
}

struct BoundaryPoint {
    cplx z;
    Vector v;
};

/// Straight piece of the boundary at a direction where the top eigenvalue is
/// multiple. Traversed from start to end as theta increases.
struct Segment {
    double theta = 0.0;
    double gap = 0.0;
    bool resolved = true;  // false: unresolved jump approximated by a chord
    BoundaryPoint start;
    BoundaryPoint end;
    bool start_is_corner = false;
    bool end_is_corner = false;
    std::size_t before = 0;  // sample index preceding the jump
    std::size_t after = 0;   // sample index following the jump

    cplx point(double t) const { return start.z + t * (end.z - start.z); }
    Vector vector(double t) const {
        Vector v = std::sqrt(std::max(0.0, 1.0 - t)) * start.v + std::sqrt(std::max(0.0, t)) * end.v;
        const double nv = v.norm();
        return nv > 0.0 ? Vector(v / nv) : start.v;
    }
};

struct Corner {
    cplx z;
    Vector v;
    double theta_lo = 0.0;
    double theta_hi = 0.0;
};

struct Arc {
    std::size_t first = 0;
    std::size_t last = 0;
};

struct BoundaryApproximant {
    Matrix A;
    FieldMode mode = FieldMode::Complex;
    BoundaryOptions options;
    double theta_begin = 0.0;
    double theta_end = 2.0 * std::numbers::pi;
    double scale = 1.0;  // 1 + ||A||_F
    bool degenerate = false;
    cplx center;         // the single point when degenerate
    std::vector<BoundarySample> samples;
    std::vector<char> corner_sample;
    std::vector<Arc> pieces;
    std::vector<Segment> segments;  // segments[i] joins pieces[i] and pieces[i+1]
    std::vector<Corner> corners;
    bool budget_exhausted = false;

    bool periodic() const { return mode == FieldMode::Complex; }
};

namespace detail {

struct RefineState {
    const Matrix& A;
    const BoundaryOptions& opt;
    double tol_abs;
    std::vector<BoundarySample>& out;
    std::vector<std::size_t>& jumps;  // index i: jump between out[i] and out[i+1]
    bool exhausted = false;
};

// Appends everything after `a` up to and including `b`.
inline void refine_interval(RefineState& st, const BoundarySample& a, const BoundarySample& b, int depth) {
    const double h = b.theta - a.theta;
    const bool budget = st.out.size() >= st.opt.max_samples;
    if (budget) st.exhausted = true;
    if (h <= st.opt.min_width || depth >= st.opt.max_depth || budget) {
        const double dist = std::abs(b.z - a.z);
        if (dist > st.tol_abs) st.jumps.push_back(st.out.size() - 1);
        st.out.push_back(b);
        return;
    }
    BoundarySample m = boundary_sample(st.A, a.theta + 0.5 * h);
    const cplx predicted = 0.5 * (a.z + b.z) + (h / 8.0) * (a.dz - b.dz);
    const double err = std::abs(m.z - predicted);
    if (err <= st.tol_abs && std::isfinite(err)) {
        st.out.push_back(std::move(m));
        st.out.push_back(b);
        return;
    }
    refine_interval(st, a, m, depth + 1);
    refine_interval(st, m, b, depth + 1);
}

inline Segment make_segment(const Matrix& A, const BoundarySample& a, const BoundarySample& b,
                            double gap_tol_abs) {
    Segment seg;
    seg.theta = 0.5 * (a.theta + b.theta);
    const HermitianEigen eig = hermitian_eig(hermitian_sweep_matrix(A, seg.theta));
    const Eigen::Index n = A.rows();
    const double top = eig.values[n - 1];
    seg.gap = n > 1 ? top - eig.values[n - 2] : std::numeric_limits<double>::infinity();
    if (seg.gap <= gap_tol_abs) {
        Eigen::Index r = 0;
        while (r < n && top - eig.values[n - 1 - r] <= gap_tol_abs) ++r;
        const Matrix Q = eig.vectors.rightCols(r);
        const cplx e = std::polar(1.0, seg.theta);
        const Matrix K = (e * A - std::conj(e) * A.adjoint()) / cplx(0.0, 2.0);
        Matrix Kr = Q.adjoint() * K * Q;
        Kr = 0.5 * (Kr + Kr.adjoint());
        const HermitianEigen keig = hermitian_eig(Kr);
        auto endpoint = [&](Eigen::Index idx) {
            Vector v = Q * keig.vectors.col(idx);
            v /= v.norm();
            const cplx z = v.dot(A * v);
            return BoundaryPoint{z, std::move(v)};
        };
        BoundaryPoint lo = endpoint(0);
        BoundaryPoint hi = endpoint(r - 1);
        if (std::abs(lo.z - a.z) + std::abs(hi.z - b.z) <= std::abs(hi.z - a.z) + std::abs(lo.z - b.z)) {
            seg.start = std::move(lo);
            seg.end = std::move(hi);
        } else {
            seg.start = std::move(hi);
            seg.end = std::move(lo);
        }
        seg.resolved = true;
    } else {
        seg.start = {a.z, a.v};
        seg.end = {b.z, b.v};
        seg.resolved = false;
    }
    return seg;
}

// Keeps the part of a segment with Im z >= 0.
inline void clip_upper_half(Segment& seg) {
    const double ys = seg.start.z.imag();
    const double ye = seg.end.z.imag();
    if (ys >= 0.0 && ye >= 0.0) return;
    if (ys < 0.0 && ye < 0.0) {
        seg.start.z = seg.start.z.real();
        seg.end.z = seg.end.z.real();
        return;
    }
    const double t = ys / (ys - ye);
    BoundaryPoint cut{cplx(seg.point(t).real(), 0.0), seg.vector(t)};
    if (ys < 0.0)
        seg.start = std::move(cut);
    else
        seg.end = std::move(cut);
}

}  // namespace detail

/// Adaptive approximation of bd W(A). Complex mode sweeps theta over [0, 2pi];
/// Real mode sweeps [pi, 2pi], which covers the closed upper half-plane.
inline BoundaryApproximant build_boundary(const Matrix& A, FieldMode mode, const BoundaryOptions& opt = {}) {
    if (A.rows() != A.cols() || A.rows() < 1) throw Error("build_boundary: matrix must be square");
    BoundaryApproximant B;
    B.A = A;
    B.mode = mode;
    B.options = opt;
    const double pi = std::numbers::pi;
    B.theta_begin = mode == FieldMode::Real ? pi : 0.0;
    B.theta_end = 2.0 * pi;
    B.scale = 1.0 + A.norm();
    const Eigen::Index n = A.rows();
    const cplx mu = A.trace() / static_cast<double>(n);
    Matrix shifted = A;
    shifted.diagonal().array() -= mu;
    if (shifted.norm() <= 1e-14 * B.scale) {
        B.degenerate = true;
        B.center = mu;
        return B;
    }

    const int count = std::max(4, mode == FieldMode::Real ? opt.grid / 2 : opt.grid);
    const double tol_abs = opt.tol * B.scale;
    std::vector<std::size_t> jumps;
    detail::RefineState st{A, opt, tol_abs, B.samples, jumps};
    B.samples.reserve(static_cast<std::size_t>(2 * count + 64));
    BoundarySample prev = boundary_sample(A, B.theta_begin);
    B.samples.push_back(prev);
    for (int i = 1; i <= count; ++i) {
        const double th = i == count ? B.theta_end
                                     : B.theta_begin + (B.theta_end - B.theta_begin) * i / count;
        BoundarySample next = boundary_sample(A, th);
        detail::refine_interval(st, prev, next, 0);
        prev = std::move(next);
    }
    B.budget_exhausted = st.exhausted;

    // Near a multiple top eigenvalue the computed eigenvector is an arbitrary
    // mix, so z(theta) can hop between the segment ends several times. Such a
    // cluster of jumps becomes one jump and the samples inside it are dropped.
    const double gap_abs = opt.gap_tol * B.scale;
    if (jumps.size() > 1) {
        std::vector<char> drop(B.samples.size(), 0);
        std::vector<std::size_t> kept_jumps;
        for (std::size_t k = 0; k < jumps.size();) {
            const std::size_t first = jumps[k];
            std::size_t last = first;
            std::size_t k2 = k + 1;
            while (k2 < jumps.size()) {
                bool inside = true;
                for (std::size_t i = last + 1; i <= jumps[k2] && inside; ++i) inside = B.samples[i].gap <= gap_abs;
                if (!inside) break;
                last = jumps[k2++];
            }
            for (std::size_t i = first + 1; i <= last; ++i) drop[i] = 1;
            kept_jumps.push_back(first);
            k = k2;
        }
        std::vector<std::size_t> new_index(B.samples.size());
        std::vector<BoundarySample> compact;
        compact.reserve(B.samples.size());
        for (std::size_t i = 0; i < B.samples.size(); ++i) {
            new_index[i] = compact.size();
            if (!drop[i]) compact.push_back(std::move(B.samples[i]));
        }
        B.samples = std::move(compact);
        jumps.clear();
        for (auto j : kept_jumps) jumps.push_back(new_index[j]);
    }

    // Corner runs: consecutive samples at one point with stationary z(theta).
    const std::size_t ns = B.samples.size();
    const double ctol = opt.corner_tol * B.scale;
    B.corner_sample.assign(ns, 0);
    std::vector<char> is_jump(ns, 0);
    for (auto j : jumps) is_jump[j] = 1;
    for (std::size_t i = 0; i < ns;) {
        std::size_t j = i;
        while (j + 1 < ns && !is_jump[j] && std::abs(B.samples[j + 1].z - B.samples[j].z) <= ctol) ++j;
        if (j > i) {
            std::size_t best = i;
            for (std::size_t k = i; k <= j; ++k)
                if (std::abs(B.samples[k].dz) < std::abs(B.samples[best].dz)) best = k;
            if (std::abs(B.samples[best].dz) <= ctol) {
                for (std::size_t k = i; k <= j; ++k) B.corner_sample[k] = 1;
                Corner c{B.samples[best].z, B.samples[best].v, B.samples[i].theta, B.samples[j].theta};
                const bool dup = std::any_of(B.corners.begin(), B.corners.end(),
                                             [&](const Corner& o) { return std::abs(o.z - c.z) <= ctol; });
                if (!dup) B.corners.push_back(std::move(c));
            }
        }
        i = j + 1;
    }

    std::size_t first = 0;
    for (auto j : jumps) {
        B.pieces.push_back({first, j});
        Segment seg = detail::make_segment(A, B.samples[j], B.samples[j + 1], gap_abs);
        seg.before = j;
        seg.after = j + 1;
        if (mode == FieldMode::Real) detail::clip_upper_half(seg);
        auto near_corner = [&](cplx z) {
            return std::any_of(B.corners.begin(), B.corners.end(),
                               [&](const Corner& c) { return std::abs(c.z - z) <= 1e3 * ctol; });
        };
        seg.start_is_corner = B.corner_sample[j] || near_corner(seg.start.z);
        seg.end_is_corner = B.corner_sample[j + 1] || near_corner(seg.end.z);
        B.segments.push_back(std::move(seg));
        first = j + 1;
    }
    B.pieces.push_back({first, ns - 1});
    return B;
}

/// Point on bd W(A) with the data needed downstream.
struct AttainmentPoint {
    cplx z;
    double theta = 0.0;
    Vector v;
    double value = 0.0;  // |p(z)|
    bool is_corner = false;
};

struct ModulusAnalysis {
    double global_value = 0.0;
    std::vector<AttainmentPoint> argmax;          // within 1e-12 relative of the max
    std::vector<AttainmentPoint> local_maxima;    // strict local maximizers, corners excluded
    std::vector<AttainmentPoint> corner_points;
    bool constant = false;
};

namespace detail {

inline double modulus_slope(const Polynomial& p, cplx z, cplx direction) {
    const auto [val, der] = eval_poly_with_deriv(p, z);
    return (std::conj(val) * der * direction).real();
}

inline void push_unique(std::vector<AttainmentPoint>& pts, AttainmentPoint q, double dtol) {
    for (auto& o : pts) {
        if (std::abs(o.z - q.z) <= dtol) {
            if (q.value > o.value) {
                const bool corner = o.is_corner || q.is_corner;
                o = std::move(q);
                o.is_corner = corner;
            } else {
                o.is_corner = o.is_corner || q.is_corner;
            }
            return;
        }
    }
    pts.push_back(std::move(q));
}

}  // namespace detail

/// Global maximum, argmax set and local maximizers of |p| on the boundary.
inline ModulusAnalysis analyze_modulus(const Polynomial& p, const BoundaryApproximant& B) {
    if (p.is_zero()) throw Error("zero polynomial");
    ModulusAnalysis out;
    if (B.degenerate) {
        AttainmentPoint pt{B.center, 0.0, Vector::Unit(B.A.rows(), 0), std::abs(eval_poly(p, B.center)), true};
        out.global_value = pt.value;
        out.argmax.push_back(pt);
        out.corner_points.push_back(pt);
        out.constant = true;
        return out;
    }
    const auto& S = B.samples;
    const std::size_t ns = S.size();
    const BoundaryOptions& opt = B.options;
    const double dtol = 1e-10 * B.scale;

    std::vector<double> val(ns), slope(ns);
    for (std::size_t i = 0; i < ns; ++i) {
        const auto [pv, pd] = eval_poly_with_deriv(p, S[i].z);
        val[i] = std::abs(pv);
        slope[i] = (std::conj(pv) * pd * S[i].dz).real();
    }

    std::vector<AttainmentPoint> cands;    // global-max candidates
    std::vector<AttainmentPoint> locals;
    auto from_sample = [&](const BoundarySample& s, bool corner) {
        return AttainmentPoint{s.z, s.theta, s.v, std::abs(eval_poly(p, s.z)), corner};
    };
    auto arc_slope = [&](const BoundarySample& s) { return detail::modulus_slope(p, s.z, s.dz); };

    // Bisection on the sign of d|p(z(theta))|^2/dtheta; lo has slope > 0.
    auto bisect_arc = [&](BoundarySample lo, BoundarySample hi) {
        for (int it = 0; it < 80 && hi.theta - lo.theta > opt.theta_tol; ++it) {
            BoundarySample mid = boundary_sample(B.A, 0.5 * (lo.theta + hi.theta));
            if (arc_slope(mid) > 0.0)
                lo = std::move(mid);
            else
                hi = std::move(mid);
        }
        AttainmentPoint a = from_sample(lo, false);
        AttainmentPoint b = from_sample(hi, false);
        return a.value >= b.value ? a : b;
    };

    // Smooth arcs.
    for (const Arc& arc : B.pieces) {
        for (std::size_t i = arc.first; i < arc.last; ++i) {
            if (B.corner_sample[i] || B.corner_sample[i + 1]) continue;
            if (slope[i] > 0.0 && slope[i + 1] <= 0.0) locals.push_back(bisect_arc(S[i], S[i + 1]));
        }
    }

    // Real mode: the sweep ends on the real axis where the mirrored half
    // continues, so theta = pi and theta = 2pi are critical by symmetry.
    if (B.mode == FieldMode::Real && ns >= 2) {
        const Arc& head = B.pieces.front();
        if (head.last > head.first && !B.corner_sample[0] && !B.corner_sample[1] && slope[1] <= 0.0) {
            BoundarySample lo = S[0];
            BoundarySample hi = S[1];
            for (int it = 0; it < 80 && hi.theta - lo.theta > opt.theta_tol; ++it) {
                BoundarySample mid = boundary_sample(B.A, 0.5 * (lo.theta + hi.theta));
                if (arc_slope(mid) > 0.0)
                    lo = std::move(mid);
                else
                    hi = std::move(mid);
            }
            AttainmentPoint a = from_sample(lo, false);
            AttainmentPoint b = from_sample(hi, false);
            locals.push_back(a.value >= b.value ? a : b);
        }
        const Arc& tail = B.pieces.back();
        if (tail.last > tail.first && !B.corner_sample[ns - 1] && !B.corner_sample[ns - 2] &&
            slope[ns - 2] > 0.0) {
            locals.push_back(bisect_arc(S[ns - 2], S[ns - 1]));
        }
    }

    // Segments: endpoints, interior critical points, and junctions with arcs.
    double seg_min = std::numeric_limits<double>::infinity();
    for (std::size_t si = 0; si < B.segments.size(); ++si) {
        const Segment& seg = B.segments[si];
        const cplx dir = seg.end.z - seg.start.z;
        auto seg_point = [&](double t, bool corner) {
            const cplx z = seg.point(t);
            return AttainmentPoint{z, seg.theta, seg.vector(t), std::abs(eval_poly(p, z)), corner};
        };
        auto endpoint = [&](const BoundaryPoint& bp, bool corner) {
            return AttainmentPoint{bp.z, seg.theta, bp.v, std::abs(eval_poly(p, bp.z)), corner};
        };
        cands.push_back(endpoint(seg.start, seg.start_is_corner));
        cands.push_back(endpoint(seg.end, seg.end_is_corner));
        if (std::abs(dir) <= dtol) continue;
        const int K = std::max(2, opt.segment_grid);
        double prev_t = 0.0;
        double prev_s = detail::modulus_slope(p, seg.start.z, dir);
        for (int k = 1; k <= K; ++k) {
            const double t = static_cast<double>(k) / K;
            const double s = detail::modulus_slope(p, seg.point(t), dir);
            seg_min = std::min(seg_min, std::abs(eval_poly(p, seg.point(t))));
            if (prev_s > 0.0 && s <= 0.0 && k < K) {
                double lo = prev_t, hi = t;
                for (int it = 0; it < 80 && hi - lo > 1e-15; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    if (detail::modulus_slope(p, seg.point(mid), dir) > 0.0)
                        lo = mid;
                    else
                        hi = mid;
                }
                locals.push_back(seg_point(0.5 * (lo + hi), false));
            }
            prev_t = t;
            prev_s = s;
        }
        const double out_start = detail::modulus_slope(p, seg.start.z, dir);
        const double in_end = detail::modulus_slope(p, seg.end.z, dir);
        const std::size_t a = seg.before;
        const std::size_t b = seg.after;
        if (!seg.start_is_corner && out_start < 0.0) {
            bool rising_in = false;
            if (si == 0 && B.mode == FieldMode::Real && B.pieces.front().last == a && a == 0)
                rising_in = true;  // mirrored continuation
            else if (!B.corner_sample[a])
                rising_in = slope[a] > 0.0;
            if (rising_in) locals.push_back(endpoint(seg.start, false));
        }
        if (!seg.end_is_corner && in_end > 0.0) {
            bool falling_out = false;
            if (B.mode == FieldMode::Real && b == ns - 1)
                falling_out = true;
            else if (!B.corner_sample[b])
                falling_out = slope[b] <= 0.0;
            if (falling_out) locals.push_back(endpoint(seg.end, false));
        }
    }

    for (const Corner& c : B.corners) {
        AttainmentPoint pt{c.z, 0.5 * (c.theta_lo + c.theta_hi), c.v, std::abs(eval_poly(p, c.z)), true};
        out.corner_points.push_back(pt);
        cands.push_back(std::move(pt));
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < ns; ++i)
        if (val[i] > val[best]) best = i;
    cands.push_back(from_sample(S[best], B.corner_sample[best] != 0));
    for (const auto& l : locals) cands.push_back(l);

    double vmax = 0.0, vmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < ns; ++i) {
        vmax = std::max(vmax, val[i]);
        vmin = std::min(vmin, val[i]);
    }
    for (const auto& c : cands) vmax = std::max(vmax, c.value);
    vmin = std::min(vmin, seg_min);
    out.global_value = vmax;
    out.constant = vmax > 0.0 && (vmax - vmin) <= opt.const_tol * vmax;

    for (auto& c : cands)
        if (c.value >= (1.0 - 1e-12) * vmax) detail::push_unique(out.argmax, c, dtol);
    std::sort(out.argmax.begin(), out.argmax.end(), [](const auto& x, const auto& y) {
        if (x.value != y.value) return x.value > y.value;
        return x.theta < y.theta;
    });
    if (!out.constant) {
        for (auto& l : locals) {
            const bool at_corner = std::any_of(B.corners.begin(), B.corners.end(), [&](const Corner& c) {
                return std::abs(c.z - l.z) <= 1e3 * opt.corner_tol * B.scale;
            });
            if (!at_corner) detail::push_unique(out.local_maxima, l, dtol);
        }
        std::sort(out.local_maxima.begin(), out.local_maxima.end(),
                  [](const auto& x, const auto& y) { return x.theta < y.theta; });
    }
    return out;
}

struct SupResult {
    double value = 0.0;
    std::vector<AttainmentPoint> argmax;
};

inline SupResult sup_abs_poly(const Polynomial& p, const BoundaryApproximant& B) {
    ModulusAnalysis a = analyze_modulus(p, B);
    return {a.global_value, std::move(a.argmax)};
}

struct LocalMaxResult {
    std::vector<AttainmentPoint> points;
    bool constant = false;
};

inline LocalMaxResult local_maximizers(const Polynomial& p, const BoundaryApproximant& B) {
    ModulusAnalysis a = analyze_modulus(p, B);
    return {std::move(a.local_maxima), a.constant};
}

/// Z_eps(p, A): local maximizers within relative eps of the global maximum,
/// together with the global argmax set (which includes corners).
struct AttainmentSet {
    std::vector<AttainmentPoint> points;
    double epsilon = 0.0;
    double global_value = 0.0;
    bool forgo = false;
};

inline AttainmentSet z_eps_set(const ModulusAnalysis& a, double eps, double dtol) {
    if (eps < 0.0) throw Error("z_eps_set: epsilon must be nonnegative");
    AttainmentSet out;
    out.epsilon = eps;
    out.global_value = a.global_value;
    out.forgo = a.constant;
    if (a.constant) {
        if (!a.argmax.empty()) out.points.push_back(a.argmax.front());
        return out;
    }
    for (const auto& q : a.argmax) detail::push_unique(out.points, q, dtol);
    for (const auto& q : a.local_maxima)
        if (q.value >= (1.0 - eps) * a.global_value) detail::push_unique(out.points, q, dtol);
    return out;
}

inline AttainmentSet z_eps_set(const Polynomial& p, const BoundaryApproximant& B, double eps) {
    return z_eps_set(analyze_modulus(p, B), eps, 1e-10 * B.scale);
}

/// Full closed boundary as a polyline (Real mode mirrored across the axis).
inline std::vector<cplx> boundary_polyline(const BoundaryApproximant& B) {
    std::vector<cplx> pts;
    if (B.degenerate) return {B.center};
    for (std::size_t i = 0; i < B.samples.size(); ++i) {
        pts.push_back(B.samples[i].z);
        for (const auto& seg : B.segments)
            if (seg.before == i) {
                pts.push_back(seg.start.z);
                pts.push_back(seg.end.z);
            }
    }
    if (B.mode == FieldMode::Real) {
        const std::size_t k = pts.size();
        for (std::size_t i = k; i-- > 0;) pts.push_back(std::conj(pts[i]));
    }
    return pts;
}

/// True when lam lies strictly outside W(B), tested with the support function.
inline bool outside_field_of_values(cplx lam, const Matrix& Bm, int grid = 4096) {
    if (Bm.size() == 0) return true;
    for (int i = 0; i < grid; ++i) {
        const double th = 2.0 * std::numbers::pi * i / grid;
        const HermitianEigen eig = hermitian_eig(hermitian_sweep_matrix(Bm, th));
        const double support = eig.values[Bm.rows() - 1];
        if ((std::polar(1.0, th) * lam).real() > support + 1e-12 * (1.0 + Bm.norm())) return true;
    }
    return false;
}

/// A = diag(lambda, B) with p dominated at the vertex: f(p, A) = 1.
inline PlainPair ice_cream_pair(const IceCreamCone& cfg, const BoundaryOptions& opt = {}) {
    if (!outside_field_of_values(cfg.vertex, cfg.block)) throw Error("ice-cream cone: vertex lies in W(B)");
    Matrix A = block_diag(Matrix::Constant(1, 1, cfg.vertex), cfg.block);
    const double at_vertex = std::abs(eval_poly(cfg.p, cfg.vertex));
    if (cfg.block.size() > 0) {
        Eigen::JacobiSVD<Matrix> svd(eval_poly_matrix(cfg.p, cfg.block));
        if (!(at_vertex > svd.singularValues()[0])) throw Error("ice-cream cone: |p(lambda)| <= ||p(B)||");
    }
    const BoundaryApproximant bd = build_boundary(A, FieldMode::Complex, opt);
    const ModulusAnalysis an = analyze_modulus(cfg.p, bd);
    const double vtol = 1e-8 * bd.scale;
    const bool unique_vertex = an.argmax.size() == 1 && std::abs(an.argmax.front().z - cfg.vertex) <= vtol;
    const bool dominated = std::all_of(an.local_maxima.begin(), an.local_maxima.end(),
                                       [&](const auto& q) { return q.value < at_vertex * (1.0 - 1e-10); });
    if (!unique_vertex || !dominated) throw Error("ice-cream cone: |p| is not uniquely maximized at the vertex");
    return {cfg.p, std::move(A)};
}

inline StructuredMatrixPoint assemble_reference(const IceCreamCone& cfg, FieldMode mode) {
    return make_structured(ice_cream_pair(cfg), mode);
}

}  // namespace crouzeix
