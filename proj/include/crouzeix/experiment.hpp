#pragma once

// Random-restart sweeps: heavy-tailed starting points, BFGS, stationarity
// check, run classification and plateau detection over sorted final values.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "bfgs.hpp"
#include "fov_boundary.hpp"
#include "poly_matrix.hpp"
#include "ratio.hpp"
#include "stationarity.hpp"

namespace crouzeix {

struct SweepConfig {
    int n = 2;
    int m = 3;
    FieldMode mode = FieldMode::Real;
    double alpha = 2.0;
    int runs = 200;
    std::uint64_t seed = 0;
    OptimizerOptions optimizer;
    RatioOptions ratio;
    double eps = 1e-4;
    std::string outdir;
    int workers = 0;  // 0: one per hardware thread
    bool renormalize = false;
    double plateau_tol = 1e-4;
    int plateau_min = 3;

    void validate() const {
        if (n < 2) throw Error("sweep: n must be at least 2");
        if (m < 1) throw Error("sweep: m must be at least 1");
        if (runs < 1) throw Error("sweep: run count must be at least 1");
        if (!(alpha >= 0.0)) throw Error("sweep: alpha must be nonnegative");
        if (!(eps >= 0.0)) throw Error("sweep: eps must be nonnegative");
        optimizer.validate();
    }
};

enum class Classification { CrabbDisk, IceCream, Other };

inline const char* to_string(Classification c) {
    switch (c) {
        case Classification::CrabbDisk: return "crabb_disk";
        case Classification::IceCream: return "ice_cream";
        case Classification::Other: return "other";
    }
    return "other";
}

inline Classification classification_from_string(const std::string& s) {
    if (s == "crabb_disk") return Classification::CrabbDisk;
    if (s == "ice_cream") return Classification::IceCream;
    if (s == "other") return Classification::Other;
    throw Error("unknown classification '" + s + "'");
}

struct RunRecord {
    int index = 0;
    std::uint64_t seed = 0;
    double numerator = std::numeric_limits<double>::quiet_NaN();
    double denominator = std::numeric_limits<double>::quiet_NaN();
    double f = std::numeric_limits<double>::quiet_NaN();
    Termination reason = Termination::MaxIters;
    std::string error;  // nonempty when the run failed outright
    int iterations = 0;
    int evaluations = 0;
    bool has_stationarity = false;
    bool forgo = false;
    double eps = 1e-4;
    int z_count = 0;
    double d_norm = std::numeric_limits<double>::quiet_NaN();
    Classification classification = Classification::Other;
    ParameterLayout layout;
    RealVector params;

    bool failed() const { return !error.empty(); }
    bool converged() const {
        return !failed() && std::isfinite(f) &&
               (reason == Termination::GradientTol || reason == Termination::LinesearchFailure);
    }
    StructuredMatrixPoint point() const { return unpack({params, layout}); }
};

/// x e^{alpha x^2}
inline double heavy_tail_transform(double x, double alpha) { return x * std::exp(alpha * x * x); }

template <class Rng>
double heavy_tail_sample(Rng& rng, double alpha) {
    if (!(alpha >= 0.0)) throw Error("heavy_tail_sample: alpha must be nonnegative");
    std::normal_distribution<double> normal(0.0, 1.0);
    return heavy_tail_transform(normal(rng), alpha);
}

/// Every free real parameter drawn independently; structural zeros stay zero.
template <class Rng>
StructuredMatrixPoint random_init(Rng& rng, int n, int m, FieldMode mode, double alpha) {
    const ParameterLayout L{n, m, mode};
    RealVector x(L.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = heavy_tail_sample(rng, alpha);
    return unpack({x, L});
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t run_seed(std::uint64_t base_seed, int index) {
    return splitmix64(splitmix64(base_seed) ^ static_cast<std::uint64_t>(index));
}

/// Relative spread of distances from the area centroid of the boundary polygon.
inline double radius_variation(const BoundaryApproximant& B) {
    const std::vector<cplx> P = boundary_polyline(B);
    if (P.size() < 3) return std::numeric_limits<double>::infinity();
    double area = 0.0;
    cplx c = 0.0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        const cplx a = P[i], b = P[(i + 1) % P.size()];
        const double cross = a.real() * b.imag() - b.real() * a.imag();
        area += cross;
        c += cross * (a + b);
    }
    if (!(std::abs(area) > 0.0)) return std::numeric_limits<double>::infinity();
    c /= 3.0 * area;
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0, sum = 0.0;
    for (const cplx z : P) {
        const double r = std::abs(z - c);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        sum += r;
    }
    const double mean = sum / static_cast<double>(P.size());
    return mean > 0.0 ? (hi - lo) / mean : std::numeric_limits<double>::infinity();
}

struct ClassifyOptions {
    double crabb_f_tol = 5e-4;
    double circle_tol = 1e-4;
    double ice_f_tol = 1e-4;
};

inline Classification classify(double f, const RatioEvaluation& ev, const ClassifyOptions& opt = {}) {
    if (std::abs(f - 0.5) <= opt.crabb_f_tol && radius_variation(*ev.boundary) <= opt.circle_tol)
        return Classification::CrabbDisk;
    if (std::abs(f - 1.0) <= opt.ice_f_tol && !ev.analysis.argmax.empty() && ev.analysis.argmax.front().is_corner)
        return Classification::IceCream;
    return Classification::Other;
}

inline Classification classify(const StructuredMatrixPoint& pt, const RatioOptions& ropt = {},
                               const ClassifyOptions& opt = {}) {
    const RatioEvaluation ev = crouzeix_ratio(pt, ropt);
    return classify(ev.f, ev, opt);
}

inline Classification classify(const RunRecord& rec, const StructuredMatrixPoint& pt, const RatioOptions& ropt = {}) {
    const RatioEvaluation ev = crouzeix_ratio(pt, ropt);
    return classify(rec.f, ev);
}

/// Objective and gradient in packed coordinates; +inf where f is undefined.
inline Oracle ratio_oracle(const ParameterLayout& L, const RatioOptions& opt = {}) {
    return [L, opt](const RealVector& x) {
        Objective o;
        try {
            const RatioEvaluation ev = crouzeix_ratio(unpack({x, L}), opt);
            o.f = ev.f;
            o.g = ev.gradient;
        } catch (const Error&) {
            o.f = std::numeric_limits<double>::infinity();
        }
        return o;
    };
}

namespace detail {

// Divides the coefficients of p by their largest modulus when it drifts far
// from 1; f is unchanged.
inline OptimizerOptions with_renormalization(OptimizerOptions opt, const ParameterLayout& L, const Oracle& oracle) {
    const Eigen::Index nc = (L.m + 1) * (L.mode == FieldMode::Complex ? 2 : 1);
    opt.renormalize = [nc, oracle](const RealVector& x, const Objective& cur) -> std::pair<RealVector, Objective> {
        const double big = x.head(nc).cwiseAbs().maxCoeff();
        if (!(big > 1e8 || (big > 0.0 && big < 1e-8))) return {x, cur};
        RealVector y = x;
        y.head(nc) /= big;
        Objective o = oracle(y);
        if (!std::isfinite(o.f)) return {x, cur};
        return {std::move(y), std::move(o)};
    };
    return opt;
}

}  // namespace detail

/// Optimizes from x0 and fills the final-point fields of rec.
inline void finish_run(RunRecord& rec, const SweepConfig& cfg, const ParameterLayout& L, const RealVector& x0) {
    const Oracle oracle = ratio_oracle(L, cfg.ratio);
    const OptimizerOptions opt = cfg.renormalize ? detail::with_renormalization(cfg.optimizer, L, oracle) : cfg.optimizer;
    const RunTrace tr = minimize(oracle, x0, opt);
    rec.iterations = tr.iterations;
    rec.evaluations = tr.evaluations;
    rec.reason = tr.reason;
    rec.params = tr.x;
    rec.layout = L;
    rec.eps = cfg.eps;

    const StructuredMatrixPoint pt = unpack({tr.x, L});
    RatioEvaluation ev;
    try {
        ev = crouzeix_ratio(pt, cfg.ratio);
    } catch (const OverflowError&) {
        rec.reason = Termination::OverflowGuard;
        return;
    }
    rec.numerator = ev.numerator;
    rec.denominator = ev.denominator;
    rec.f = rec.numerator / rec.denominator;
    rec.classification = classify(rec.f, ev);
    if (rec.reason == Termination::OverflowGuard) return;
    const StationarityReport rep = stationarity_report(pt, ev, cfg.eps);
    rec.has_stationarity = true;
    rec.forgo = rep.forgo;
    rec.z_count = rep.z_count;
    rec.d_norm = rep.d_norm;
}

/// init -> minimize -> evaluate -> stationarity -> classify. Never throws for
/// numerical failures; they are recorded in the returned record.
inline RunRecord run_single(const SweepConfig& cfg, int index) {
    RunRecord rec;
    rec.index = index;
    rec.seed = run_seed(cfg.seed, index);
    rec.eps = cfg.eps;
    const ParameterLayout L{cfg.n, cfg.m, cfg.mode};
    rec.layout = L;
    std::mt19937_64 rng(rec.seed);
    const StructuredMatrixPoint start = random_init(rng, cfg.n, cfg.m, cfg.mode, cfg.alpha);
    rec.params = pack(start).values;
    try {
        finish_run(rec, cfg, L, rec.params);
    } catch (const std::exception& e) {
        rec.error = e.what();
        if (rec.error.empty()) rec.error = "unknown error";
    }
    return rec;
}

/// Runs on a worker pool; results are ordered by run index.
inline std::vector<RunRecord> run_sweep(const SweepConfig& cfg) {
    cfg.validate();
    std::vector<RunRecord> out(static_cast<std::size_t>(cfg.runs));
    int workers = cfg.workers > 0 ? cfg.workers : static_cast<int>(std::thread::hardware_concurrency());
    workers = std::clamp(workers, 1, cfg.runs);
    std::atomic<int> next{0};
    auto work = [&] {
        for (int i = next++; i < cfg.runs; i = next++) {
            try {
                out[static_cast<std::size_t>(i)] = run_single(cfg, i);
            } catch (const std::exception& e) {
                RunRecord r;
                r.index = i;
                r.seed = run_seed(cfg.seed, i);
                r.error = e.what();
                out[static_cast<std::size_t>(i)] = std::move(r);
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return out;
}

struct SortedValue {
    int rank = 0;
    double f = 0.0;
    int run_index = 0;
};

/// Finite final values in nondecreasing order, ties by run index.
inline std::vector<SortedValue> sorted_values(const std::vector<RunRecord>& recs) {
    std::vector<SortedValue> v;
    for (const auto& r : recs)
        if (!r.failed() && std::isfinite(r.f)) v.push_back({0, r.f, r.index});
    std::sort(v.begin(), v.end(), [](const SortedValue& a, const SortedValue& b) {
        return a.f < b.f || (a.f == b.f && a.run_index < b.run_index);
    });
    for (std::size_t i = 0; i < v.size(); ++i) v[i].rank = static_cast<int>(i) + 1;
    return v;
}

struct Plateau {
    double value = 0.0;  // median member
    double lo = 0.0;
    double hi = 0.0;
    std::vector<int> runs;  // in sorted order
};

/// Greedy clustering of sorted values: a cluster never spans more than tol.
inline std::vector<Plateau> detect_plateaus(const std::vector<SortedValue>& sorted, double tol, int min_size) {
    std::vector<Plateau> out;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i + 1;
        while (j < sorted.size() && sorted[j].f - sorted[i].f <= tol) ++j;
        if (static_cast<int>(j - i) >= min_size) {
            Plateau p;
            p.lo = sorted[i].f;
            p.hi = sorted[j - 1].f;
            p.value = sorted[i + (j - i - 1) / 2].f;
            for (std::size_t k = i; k < j; ++k) p.runs.push_back(sorted[k].run_index);
            out.push_back(std::move(p));
        }
        i = j;
    }
    return out;
}

/// Plateaus among converged runs only.
inline std::vector<Plateau> detect_plateaus(const std::vector<RunRecord>& recs, double tol = 1e-4, int min_size = 3) {
    std::vector<RunRecord> conv;
    for (const auto& r : recs)
        if (r.converged()) conv.push_back(r);
    return detect_plateaus(sorted_values(conv), tol, min_size);
}

}  // namespace crouzeix
