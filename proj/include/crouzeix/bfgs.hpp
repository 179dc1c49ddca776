#pragma once

// Full-memory BFGS with a weak Armijo-Wolfe line search, usable on
// nonsmooth objectives (the oracle returns a gradient wherever it is called).

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace crouzeix {

struct Objective {
    double f = 0.0;
    Eigen::VectorXd g;
};

/// Returns f = +inf (and any g) where the objective is undefined.
using Oracle = std::function<Objective(const Eigen::VectorXd&)>;

struct OptimizerOptions {
    double normtol = 1e-8;
    int max_iters = 2000;
    double armijo = 1e-4;   // c1
    double wolfe = 0.5;     // c2
    int max_bisections = 48;
    int max_expansions = 60;
    double overflow_limit = 1e150;
    bool scale_initial_hessian = true;
    // Optional hook run on each accepted iterate (e.g. renormalization); it
    // may replace x and must return the objective at the new point.
    std::function<std::pair<Eigen::VectorXd, Objective>(const Eigen::VectorXd&, const Objective&)> renormalize;

    void validate() const {
        if (!(0.0 < armijo && armijo < wolfe && wolfe < 1.0))
            throw std::invalid_argument("line search requires 0 < c1 < c2 < 1");
    }
};

enum class Termination { GradientTol, LinesearchFailure, MaxIters, OverflowGuard };

inline const char* to_string(Termination t) {
    switch (t) {
        case Termination::GradientTol: return "gradient_tol";
        case Termination::LinesearchFailure: return "linesearch_failure";
        case Termination::MaxIters: return "max_iters";
        case Termination::OverflowGuard: return "overflow_guard";
    }
    return "unknown";
}

inline Termination termination_from_string(const std::string& s) {
    if (s == "gradient_tol") return Termination::GradientTol;
    if (s == "linesearch_failure") return Termination::LinesearchFailure;
    if (s == "max_iters") return Termination::MaxIters;
    if (s == "overflow_guard") return Termination::OverflowGuard;
    throw std::invalid_argument("unknown termination reason '" + s + "'");
}

struct RunTrace {
    int iterations = 0;
    int evaluations = 0;
    Eigen::VectorXd x;
    double f = std::numeric_limits<double>::infinity();
    Eigen::VectorXd g;
    double gnorm = std::numeric_limits<double>::infinity();
    Termination reason = Termination::MaxIters;
    std::vector<double> f_history;
    std::vector<double> gnorm_history;
};

struct LineSearchResult {
    enum class Status { Success, ArmijoOnly, Failure, NotDescent };
    Status status = Status::Failure;
    double t = 0.0;
    double f = 0.0;
    double slope = 0.0;  // phi'(t)
    int evaluations = 0;
};

/// phi(t) returns (f(x0 + t d), directional derivative at t).
using LineFunction = std::function<std::pair<double, double>(double)>;

/// Weak Wolfe search by doubling then bisection: accepts t with
/// phi(t) <= f0 + c1 t g0 and phi'(t) >= c2 g0.
inline LineSearchResult weak_wolfe_linesearch(const LineFunction& phi, double f0, double g0,
                                              const OptimizerOptions& opt = {}) {
    LineSearchResult r;
    if (!(g0 < 0.0)) {
        r.status = LineSearchResult::Status::NotDescent;
        return r;
    }
    double lb = 0.0;
    double ub = std::numeric_limits<double>::infinity();
    double t = 1.0;
    int nbisect = 0, nexpand = 0;
    bool have_armijo = false;
    double f_lb = f0, s_lb = g0;
    for (;;) {
        const auto [ft, st] = phi(t);
        ++r.evaluations;
        const bool armijo = std::isfinite(ft) && ft <= f0 + opt.armijo * t * g0 && ft < f0;
        if (armijo && std::isfinite(st) && st >= opt.wolfe * g0) {
            r.status = LineSearchResult::Status::Success;
            r.t = t;
            r.f = ft;
            r.slope = st;
            return r;
        }
        if (armijo) {
            lb = t;
            have_armijo = true;
            f_lb = ft;
            s_lb = st;
        } else {
            ub = t;
        }
        if (std::isfinite(ub)) {
            if (++nbisect > opt.max_bisections) break;
            t = 0.5 * (lb + ub);
        } else {
            if (++nexpand > opt.max_expansions) break;
            t = 2.0 * lb;
        }
    }
    if (have_armijo) {
        r.status = LineSearchResult::Status::ArmijoOnly;
        r.t = lb;
        r.f = f_lb;
        r.slope = s_lb;
    }
    return r;
}

/// Inverse-Hessian update H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T.
/// Skipped unless s^T y > 0.
inline bool bfgs_update(Eigen::MatrixXd& H, const Eigen::VectorXd& s, const Eigen::VectorXd& y) {
    const double sty = s.dot(y);
    if (!(sty > 0.0)) return false;
    const double rho = 1.0 / sty;
    const Eigen::VectorXd Hy = H * y;
    H += (rho * rho * y.dot(Hy) + rho) * (s * s.transpose()) - rho * (Hy * s.transpose() + s * Hy.transpose());
    H = 0.5 * (H + H.transpose());
    return true;
}

inline RunTrace minimize(const Oracle& oracle, const Eigen::VectorXd& x0, const OptimizerOptions& opt = {}) {
    opt.validate();
    RunTrace tr;
    Eigen::VectorXd x = x0;
    Objective cur = oracle(x);
    tr.evaluations = 1;
    if (!std::isfinite(cur.f) || cur.g.size() != x.size() || !cur.g.allFinite())
        throw std::runtime_error("minimize: objective undefined at the initial point");
    const Eigen::Index d = x.size();
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(d, d);
    bool reset_once = false;
    tr.f_history.push_back(cur.f);
    tr.gnorm_history.push_back(cur.g.norm());

    auto finish = [&](Termination why) {
        tr.reason = why;
        tr.x = x;
        tr.f = cur.f;
        tr.g = cur.g;
        tr.gnorm = cur.g.norm();
        return tr;
    };

    for (int iter = 1;; ++iter) {
        if (cur.g.norm() <= opt.normtol) return finish(Termination::GradientTol);
        if (iter > opt.max_iters) return finish(Termination::MaxIters);
        if (x.cwiseAbs().maxCoeff() > opt.overflow_limit) return finish(Termination::OverflowGuard);

        Eigen::VectorXd dir = -H * cur.g;
        double g0 = cur.g.dot(dir);
        if (!(g0 < 0.0) || !dir.allFinite()) {
            if (reset_once) return finish(Termination::LinesearchFailure);
            reset_once = true;
            H.setIdentity();
            dir = -cur.g;
            g0 = cur.g.dot(dir);
        }

        Objective trial;
        Objective armijo_point;
        bool hit_limit = false;  // a trial point left the overflow box
        auto phi = [&](double t) -> std::pair<double, double> {
            const Eigen::VectorXd xt = x + t * dir;
            Objective o;
            if (xt.cwiseAbs().maxCoeff() > opt.overflow_limit) {
                o.f = std::numeric_limits<double>::infinity();
                hit_limit = true;
            } else {
                o = oracle(xt);
                ++tr.evaluations;
            }
            const double slope =
                o.g.size() == dir.size() ? o.g.dot(dir) : std::numeric_limits<double>::quiet_NaN();
            if (std::isfinite(o.f) && o.f <= cur.f + opt.armijo * t * g0 && o.f < cur.f) armijo_point = o;
            trial = std::move(o);
            return {trial.f, slope};
        };
        const LineSearchResult ls = weak_wolfe_linesearch(phi, cur.f, g0, opt);
        if (ls.status == LineSearchResult::Status::Failure || ls.status == LineSearchResult::Status::NotDescent)
            return finish(hit_limit ? Termination::OverflowGuard : Termination::LinesearchFailure);

        Objective next = ls.status == LineSearchResult::Status::Success ? std::move(trial) : std::move(armijo_point);
        const Eigen::VectorXd s = ls.t * dir;
        const Eigen::VectorXd y = next.g - cur.g;
        x += s;
        cur = std::move(next);
        tr.iterations = iter;
        bool rescaled = false;
        if (opt.renormalize) {
            auto [xn, on] = opt.renormalize(x, cur);
            rescaled = xn != x;
            x = std::move(xn);
            cur = std::move(on);
        }
        tr.f_history.push_back(cur.f);
        tr.gnorm_history.push_back(cur.g.norm());
        if (ls.status == LineSearchResult::Status::ArmijoOnly)
            return finish(hit_limit ? Termination::OverflowGuard : Termination::LinesearchFailure);
        if (rescaled) {
            H.setIdentity();
            continue;
        }

        const double sty = s.dot(y);
        if (sty > 0.0) {
            if (iter == 1 && opt.scale_initial_hessian) H *= sty / y.squaredNorm();
            bfgs_update(H, s, y);
        }
    }
}

}  // namespace crouzeix
