#pragma once

// Persistence and output formats: JSON run records and configs, sorted-value
// CSV, figure layers (CSV and a small SVG formatter), and the plateau report.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "experiment.hpp"

namespace crouzeix {

using json = nlohmann::json;

inline constexpr int kRecordSchemaVersion = 1;

namespace detail {

inline json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

inline double number_or_nan(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
    return j.at(key).get<double>();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw Error("write to '" + path.string() + "' failed");
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string fmt(const char* spec, double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

}  // namespace detail

inline json to_json(const RunRecord& r) {
    json j;
    j["schema_version"] = kRecordSchemaVersion;
    j["index"] = r.index;
    j["seed"] = r.seed;
    j["n"] = r.layout.n;
    j["m"] = r.layout.m;
    j["field"] = to_string(r.layout.mode);
    j["numerator"] = detail::number_or_null(r.numerator);
    j["denominator"] = detail::number_or_null(r.denominator);
    j["f"] = detail::number_or_null(r.f);
    j["termination"] = r.failed() ? "error" : to_string(r.reason);
    if (r.failed()) j["error"] = r.error;
    j["iterations"] = r.iterations;
    j["evaluations"] = r.evaluations;
    if (r.has_stationarity) {
        j["eps"] = r.eps;
        j["forgo"] = r.forgo;
        j["z_count"] = r.z_count;
        j["d_norm"] = detail::number_or_null(r.d_norm);
    }
    j["classification"] = to_string(r.classification);
    j["params"] = std::vector<double>(r.params.data(), r.params.data() + r.params.size());
    return j;
}

inline RunRecord record_from_json(const json& j) {
    const int version = j.value("schema_version", 0);
    if (version != kRecordSchemaVersion)
        throw Error("unsupported run record schema version " + std::to_string(version));
    RunRecord r;
    r.index = j.at("index").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.layout = {j.at("n").get<int>(), j.at("m").get<int>(), field_mode_from_string(j.at("field").get<std::string>())};
    r.numerator = detail::number_or_nan(j, "numerator");
    r.denominator = detail::number_or_nan(j, "denominator");
    r.f = detail::number_or_nan(j, "f");
    const std::string term = j.at("termination").get<std::string>();
    if (term == "error") {
        r.error = j.value("error", std::string("error"));
    } else {
        r.reason = termination_from_string(term);
    }
    r.iterations = j.value("iterations", 0);
    r.evaluations = j.value("evaluations", 0);
    if (j.contains("d_norm") || j.contains("forgo")) {
        r.has_stationarity = true;
        r.eps = j.value("eps", 1e-4);
        r.forgo = j.value("forgo", false);
        r.z_count = j.value("z_count", 0);
        r.d_norm = detail::number_or_nan(j, "d_norm");
    }
    r.classification = classification_from_string(j.value("classification", std::string("other")));
    const auto params = j.at("params").get<std::vector<double>>();
    r.params = Eigen::Map<const RealVector>(params.data(), static_cast<Eigen::Index>(params.size()));
    if (r.params.size() != r.layout.size()) throw Error("run record: parameter count does not match n, m, field");
    return r;
}

inline void write_record(const std::filesystem::path& path, const RunRecord& r) {
    detail::write_text(path, to_json(r).dump(2) + "\n");
}

inline RunRecord read_record(const std::filesystem::path& path) {
    return record_from_json(json::parse(detail::read_text(path)));
}

inline json to_json(const StationarityReport& s) {
    json j;
    j["eps"] = s.epsilon;
    j["f"] = s.f;
    j["numerator"] = s.numerator;
    j["denominator"] = s.denominator;
    j["forgo"] = s.forgo;
    j["z_count"] = s.z_count;
    j["d_norm"] = detail::number_or_null(s.d_norm);
    json pts = json::array();
    for (std::size_t i = 0; i < s.points.size(); ++i) {
        json p;
        p["re"] = s.points[i].z.real();
        p["im"] = s.points[i].z.imag();
        p["value"] = s.points[i].value;
        if (s.weights.size() > static_cast<Eigen::Index>(i)) p["weight"] = s.weights[static_cast<Eigen::Index>(i)];
        pts.push_back(p);
    }
    j["points"] = pts;
    return j;
}

/// {"real": [[...]], "imag": [[...]]}, imag optional; or a bare real array.
inline Matrix matrix_from_json(const json& j) {
    const json& re = j.is_array() ? j : j.at("real");
    const Eigen::Index n = static_cast<Eigen::Index>(re.size());
    if (n == 0) throw Error("matrix: empty");
    Matrix A(n, n);
    for (Eigen::Index r = 0; r < n; ++r) {
        if (static_cast<Eigen::Index>(re[static_cast<std::size_t>(r)].size()) != n) throw Error("matrix: not square");
        for (Eigen::Index c = 0; c < n; ++c)
            A(r, c) = re[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
    }
    if (j.is_object() && j.contains("imag")) {
        const json& im = j.at("imag");
        if (static_cast<Eigen::Index>(im.size()) != n) throw Error("matrix: imag part has the wrong shape");
        for (Eigen::Index r = 0; r < n; ++r) {
            if (static_cast<Eigen::Index>(im[static_cast<std::size_t>(r)].size()) != n)
                throw Error("matrix: imag part has the wrong shape");
            for (Eigen::Index c = 0; c < n; ++c)
                A(r, c) += cplx(0.0, im[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>());
        }
    }
    return A;
}

/// Keys: n, m, field, alpha, runs, seed, eps, normtol, max_iters, workers,
/// outdir, renormalize, plateau_tol.
inline void apply_config(SweepConfig& cfg, const json& j) {
    static const char* known[] = {"n",       "m",         "field",   "alpha",       "runs",
                                  "seed",    "eps",       "normtol", "max_iters",   "workers",
                                  "outdir",  "renormalize", "plateau_tol"};
    for (const auto& [key, _] : j.items())
        if (std::find_if(std::begin(known), std::end(known), [&](const char* k) { return key == k; }) == std::end(known))
            throw Error("config: unknown key '" + key + "'");
    if (j.contains("n")) cfg.n = j["n"].get<int>();
    if (j.contains("m")) cfg.m = j["m"].get<int>();
    if (j.contains("field")) cfg.mode = field_mode_from_string(j["field"].get<std::string>());
    if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
    if (j.contains("runs")) cfg.runs = j["runs"].get<int>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("eps")) cfg.eps = j["eps"].get<double>();
    if (j.contains("normtol")) cfg.optimizer.normtol = j["normtol"].get<double>();
    if (j.contains("max_iters")) cfg.optimizer.max_iters = j["max_iters"].get<int>();
    if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
    if (j.contains("outdir")) cfg.outdir = j["outdir"].get<std::string>();
    if (j.contains("renormalize")) cfg.renormalize = j["renormalize"].get<bool>();
    if (j.contains("plateau_tol")) cfg.plateau_tol = j["plateau_tol"].get<double>();
}

inline json to_json(const SweepConfig& cfg) {
    return json{{"n", cfg.n},
                {"m", cfg.m},
                {"field", to_string(cfg.mode)},
                {"alpha", cfg.alpha},
                {"runs", cfg.runs},
                {"seed", cfg.seed},
                {"eps", cfg.eps},
                {"normtol", cfg.optimizer.normtol},
                {"max_iters", cfg.optimizer.max_iters},
                {"workers", cfg.workers},
                {"outdir", cfg.outdir},
                {"renormalize", cfg.renormalize},
                {"plateau_tol", cfg.plateau_tol}};
}

inline std::string sorted_csv(const std::vector<SortedValue>& v) {
    std::string s = "rank,f,run_index\n";
    for (const auto& e : v) s += std::to_string(e.rank) + "," + detail::fmt("%.17g", e.f) + "," + std::to_string(e.run_index) + "\n";
    return s;
}

inline std::string record_path(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run_%05d.json", index);
    return std::string("runs/") + buf;
}

/// outdir/config.json, outdir/runs/run_NNNNN.json, outdir/sorted_f.csv,
/// outdir/plateaus.json
inline void write_sweep(const std::filesystem::path& outdir, const SweepConfig& cfg, const std::vector<RunRecord>& recs) {
    std::filesystem::create_directories(outdir / "runs");
    detail::write_text(outdir / "config.json", to_json(cfg).dump(2) + "\n");
    for (const auto& r : recs) write_record(outdir / record_path(r.index), r);
    detail::write_text(outdir / "sorted_f.csv", sorted_csv(sorted_values(recs)));
    json pj = json::array();
    for (const auto& p : detect_plateaus(recs, cfg.plateau_tol, cfg.plateau_min))
        pj.push_back({{"value", p.value}, {"lo", p.lo}, {"hi", p.hi}, {"count", p.runs.size()}, {"runs", p.runs}});
    detail::write_text(outdir / "plateaus.json", pj.dump(2) + "\n");
}

inline std::vector<RunRecord> load_sweep(const std::filesystem::path& outdir) {
    std::vector<RunRecord> recs;
    const auto dir = outdir / "runs";
    if (!std::filesystem::is_directory(dir)) throw Error("no runs/ directory under '" + outdir.string() + "'");
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") recs.push_back(read_record(e.path()));
    std::sort(recs.begin(), recs.end(), [](const RunRecord& a, const RunRecord& b) { return a.index < b.index; });
    return recs;
}

// Figure data ---------------------------------------------------------------

struct FigurePoint {
    std::string layer;  // boundary | eigenvalue | root | zeps
    cplx z;
};

inline std::vector<FigurePoint> figure_layers(const StructuredMatrixPoint& pt, double eps = 1e-4,
                                              const RatioOptions& opt = {}) {
    std::vector<FigurePoint> out;
    const RatioEvaluation ev = crouzeix_ratio(pt, opt);
    for (const cplx z : boundary_polyline(*ev.boundary)) out.push_back({"boundary", z});
    Eigen::ComplexEigenSolver<Matrix> es(pt.A, false);
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) out.push_back({"eigenvalue", es.eigenvalues()[i]});
    for (const cplx r : poly_roots(pt.p).finite) out.push_back({"root", r});
    const AttainmentSet Z = z_eps_set(ev.analysis, eps, 1e-10 * ev.boundary->scale);
    for (const auto& q : Z.points) {
        if (Z.forgo) break;
        out.push_back({"zeps", q.z});
        if (pt.mode == FieldMode::Real && q.z.imag() != 0.0) out.push_back({"zeps", std::conj(q.z)});
    }
    return out;
}

inline std::string figure_csv(const std::vector<FigurePoint>& pts) {
    std::string s = "layer,re,im\n";
    for (const auto& p : pts) s += p.layer + "," + detail::fmt("%.17g", p.z.real()) + "," + detail::fmt("%.17g", p.z.imag()) + "\n";
    return s;
}

namespace detail {

struct SvgFrame {
    double x0, x1, y0, y1;
    double w = 480.0, h = 480.0, pad = 24.0;
    double sx(double x) const { return pad + (x - x0) / (x1 - x0) * (w - 2 * pad); }
    double sy(double y) const { return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad); }
};

inline SvgFrame frame_for(double x0, double x1, double y0, double y1, bool equal_aspect) {
    if (!(x1 > x0)) { x0 -= 1.0; x1 += 1.0; }
    if (!(y1 > y0)) { y0 -= 1.0; y1 += 1.0; }
    if (equal_aspect) {
        const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
        const double r = 0.55 * std::max(x1 - x0, y1 - y0);
        return {cx - r, cx + r, cy - r, cy + r};
    }
    const double mx = 0.05 * (x1 - x0), my = 0.05 * (y1 - y0);
    return {x0 - mx, x1 + mx, y0 - my, y1 + my};
}

}  // namespace detail

/// Boundary in blue, eigenvalues as blue asterisks, roots as red circles,
/// Z_eps points as black diamonds.
inline std::string figure_svg(const std::vector<FigurePoint>& pts) {
    double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
    for (const auto& p : pts) {
        x0 = std::min(x0, p.z.real()); x1 = std::max(x1, p.z.real());
        y0 = std::min(y0, p.z.imag()); y1 = std::max(y1, p.z.imag());
    }
    const auto F = detail::frame_for(x0, x1, y0, y1, true);
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << F.w << "\" height=\"" << F.h << "\">\n";
    s << "<polygon fill=\"none\" stroke=\"blue\" stroke-width=\"1.5\" points=\"";
    for (const auto& p : pts)
        if (p.layer == "boundary") s << F.sx(p.z.real()) << "," << F.sy(p.z.imag()) << " ";
    s << "\"/>\n";
    for (const auto& p : pts) {
        const double x = F.sx(p.z.real()), y = F.sy(p.z.imag());
        if (p.layer == "eigenvalue")
            s << "<text x=\"" << x << "\" y=\"" << y + 6 << "\" fill=\"blue\" font-size=\"18\" text-anchor=\"middle\">*</text>\n";
        else if (p.layer == "root")
            s << "<circle cx=\"" << x << "\" cy=\"" << y << "\" r=\"6\" fill=\"none\" stroke=\"red\"/>\n";
        else if (p.layer == "zeps")
            s << "<polygon fill=\"none\" stroke=\"black\" points=\"" << x << "," << y - 6 << " " << x + 6 << "," << y << " "
              << x << "," << y + 6 << " " << x - 6 << "," << y << "\"/>\n";
    }
    s << "</svg>\n";
    return s.str();
}

inline std::string sorted_svg(const std::vector<SortedValue>& v) {
    double y0 = 1e300, y1 = -1e300;
    for (const auto& e : v) { y0 = std::min(y0, e.f); y1 = std::max(y1, e.f); }
    const auto F = detail::frame_for(1.0, std::max<double>(2.0, static_cast<double>(v.size())), y0, y1, false);
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << F.w << "\" height=\"" << F.h << "\">\n";
    for (const auto& e : v)
        s << "<circle cx=\"" << F.sx(e.rank) << "\" cy=\"" << F.sy(e.f) << "\" r=\"1.5\" fill=\"black\"/>\n";
    s << "</svg>\n";
    return s.str();
}

/// Sorted-value scatter data and one field-of-values figure per plateau
/// (taken at the plateau's median run).
inline void emit_figures(const std::filesystem::path& outdir, const std::vector<RunRecord>& recs, double plateau_tol,
                         int plateau_min, bool svg, double eps = 1e-4) {
    const auto sv = sorted_values(recs);
    detail::write_text(outdir / "figures" / "sorted_f.csv", sorted_csv(sv));
    if (svg) detail::write_text(outdir / "figures" / "sorted_f.svg", sorted_svg(sv));
    std::map<int, const RunRecord*> by_index;
    for (const auto& r : recs) by_index[r.index] = &r;
    for (const auto& p : detect_plateaus(recs, plateau_tol, plateau_min)) {
        const RunRecord& r = *by_index.at(p.runs[p.runs.size() / 2]);
        const auto layers = figure_layers(r.point(), eps);
        const std::string stem = "fov_" + detail::fmt("%.6f", p.value) + "_run" + std::to_string(r.index);
        detail::write_text(outdir / "figures" / (stem + ".csv"), figure_csv(layers));
        if (svg) detail::write_text(outdir / "figures" / (stem + ".svg"), figure_svg(layers));
    }
}

// Report ----------------------------------------------------------------------

/// Plateau summary followed by a table with one row per plateau end
/// (first and last sorted index), columns as in the stationarity tables:
/// field, sorted index, numerator, denominator, f, |Z_eps|, ||d||.
inline std::string format_report(const std::vector<RunRecord>& recs, double plateau_tol = 1e-4, int plateau_min = 3) {
    std::ostringstream s;
    int failed = 0, converged = 0;
    for (const auto& r : recs) {
        failed += r.failed() ? 1 : 0;
        converged += r.converged() ? 1 : 0;
    }
    s << "runs " << recs.size() << "  converged " << converged << "  failed " << failed << "\n";
    const auto sv = sorted_values(recs);
    std::map<int, int> rank_of;
    for (const auto& e : sv) rank_of[e.run_index] = e.rank;
    std::map<int, const RunRecord*> by_index;
    for (const auto& r : recs) by_index[r.index] = &r;
    const auto plateaus = detect_plateaus(recs, plateau_tol, plateau_min);
    s << "plateaus (tol " << detail::fmt("%.1e", plateau_tol) << ", sorted over all finite runs)\n";
    for (const auto& p : plateaus)
        s << "  " << detail::fmt("%.10f", p.value) << "  count " << p.runs.size() << "  range ["
          << detail::fmt("%.10f", p.lo) << ", " << detail::fmt("%.10f", p.hi) << "]\n";
    s << "\nfield  index  numer      denom      f             |Z_eps|  ||d||\n";
    for (const auto& p : plateaus) {
        std::vector<int> ends{p.runs.front()};
        if (p.runs.size() > 1) ends.push_back(p.runs.back());
        for (int idx : ends) {
            const RunRecord& r = *by_index.at(idx);
            s << (r.layout.mode == FieldMode::Real ? "R" : "C") << "      " << rank_of.at(idx) << "  "
              << detail::fmt("%.3e", r.numerator) << "  " << detail::fmt("%.3e", r.denominator) << "  "
              << detail::fmt("%.10f", r.f) << "  ";
            if (r.classification == Classification::CrabbDisk || !r.has_stationarity || r.forgo)
                s << "                  \n";
            else
                s << r.z_count << "        " << detail::fmt("%.3e", r.d_norm) << "\n";
        }
    }
    return s.str();
}

}  // namespace crouzeix
