// Command-line front end: minimize, sweep, verify, fov, report.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include <crouzeix/crouzeix.hpp>
#include <crouzeix/io.hpp>

namespace fs = std::filesystem;
using namespace crouzeix;

namespace {

struct Overrides {
    std::string config;
    int n = -1, m = -1, runs = -1, workers = -1, max_iters = -1;
    std::string field, outdir;
    double alpha = -1.0, eps = -1.0, normtol = -1.0;
    std::int64_t seed = -1;
    bool renormalize = false;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON config file (flags override it)");
    app->add_option("-n,--n", o.n, "matrix order (>= 2)");
    app->add_option("-m,--m", o.m, "polynomial degree (>= 1)");
    app->add_option("--field", o.field, "real | complex")->check(CLI::IsMember({"real", "complex"}));
    app->add_option("--alpha", o.alpha, "heavy-tail exponent for random starts");
    app->add_option("--runs", o.runs, "number of runs");
    app->add_option("--seed", o.seed, "base seed");
    app->add_option("--eps", o.eps, "epsilon for Z_eps");
    app->add_option("--normtol", o.normtol, "gradient-norm stopping tolerance");
    app->add_option("--max-iters", o.max_iters, "BFGS iteration limit");
    app->add_option("--workers", o.workers, "worker threads (0: all cores)");
    app->add_option("--outdir", o.outdir, "output directory");
    app->add_flag("--renormalize", o.renormalize, "rescale p when its coefficients drift far from 1");
}

SweepConfig resolve(const Overrides& o) {
    SweepConfig cfg;
    if (!o.config.empty()) {
        std::ifstream in(o.config);
        if (!in) throw Error("cannot open config '" + o.config + "'");
        apply_config(cfg, json::parse(in));
    }
    if (o.n >= 0) cfg.n = o.n;
    if (o.m >= 0) cfg.m = o.m;
    if (!o.field.empty()) cfg.mode = field_mode_from_string(o.field);
    if (o.alpha >= 0.0) cfg.alpha = o.alpha;
    if (o.runs >= 0) cfg.runs = o.runs;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.eps >= 0.0) cfg.eps = o.eps;
    if (o.normtol >= 0.0) cfg.optimizer.normtol = o.normtol;
    if (o.max_iters >= 0) cfg.optimizer.max_iters = o.max_iters;
    if (o.workers >= 0) cfg.workers = o.workers;
    if (!o.outdir.empty()) cfg.outdir = o.outdir;
    if (o.renormalize) cfg.renormalize = true;
    cfg.validate();
    return cfg;
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return json::parse(in);
}

std::vector<cplx> coeffs_from_json(const json& j) {
    std::vector<cplx> c;
    if (j.is_array()) {
        for (const auto& x : j) c.emplace_back(x.get<double>(), 0.0);
        return c;
    }
    const auto re = j.at("real").get<std::vector<double>>();
    const auto im = j.contains("imag") ? j.at("imag").get<std::vector<double>>() : std::vector<double>(re.size(), 0.0);
    if (im.size() != re.size()) throw Error("polynomial: real and imag parts differ in length");
    for (std::size_t i = 0; i < re.size(); ++i) c.emplace_back(re[i], im[i]);
    return c;
}

// A run record (has "params") or {"field", "p": coefficients ascending, "A": matrix}.
StructuredMatrixPoint point_from_json(const json& j, FieldMode fallback) {
    if (j.contains("params")) return record_from_json(j).point();
    const FieldMode mode = j.contains("field") ? field_mode_from_string(j.at("field").get<std::string>()) : fallback;
    return make_structured(PlainPair{Polynomial(coeffs_from_json(j.at("p"))), matrix_from_json(j.at("A"))}, mode);
}

int cmd_minimize(const Overrides& o, const std::string& start, int index) {
    SweepConfig cfg = resolve(o);
    RunRecord rec;
    if (start.empty()) {
        rec = run_single(cfg, index);
    } else {
        const StructuredMatrixPoint pt = point_from_json(read_json(start), cfg.mode);
        cfg.n = pt.n();
        cfg.m = pt.m();
        cfg.mode = pt.mode;
        const ParameterLayout L = layout_of(pt);
        rec.index = index;
        rec.layout = L;
        rec.params = pack(pt).values;
        try {
            finish_run(rec, cfg, L, rec.params);
        } catch (const std::exception& e) {
            rec.error = e.what();
        }
    }
    const std::string text = to_json(rec).dump(2);
    if (!cfg.outdir.empty()) write_record(fs::path(cfg.outdir) / record_path(rec.index), rec);
    std::cout << text << "\n";
    return rec.failed() ? 1 : 0;
}

int cmd_sweep(const Overrides& o, bool figures, bool svg) {
    SweepConfig cfg = resolve(o);
    if (cfg.outdir.empty()) cfg.outdir = "sweep_out";
    const auto recs = run_sweep(cfg);
    write_sweep(cfg.outdir, cfg, recs);
    if (figures) emit_figures(cfg.outdir, recs, cfg.plateau_tol, cfg.plateau_min, svg, cfg.eps);
    const std::string report = format_report(recs, cfg.plateau_tol, cfg.plateau_min);
    std::ofstream(fs::path(cfg.outdir) / "report.txt") << report;
    std::cout << report;
    return 0;
}

int cmd_verify(const std::string& path, double eps, bool append) {
    const json j = read_json(path);
    const StructuredMatrixPoint pt = point_from_json(j, FieldMode::Complex);
    const StationarityReport rep = stationarity_report(pt, eps);
    const json out = to_json(rep);
    std::cout << out.dump(2) << "\n";
    if (append) {
        json updated = j;
        updated["verify"].push_back(out);
        std::ofstream(path) << updated.dump(2) << "\n";
    }
    return 0;
}

int cmd_fov(const std::string& path, const std::string& field, const std::string& out) {
    const Matrix A = matrix_from_json(read_json(path));
    const FieldMode mode = field_mode_from_string(field);
    const BoundaryApproximant B = build_boundary(A, mode);
    std::ostringstream s;
    s << "theta,re,im,gap\n";
    char buf[160];
    auto row = [&](double th, cplx z, double gap) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", th, z.real(), z.imag(), gap);
        s << buf;
    };
    if (B.degenerate) row(0.0, B.center, 0.0);
    for (std::size_t i = 0; i < B.samples.size(); ++i) {
        row(B.samples[i].theta, B.samples[i].z, B.samples[i].gap);
        for (const auto& seg : B.segments)
            if (seg.before == i) {
                row(seg.theta, seg.start.z, seg.gap);
                row(seg.theta, seg.end.z, seg.gap);
            }
    }
    if (out.empty()) {
        std::cout << s.str();
    } else {
        std::ofstream f(out);
        if (!f) throw Error("cannot open '" + out + "' for writing");
        f << s.str();
    }
    return 0;
}

int cmd_report(const std::string& dir, double tol, bool figures, bool svg, double eps) {
    const auto recs = load_sweep(dir);
    if (figures) emit_figures(dir, recs, tol, 3, svg, eps);
    std::cout << format_report(recs, tol, 3);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Minimize the Crouzeix ratio max_{W(A)}|p| / ||p(A)|| and check stationarity.\n"
                 "Polynomial coefficients are ascending: c_0 first."};
    app.require_subcommand(1);

    Overrides o_min, o_sweep;
    std::string start;
    int index = 0;
    auto* mn = app.add_subcommand("minimize", "one BFGS run from a given or random start");
    add_common(mn, o_min);
    mn->add_option("--start", start, "start point: run record or {field, p, A} JSON");
    mn->add_option("--index", index, "run index for the random start");

    bool figures = false, svg = false;
    auto* sw = app.add_subcommand("sweep", "random-restart batch");
    add_common(sw, o_sweep);
    sw->add_flag("--figures", figures, "write figure CSV layers");
    sw->add_flag("--svg", svg, "also render SVG");

    std::string record;
    double veps = 1e-4;
    bool append = false;
    auto* vf = app.add_subcommand("verify", "stationarity report for a saved record");
    vf->add_option("record", record, "run record or point JSON")->required();
    vf->add_option("--eps", veps, "epsilon for Z_eps");
    vf->add_flag("--append", append, "append the report to the record file");

    std::string matrix, field = "complex", out;
    auto* fv = app.add_subcommand("fov", "boundary of the field of values as CSV (theta, re, im, gap)");
    fv->add_option("matrix", matrix, "matrix JSON {real, imag}")->required();
    fv->add_option("--field", field, "real | complex")->check(CLI::IsMember({"real", "complex"}));
    fv->add_option("-o,--out", out, "output CSV (default stdout)");

    std::string dir;
    double tol = 1e-4, reps = 1e-4;
    bool rfig = false, rsvg = false;
    auto* rp = app.add_subcommand("report", "plateau summary and stationarity table of a sweep");
    rp->add_option("dir", dir, "sweep output directory")->required();
    rp->add_option("--plateau-tol", tol, "plateau clustering tolerance");
    rp->add_option("--eps", reps, "epsilon for Z_eps in figures");
    rp->add_flag("--figures", rfig, "write figure CSV layers");
    rp->add_flag("--svg", rsvg, "also render SVG");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*mn) return cmd_minimize(o_min, start, index);
        if (*sw) return cmd_sweep(o_sweep, figures, svg);
        if (*vf) return cmd_verify(record, veps, append);
        if (*fv) return cmd_fov(matrix, field, out);
        if (*rp) return cmd_report(dir, tol, rfig, rsvg, reps);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
