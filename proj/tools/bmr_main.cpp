// Command-line driver for the bilinear model-reduction toolkit. Talks to the
// core exclusively through the C interface in bmr.h.
#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bmr.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 ok, 1 user/input error, 2 numerical failure.
struct ToolError : std::runtime_error {
    int exit_code;
    ToolError(std::string msg, int code)
        : std::runtime_error(std::move(msg)), exit_code(code) {}
};

int classify(int rc) {
    switch (rc) {
        case BMR_ERR_IO:
        case BMR_ERR_CONFIG_INVALID:
        case BMR_ERR_BAD_DIMENSION:
            return 1;
        default:
            return 2;
    }
}

void check(int rc, const std::string& what) {
    if (rc != BMR_OK)
        throw ToolError(what + ": " + bmr_last_error(), classify(rc));
}

struct SysDel { void operator()(bmr_system* p) const { bmr_system_free(p); } };
struct FacDel { void operator()(bmr_factorization* p) const { bmr_factorization_free(p); } };
struct BalDel { void operator()(bmr_balanced* p) const { bmr_balanced_free(p); } };
struct RedDel { void operator()(bmr_reduced* p) const { bmr_reduced_free(p); } };
struct TrajDel { void operator()(bmr_trajectory* p) const { bmr_trajectory_free(p); } };
using SysPtr = std::unique_ptr<bmr_system, SysDel>;
using FacPtr = std::unique_ptr<bmr_factorization, FacDel>;
using BalPtr = std::unique_ptr<bmr_balanced, BalDel>;
using RedPtr = std::unique_ptr<bmr_reduced, RedDel>;
using TrajPtr = std::unique_ptr<bmr_trajectory, TrajDel>;

SysPtr load_sys(const std::string& dir) {
    bmr_system* raw = nullptr;
    check(bmr_system_load(dir.c_str(), &raw), "loading " + dir);
    return SysPtr(raw);
}

RedPtr load_red(const std::string& dir) {
    bmr_reduced* raw = nullptr;
    check(bmr_reduced_load(dir.c_str(), &raw), "loading " + dir);
    return RedPtr(raw);
}

/* Shared preprocessing: stationary state, shift to standard form, stabilize
 * the drift (deflate the conserved direction or apply an exponential
 * discount), and fold the control-scaling factor in. */
struct PrepOptions {
    std::string stabilize = "project";  // project | shift | none
    double alpha = 1e-3;
    double eta = 1.0;
    bool density = false;  // divide the stationary state by the cell area
    double cell_area = 1.0;
};

SysPtr preprocess(const bmr_system* raw, const PrepOptions& opt) {
    long n = 0;
    check(bmr_system_dim(raw, &n), "dim");
    std::vector<double> xe(2 * n);
    double residual = 0.0;
    check(bmr_system_stationary(raw, 1, xe.data(), &residual), "stationary state");
    if (opt.density && opt.cell_area != 1.0)
        for (double& v : xe) v /= opt.cell_area;

    bmr_system* shifted = nullptr;
    check(bmr_system_shift_standard(raw, xe.data(), &shifted), "shift");
    SysPtr cur(shifted);

    if (opt.stabilize == "project") {
        bmr_system* next = nullptr;
        check(bmr_system_project_null(cur.get(), xe.data(), &next),
              "null-space projection");
        cur.reset(next);
    } else if (opt.stabilize == "shift") {
        bmr_system* next = nullptr;
        check(bmr_system_discount(cur.get(), opt.alpha, &next), "discount");
        cur.reset(next);
    } else if (opt.stabilize != "none") {
        throw ToolError("unknown --stabilize value: " + opt.stabilize, 1);
    }
    if (opt.eta != 1.0) {
        bmr_system* next = nullptr;
        check(bmr_system_scale_controls(cur.get(), opt.eta, &next),
              "control scaling");
        cur.reset(next);
    }
    return cur;
}

void add_prep_flags(CLI::App* cmd, PrepOptions& prep) {
    cmd->add_option("--stabilize", prep.stabilize,
                    "project | shift | none (default project)");
    cmd->add_option("--alpha", prep.alpha, "discount rate for --stabilize shift");
    cmd->add_option("--eta", prep.eta, "control scaling factor");
    cmd->add_flag("--density", prep.density,
                  "treat the stationary state as a density (divide by cell area)");
    cmd->add_option("--cell-area", prep.cell_area,
                    "grid cell area used with --density");
}

FacPtr factorize(const bmr_system* sys, double tol, int max_iter) {
    bmr_factorization* f = nullptr;
    check(bmr_factorization_create(sys, &f), "Schur factorization");
    FacPtr fac(f);
    check(bmr_factorization_gramians(fac.get(), tol, max_iter), "Gramians");
    return fac;
}

std::ofstream open_out(const std::string& path) {
    fs::path p(path);
    if (p.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(p.parent_path(), ec);
    }
    std::ofstream out(path);
    if (!out) throw ToolError("cannot write " + path, 1);
    return out;
}

void write_manifest(const std::string& dir, const std::string& command,
                    const json& options, const std::vector<std::string>& outputs,
                    unsigned seed) {
    json m = {
        {"command", command},
        {"tool_version", kVersion},
        {"seed", seed},
        {"options", options},
        {"outputs", outputs},
    };
    auto out = open_out((fs::path(dir) / "run_manifest.json").string());
    out << m.dump(2) << "\n";
}

std::vector<std::complex<double>> spectrum_of(const bmr_system* sys, long k) {
    std::vector<double> buf(2 * k);
    int zero = 0;
    check(bmr_system_spectrum(sys, k, buf.data(), &zero), "spectrum");
    std::vector<std::complex<double>> v(k);
    for (long i = 0; i < k; ++i) v[i] = {buf[2 * i], buf[2 * i + 1]};
    return v;
}

std::vector<std::complex<double>> spectrum_of(const bmr_reduced* red, long k) {
    std::vector<double> buf(2 * k);
    int zero = 0;
    check(bmr_reduced_spectrum(red, k, buf.data(), &zero), "spectrum");
    std::vector<std::complex<double>> v(k);
    for (long i = 0; i < k; ++i) v[i] = {buf[2 * i], buf[2 * i + 1]};
    return v;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

/* ---- build ------------------------------------------------------------- */

struct BuildArgs {
    std::string model;
    std::string config;
    std::string out;
    double beta = 0.0;  // convenience override for the drift-diffusion model
    std::string emit_config;
};

int cmd_build(const BuildArgs& a) {
    std::string config = a.config;
    if (a.beta > 0.0) {
        if (a.model != "fpe") throw ToolError("--beta only applies to fpe", 1);
        fs::create_directories(a.out);
        config = (fs::path(a.out) / "config.json").string();
        json j = a.config.empty() ? json::object() : [&] {
            std::ifstream in(a.config);
            if (!in) throw ToolError("cannot open " + a.config, 1);
            json parsed;
            in >> parsed;
            return parsed;
        }();
        j["beta"] = a.beta;
        open_out(config) << j.dump(2) << "\n";
    }
    if (!a.emit_config.empty()) {
        if (a.model != "lvne")
            throw ToolError("--emit-config only applies to lvne", 1);
        check(bmr_lvne_write_default_config(a.emit_config.c_str()),
              "writing default config");
        if (a.out.empty()) return 0;
    }

    bmr_system* raw = nullptr;
    const char* cfg = config.empty() ? nullptr : config.c_str();
    if (a.model == "fpe")
        check(bmr_fpe_build(cfg, &raw), "building drift-diffusion system");
    else if (a.model == "lvne")
        check(bmr_lvne_build(cfg, &raw), "building quantum system");
    else
        throw ToolError("unknown model: " + a.model, 1);
    SysPtr sys(raw);

    long n = 0, m = 0, l = 0;
    bmr_system_dim(sys.get(), &n);
    bmr_system_num_inputs(sys.get(), &m);
    bmr_system_num_outputs(sys.get(), &l);
    check(bmr_system_save(sys.get(), a.out.c_str()), "saving bundle");
    write_manifest(a.out, "build",
                   {{"model", a.model}, {"config", config}, {"n", n},
                    {"inputs", m}, {"outputs", l}},
                   {a.out}, 0);
    std::printf("built %s: n=%ld, %ld input(s), %ld output(s) -> %s\n",
                a.model.c_str(), n, m, l, a.out.c_str());
    return 0;
}

/* ---- reduce ------------------------------------------------------------ */

struct ReduceArgs {
    std::string bundle;
    std::vector<std::string> methods{"bt"};
    std::vector<long> dims;
    PrepOptions prep;
    std::string out;
    unsigned seed = 0;
    double tol = 0.0;
    int max_iter = 0;
};

RedPtr reduce_one(bmr_factorization* fac, bmr_balanced* bal,
                  const std::string& method, long d, unsigned seed, double tol,
                  int max_iter) {
    bmr_reduced* raw = nullptr;
    if (method == "bt") {
        check(bmr_reduce_bt(bal, d, &raw), "balanced truncation");
    } else if (method == "sp") {
        check(bmr_reduce_sp(bal, d, &raw), "singular perturbation");
    } else if (method == "h2") {
        // Balanced truncation seeds the fixed-point iteration.
        bmr_reduced* init = nullptr;
        check(bmr_reduce_bt(bal, d, &init), "balanced truncation (seed)");
        RedPtr init_guard(init);
        double wilson[4];
        int converged = 0, iterations = 0;
        check(bmr_birka(fac, init, d, seed, tol, max_iter, &raw, wilson,
                        &converged, &iterations),
              "H2 fixed-point iteration");
        std::printf("  h2 d=%ld: %d iteration(s), converged=%d, "
                    "optimality residuals %.2e %.2e %.2e %.2e\n",
                    d, iterations, converged, wilson[0], wilson[1], wilson[2],
                    wilson[3]);
    } else {
        throw ToolError("unknown method: " + method, 1);
    }
    return RedPtr(raw);
}

int cmd_reduce(const ReduceArgs& a) {
    if (a.dims.empty()) throw ToolError("--d is required", 1);
    SysPtr raw = load_sys(a.bundle);
    SysPtr sys = preprocess(raw.get(), a.prep);
    FacPtr fac = factorize(sys.get(), a.tol, a.max_iter);
    bmr_balanced* braw = nullptr;
    check(bmr_balance(fac.get(), &braw), "balancing");
    BalPtr bal(braw);

    long rank = 0;
    bmr_balanced_rank(bal.get(), &rank);
    std::vector<double> hsv(rank);
    bmr_balanced_hsv(bal.get(), hsv.data());
    std::vector<std::string> outputs;
    {
        auto out = open_out((fs::path(a.out) / "hsv.csv").string());
        out << "index,sigma\n";
        for (long i = 0; i < rank; ++i)
            out << i + 1 << "," << fmt(hsv[i]) << "\n";
        outputs.push_back((fs::path(a.out) / "hsv.csv").string());
    }

    for (const std::string& method : a.methods) {
        for (long d : a.dims) {
            RedPtr red = reduce_one(fac.get(), bal.get(), method, d, a.seed,
                                    a.tol, a.max_iter);
            std::string dir =
                (fs::path(a.out) / (method + "_d" + std::to_string(d))).string();
            check(bmr_reduced_save(red.get(), dir.c_str()), "saving " + dir);
            outputs.push_back(dir);
            double abs_err = 0.0, rel_err = 0.0;
            check(bmr_h2_error(fac.get(), red.get(), &abs_err, &rel_err),
                  "H2 error");
            std::printf("%s d=%ld: H2 error %.4e (relative %.4e) -> %s\n",
                        method.c_str(), d, abs_err, rel_err, dir.c_str());
        }
    }
    write_manifest(a.out, "reduce",
                   {{"bundle", a.bundle}, {"methods", a.methods},
                    {"d", a.dims}, {"stabilize", a.prep.stabilize},
                    {"alpha", a.prep.alpha}, {"eta", a.prep.eta},
                    {"rank", rank}},
                   outputs, a.seed);
    return 0;
}

/* ---- spectrum ---------------------------------------------------------- */

struct SpectrumArgs {
    std::string bundle;
    bool reduced = false;
    long k = 12;
    std::string out;
};

int cmd_spectrum(const SpectrumArgs& a) {
    std::vector<std::complex<double>> vals;
    if (a.reduced) {
        RedPtr red = load_red(a.bundle);
        long d = 0;
        bmr_reduced_order(red.get(), &d);
        vals = spectrum_of(red.get(), std::min(a.k, d + 1));
    } else {
        SysPtr sys = load_sys(a.bundle);
        vals = spectrum_of(sys.get(), a.k);
    }
    auto out = open_out(a.out);
    out << "index,re,im\n";
    for (size_t i = 0; i < vals.size(); ++i)
        out << i + 1 << "," << fmt(vals[i].real()) << "," << fmt(vals[i].imag())
            << "\n";
    for (const auto& v : vals)
        std::printf("% .6f %+.6fi\n", v.real(), v.imag());
    return 0;
}

/* ---- spectra table ------------------------------------------------------------ */

struct TableArgs {
    std::string bundle;
    std::vector<std::string> methods{"bt", "h2"};
    std::vector<long> dims{25, 50, 100, 200};
    long k = 12;
    PrepOptions prep;
    std::string out;
    unsigned seed = 0;
    double tol = 0.0;
    int max_iter = 0;
};

int cmd_spectra_table(const TableArgs& a) {
    SysPtr raw = load_sys(a.bundle);
    std::vector<std::complex<double>> full = spectrum_of(raw.get(), a.k);

    SysPtr sys = preprocess(raw.get(), a.prep);
    FacPtr fac = factorize(sys.get(), a.tol, a.max_iter);
    bmr_balanced* braw = nullptr;
    check(bmr_balance(fac.get(), &braw), "balancing");
    BalPtr bal(braw);

    std::vector<std::string> headers{"full_re", "full_im"};
    std::vector<std::vector<std::complex<double>>> cols{full};
    for (const std::string& method : a.methods) {
        for (long d : a.dims) {
            RedPtr red = reduce_one(fac.get(), bal.get(), method, d, a.seed,
                                    a.tol, a.max_iter);
            cols.push_back(spectrum_of(red.get(), a.k));
            headers.push_back(method + "_d" + std::to_string(d) + "_re");
            headers.push_back(method + "_d" + std::to_string(d) + "_im");
        }
    }
    auto out = open_out(a.out);
    for (size_t i = 0; i < headers.size(); ++i)
        out << headers[i] << (i + 1 < headers.size() ? ',' : '\n');
    for (long r = 0; r < a.k; ++r) {
        for (size_t c = 0; c < cols.size(); ++c) {
            out << fmt(cols[c][r].real()) << "," << fmt(cols[c][r].imag());
            out << (c + 1 < cols.size() ? ',' : '\n');
        }
    }
    fs::path dir = fs::path(a.out).parent_path();
    write_manifest(dir.empty() ? "." : dir.string(), "spectra-table",
                   {{"bundle", a.bundle}, {"methods", a.methods},
                    {"d", a.dims}, {"k", a.k}},
                   {a.out}, a.seed);
    std::printf("wrote %s (%ld rows x %zu columns)\n", a.out.c_str(), a.k,
                cols.size());
    return 0;
}

/* ---- h2curve ----------------------------------------------------------- */

struct CurveArgs {
    std::string bundle;
    std::vector<std::string> methods{"bt", "sp", "h2"};
    std::vector<long> dims;
    PrepOptions prep;
    std::string out;
    unsigned seed = 0;
    double tol = 0.0;
    int max_iter = 0;
};

int cmd_h2curve(const CurveArgs& a) {
    if (a.dims.empty()) throw ToolError("--d is required", 1);
    SysPtr raw = load_sys(a.bundle);
    SysPtr sys = preprocess(raw.get(), a.prep);
    FacPtr fac = factorize(sys.get(), a.tol, a.max_iter);
    bmr_balanced* braw = nullptr;
    check(bmr_balance(fac.get(), &braw), "balancing");
    BalPtr bal(braw);

    auto out = open_out(a.out);
    out << "method,d,abs_error,rel_error\n";
    for (const std::string& method : a.methods) {
        for (long d : a.dims) {
            RedPtr red = reduce_one(fac.get(), bal.get(), method, d, a.seed,
                                    a.tol, a.max_iter);
            double abs_err = 0.0, rel_err = 0.0;
            check(bmr_h2_error(fac.get(), red.get(), &abs_err, &rel_err),
                  "H2 error");
            // Errors smaller than the trace-solve resolution are reported at
            // the resolution floor, so the curve flattens there instead of
            // producing spurious sub-machine values.
            out << method << "," << d << "," << fmt(abs_err) << ","
                << fmt(rel_err) << "\n";
            std::printf("%s d=%ld: %.4e (relative %.4e)\n", method.c_str(),
                        d, abs_err, rel_err);
        }
    }
    fs::path dir = fs::path(a.out).parent_path();
    write_manifest(dir.empty() ? "." : dir.string(), "h2curve",
                   {{"bundle", a.bundle}, {"methods", a.methods}, {"d", a.dims},
                    {"eta", a.prep.eta}, {"stabilize", a.prep.stabilize}},
                   {a.out}, a.seed);
    return 0;
}

/* ---- simulate / populations ------------------------------------------- */

struct SimArgs {
    std::string bundle;
    std::vector<std::string> reduced;
    PrepOptions prep;
    long channel = 0;
    double amp = 0.0;
    double center = 0.0;
    double width = 1.0;
    double t0 = 0.0;
    double t1 = 1.0;
    long samples = 1000;
    double rel_tol = 0.0;
    double abs_tol = 0.0;
    std::string out;
};

int cmd_simulate(const SimArgs& a) {
    SysPtr raw = load_sys(a.bundle);
    SysPtr sys = preprocess(raw.get(), a.prep);

    bmr_trajectory* traw = nullptr;
    check(bmr_simulate_system(sys.get(), nullptr, a.t0, a.t1, a.samples,
                              a.channel, a.amp, a.center, a.width, a.rel_tol,
                              a.abs_tol, &traw),
          "full simulation");
    TrajPtr full(traw);
    long nt = 0, m = 0, l = 0;
    bmr_trajectory_sizes(full.get(), &nt, &m, &l);

    std::vector<TrajPtr> reduced;
    std::vector<std::string> labels;
    for (const std::string& dir : a.reduced) {
        RedPtr red = load_red(dir);
        bmr_trajectory* rr = nullptr;
        check(bmr_simulate_reduced(red.get(), nullptr, a.t0, a.t1, a.samples,
                                   a.channel, a.amp, a.center, a.width,
                                   a.rel_tol, a.abs_tol, &rr),
              "reduced simulation " + dir);
        reduced.emplace_back(rr);
        char method[16];
        bmr_reduced_method(red.get(), method, sizeof method);
        long d = 0;
        bmr_reduced_order(red.get(), &d);
        labels.push_back(std::string(method) + "_d" + std::to_string(d));
    }

    std::vector<double> t(nt), u(m * nt), y(2 * l * nt);
    bmr_trajectory_data(full.get(), t.data(), u.data(), y.data());

    auto out = open_out(a.out);
    out << "t";
    for (long j = 0; j < m; ++j) out << ",u" << j;
    for (long j = 0; j < l; ++j) out << ",full_y" << j << "_re,full_y" << j << "_im";
    for (const auto& lab : labels)
        for (long j = 0; j < l; ++j)
            out << "," << lab << "_y" << j << "_re," << lab << "_y" << j << "_im";
    out << "\n";

    std::vector<std::vector<double>> ry(reduced.size());
    for (size_t r = 0; r < reduced.size(); ++r) {
        ry[r].resize(2 * l * nt);
        bmr_trajectory_data(reduced[r].get(), nullptr, nullptr, ry[r].data());
    }
    for (long i = 0; i < nt; ++i) {
        out << fmt(t[i]);
        for (long j = 0; j < m; ++j) out << "," << fmt(u[j + m * i]);
        for (long j = 0; j < l; ++j)
            out << "," << fmt(y[2 * (j + l * i)]) << ","
                << fmt(y[2 * (j + l * i) + 1]);
        for (size_t r = 0; r < reduced.size(); ++r)
            for (long j = 0; j < l; ++j)
                out << "," << fmt(ry[r][2 * (j + l * i)]) << ","
                    << fmt(ry[r][2 * (j + l * i) + 1]);
        out << "\n";
    }

    for (size_t r = 0; r < reduced.size(); ++r) {
        double max_rel = 0.0;
        check(bmr_trajectory_compare(full.get(), reduced[r].get(), &max_rel,
                                     nullptr),
              "comparison");
        std::printf("%s: max normalized output deviation %.4e\n",
                    labels[r].c_str(), max_rel);
    }
    fs::path dir = fs::path(a.out).parent_path();
    write_manifest(dir.empty() ? "." : dir.string(), "simulate",
                   {{"bundle", a.bundle}, {"reduced", a.reduced},
                    {"channel", a.channel}, {"amp", a.amp},
                    {"center", a.center}, {"width", a.width},
                    {"t", {a.t0, a.t1}}, {"samples", a.samples}},
                   {a.out}, 0);
    return 0;
}

/* ---- verify-stability --------------------------------------------------- */

struct VerifyArgs {
    std::string bundle;
    std::vector<long> dims;
    PrepOptions prep;
    std::string out;
    double tol = 0.0;
    int max_iter = 0;
};

int cmd_verify(const VerifyArgs& a) {
    if (a.dims.empty()) throw ToolError("--d is required", 1);
    SysPtr raw = load_sys(a.bundle);
    SysPtr sys = preprocess(raw.get(), a.prep);
    FacPtr fac = factorize(sys.get(), a.tol, a.max_iter);
    bmr_balanced* braw = nullptr;
    check(bmr_balance(fac.get(), &braw), "balancing");
    BalPtr bal(braw);

    std::ofstream out;
    if (!a.out.empty()) {
        out = open_out(a.out);
        out << "d,max_re_slow,max_re_fast,max_re_schur,hsv_gap,cluster_warning,"
               "passed\n";
    }
    bool all_passed = true;
    for (long d : a.dims) {
        double rep[4];
        int warn = 0, passed = 0;
        check(bmr_verify_stability(bal.get(), d, rep, &warn, &passed),
              "stability check");
        all_passed = all_passed && passed;
        std::printf("d=%ld: slow %.3e, fast %.3e, schur %.3e, gap %.3g%s %s\n",
                    d, rep[0], rep[1], rep[2], rep[3],
                    warn ? " (clustered singular values)" : "",
                    passed ? "PASS" : "FAIL");
        if (out.is_open())
            out << d << "," << fmt(rep[0]) << "," << fmt(rep[1]) << ","
                << fmt(rep[2]) << "," << fmt(rep[3]) << "," << warn << ","
                << passed << "\n";
    }
    return all_passed ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Model-order reduction for bilinear control systems"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kVersion);

    BuildArgs build;
    auto* cb = app.add_subcommand("build", "Assemble a benchmark system bundle");
    cb->add_option("model", build.model, "fpe | lvne")->required();
    cb->add_option("--config", build.config, "JSON configuration file");
    cb->add_option("--beta", build.beta, "inverse temperature (fpe only)");
    cb->add_option("--emit-config", build.emit_config,
                   "write the default lvne configuration to this path");
    cb->add_option("--out", build.out, "output bundle directory");

    ReduceArgs red;
    auto* cr = app.add_subcommand("reduce", "Compute reduced-order models");
    cr->add_option("--bundle", red.bundle, "system bundle")->required();
    cr->add_option("--method", red.methods, "bt | sp | h2 (repeatable)")
        ->delimiter(',');
    cr->add_option("--d", red.dims, "reduced orders")->delimiter(',')->required();
    add_prep_flags(cr, red.prep);
    cr->add_option("--seed", red.seed, "seed for randomized choices");
    cr->add_option("--tol", red.tol, "iteration tolerance");
    cr->add_option("--max-iter", red.max_iter, "iteration cap");
    cr->add_option("--out", red.out, "output directory")->required();

    SpectrumArgs spec;
    auto* cs = app.add_subcommand("spectrum", "Smallest-magnitude eigenvalues");
    cs->add_option("--bundle", spec.bundle, "system or reduced bundle")
        ->required();
    cs->add_flag("--reduced", spec.reduced, "bundle holds a reduced model");
    cs->add_option("-k", spec.k, "number of eigenvalues");
    cs->add_option("--out", spec.out, "CSV path")->required();

    TableArgs tab;
    auto* ct = app.add_subcommand(
        "spectra-table", "Full and reduced spectra side by side");
    ct->add_option("--bundle", tab.bundle, "system bundle")->required();
    ct->add_option("--method", tab.methods, "methods to tabulate")
        ->delimiter(',');
    ct->add_option("--d", tab.dims, "reduced orders")->delimiter(',');
    ct->add_option("-k", tab.k, "rows (eigenvalues per column)");
    add_prep_flags(ct, tab.prep);
    ct->add_option("--seed", tab.seed, "seed for randomized choices");
    ct->add_option("--tol", tab.tol, "iteration tolerance");
    ct->add_option("--max-iter", tab.max_iter, "iteration cap");
    ct->add_option("--out", tab.out, "CSV path")->required();

    CurveArgs curve;
    auto* ch = app.add_subcommand("h2curve", "H2 error versus reduced order");
    ch->add_option("--bundle", curve.bundle, "system bundle")->required();
    ch->add_option("--method", curve.methods, "methods to sweep")
        ->delimiter(',');
    ch->add_option("--d", curve.dims, "reduced orders")->delimiter(',')
        ->required();
    add_prep_flags(ch, curve.prep);
    ch->add_option("--seed", curve.seed, "seed for randomized choices");
    ch->add_option("--tol", curve.tol, "iteration tolerance");
    ch->add_option("--max-iter", curve.max_iter, "iteration cap");
    ch->add_option("--out", curve.out, "CSV path")->required();

    SimArgs sim;
    auto* ci = app.add_subcommand(
        "simulate", "Integrate full and reduced dynamics under a pulse");
    ci->add_option("--bundle", sim.bundle, "system bundle")->required();
    ci->add_option("--reduced", sim.reduced, "reduced bundle(s)")
        ->delimiter(',');
    add_prep_flags(ci, sim.prep);
    ci->add_option("--channel", sim.channel, "control channel for the pulse");
    ci->add_option("--amp", sim.amp, "pulse amplitude (0 = uncontrolled)");
    ci->add_option("--center", sim.center, "pulse center time");
    ci->add_option("--width", sim.width, "pulse full width at half maximum");
    ci->add_option("--t-begin", sim.t0, "integration start");
    ci->add_option("--t-end", sim.t1, "integration end")->required();
    ci->add_option("--samples", sim.samples, "output grid size");
    ci->add_option("--rel-tol", sim.rel_tol, "relative step tolerance");
    ci->add_option("--abs-tol", sim.abs_tol, "absolute step tolerance");
    ci->add_option("--out", sim.out, "CSV path")->required();

    SimArgs pop;
    auto* cp = app.add_subcommand(
        "populations",
        "Population dynamics under the standard benchmark pulses");
    cp->add_option("--bundle", pop.bundle, "system bundle")->required();
    cp->add_option("--reduced", pop.reduced, "reduced bundle(s)")
        ->delimiter(',');
    add_prep_flags(cp, pop.prep);
    std::string model = "fpe";
    cp->add_option("--model", model, "fpe | lvne (selects the pulse defaults)");
    cp->add_option("--out", pop.out, "CSV path")->required();

    VerifyArgs ver;
    auto* cv = app.add_subcommand("verify-stability",
                                  "Spectral checks on truncated realizations");
    cv->add_option("--bundle", ver.bundle, "system bundle")->required();
    cv->add_option("--d", ver.dims, "reduced orders")->delimiter(',')
        ->required();
    add_prep_flags(cv, ver.prep);
    cv->add_option("--tol", ver.tol, "iteration tolerance");
    cv->add_option("--max-iter", ver.max_iter, "iteration cap");
    cv->add_option("--out", ver.out, "CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (cb->parsed()) return cmd_build(build);
        if (cr->parsed()) return cmd_reduce(red);
        if (cs->parsed()) return cmd_spectrum(spec);
        if (ct->parsed()) return cmd_spectra_table(tab);
        if (ch->parsed()) return cmd_h2curve(curve);
        if (ci->parsed()) return cmd_simulate(sim);
        if (cp->parsed()) {
            if (model == "fpe") {
                pop.channel = 1;  // pulse tilts the potential in x2
                pop.amp = 0.5;
                pop.center = 150.0;
                pop.width = 100.0;
                pop.t0 = 0.0;
                pop.t1 = 500.0;
                pop.prep.density = true;
                pop.prep.cell_area = 0.0625;
            } else if (model == "lvne") {
                pop.channel = 0;
                pop.amp = 3.0;
                pop.center = 15.0;
                pop.width = 10.0;
                pop.t0 = 0.0;
                pop.t1 = 50.0;
                pop.prep.stabilize = "shift";
            } else {
                throw ToolError("unknown model: " + model, 1);
            }
            return cmd_simulate(pop);
        }
        if (cv->parsed()) return cmd_verify(ver);
    } catch (const ToolError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 1;
}
