#include "bmr.h"

#include <cstring>
#include <optional>
#include <string>

#include "bmr/balancing.hpp"
#include "bmr/birka.hpp"
#include "bmr/fpe.hpp"
#include "bmr/gramians.hpp"
#include "bmr/linalg.hpp"
#include "bmr/lvne.hpp"
#include "bmr/simulate.hpp"
#include "bmr/system.hpp"

using namespace bmr;

struct bmr_system {
    BilinearSystem sys;
};
struct bmr_factorization {
    BilinearSystem sys;  // copy, so the handle is self-contained
    SchurForm schur;
    std::optional<GramianPair> gramians;
    double full_h2_sq = -1.0;
};
struct bmr_balanced {
    BalancedRealization bal;
};
struct bmr_reduced {
    ReducedModel red;
};
struct bmr_trajectory {
    TrajectoryBundle tr;
};

namespace {

thread_local std::string g_last_error;

int fail(const Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
}

int fail_unknown(const std::exception& e) {
    g_last_error = e.what();
    return BMR_ERR_UNKNOWN;
}

template <class Fn>
int guarded(Fn&& fn) {
    try {
        fn();
        return BMR_OK;
    } catch (const Error& e) {
        return fail(e);
    } catch (const std::exception& e) {
        return fail_unknown(e);
    }
}

int require_args(bool ok) {
    if (!ok) g_last_error = "null argument";
    return ok ? BMR_OK : BMR_ERR_BAD_DIMENSION;
}

Vec read_complex(const double* data, Index n) {
    Vec v(n);
    for (Index i = 0; i < n; ++i) v[i] = Complex(data[2 * i], data[2 * i + 1]);
    return v;
}

void write_complex(const Vec& v, double* out) {
    for (Index i = 0; i < v.size(); ++i) {
        out[2 * i] = v[i].real();
        out[2 * i + 1] = v[i].imag();
    }
}

ControlSignal make_pulse(Index m, long channel, double amp, double center,
                         double width) {
    if (amp == 0.0) return zero_control(m);
    return channel_pulse(m, channel, amp, center, width);
}

} // namespace

const char* bmr_last_error(void) { return g_last_error.c_str(); }

/* ---- benchmark construction ------------------------------------------- */

int bmr_fpe_build(const char* config_path, bmr_system** out) {
    if (int rc = require_args(out)) return rc;
    return guarded([&] {
        FpeConfig cfg = config_path ? FpeConfig::from_json_file(config_path)
                                    : FpeConfig{};
        *out = new bmr_system{assemble_fpe(cfg).sys};
    });
}

int bmr_lvne_build(const char* config_path, bmr_system** out) {
    if (int rc = require_args(out)) return rc;
    return guarded([&] {
        LvneConfig cfg = config_path ? LvneConfig::from_json_file(config_path)
                                     : default_lvne_config();
        *out = new bmr_system{assemble_lvne(cfg).sys};
    });
}

int bmr_lvne_write_default_config(const char* path) {
    if (int rc = require_args(path)) return rc;
    return guarded([&] { default_lvne_config().to_json_file(path); });
}

/* ---- systems ----------------------------------------------------------- */

int bmr_system_load(const char* dir, bmr_system** out) {
    if (int rc = require_args(dir && out)) return rc;
    return guarded([&] { *out = new bmr_system{load_system(dir)}; });
}

int bmr_system_save(const bmr_system* sys, const char* dir) {
    if (int rc = require_args(sys && dir)) return rc;
    return guarded([&] { save_system(sys->sys, dir); });
}

void bmr_system_free(bmr_system* sys) { delete sys; }

int bmr_system_dim(const bmr_system* sys, long* n) {
    if (int rc = require_args(sys && n)) return rc;
    *n = static_cast<long>(sys->sys.dim());
    return BMR_OK;
}

int bmr_system_num_inputs(const bmr_system* sys, long* m) {
    if (int rc = require_args(sys && m)) return rc;
    *m = static_cast<long>(sys->sys.num_inputs());
    return BMR_OK;
}

int bmr_system_num_outputs(const bmr_system* sys, long* l) {
    if (int rc = require_args(sys && l)) return rc;
    *l = static_cast<long>(sys->sys.num_outputs());
    return BMR_OK;
}

int bmr_system_stationary(const bmr_system* sys, int probability, double* xe,
                          double* residual) {
    if (int rc = require_args(sys && xe)) return rc;
    return guarded([&] {
        StationaryState st = stationary_state(sys->sys, probability != 0);
        write_complex(st.x_e, xe);
        if (residual) *residual = st.residual;
    });
}

int bmr_system_shift_standard(const bmr_system* sys, const double* xe,
                              bmr_system** out) {
    if (int rc = require_args(sys && xe && out)) return rc;
    return guarded([&] {
        *out = new bmr_system{
            shift_to_standard_form(sys->sys, read_complex(xe, sys->sys.dim()))};
    });
}

int bmr_system_project_null(const bmr_system* sys, const double* xe,
                            bmr_system** out) {
    if (int rc = require_args(sys && xe && out)) return rc;
    return guarded([&] {
        *out = new bmr_system{
            project_out_null(sys->sys, read_complex(xe, sys->sys.dim()))};
    });
}

int bmr_system_discount(const bmr_system* sys, double alpha, bmr_system** out) {
    if (int rc = require_args(sys && out)) return rc;
    return guarded([&] { *out = new bmr_system{discount_shift(sys->sys, alpha)}; });
}

int bmr_system_scale_controls(const bmr_system* sys, double eta,
                              bmr_system** out) {
    if (int rc = require_args(sys && out)) return rc;
    return guarded([&] { *out = new bmr_system{scale_controls(sys->sys, eta)}; });
}

int bmr_system_check_stability(const bmr_system* sys, double* cert, int* passed) {
    if (int rc = require_args(sys && cert)) return rc;
    return guarded([&] {
        StabilityCertificate c = check_assumption1(sys->sys);
        cert[0] = c.spectral_abscissa;
        cert[1] = c.lambda_certified;
        cert[2] = c.mu_certified;
        cert[3] = c.contraction_certified;
        cert[4] = c.lambda_spectral;
        cert[5] = c.mu_spectral;
        cert[6] = c.contraction_spectral;
        cert[7] = c.fixed_point_contraction;
        cert[8] = c.control_bound_ratio;
        cert[9] = c.control_bound_product;
        if (passed) *passed = c.passed ? 1 : 0;
    });
}

int bmr_system_spectrum(const bmr_system* sys, long k, double* values,
                        int* zero_prepended) {
    if (int rc = require_args(sys && values)) return rc;
    return guarded([&] {
        SpectrumReport rep = spectrum_report(sys->sys, k);
        write_complex(rep.values, values);
        if (zero_prepended) *zero_prepended = rep.zero_prepended ? 1 : 0;
    });
}

/* ---- Schur factorization and Gramians --------------------------------- */

int bmr_factorization_create(const bmr_system* sys, bmr_factorization** out) {
    if (int rc = require_args(sys && out)) return rc;
    return guarded([&] {
        auto* f = new bmr_factorization;
        f->sys = sys->sys;
        try {
            f->schur = SchurForm::compute(f->sys.dense_a());
        } catch (...) {
            delete f;
            throw;
        }
        *out = f;
    });
}

void bmr_factorization_free(bmr_factorization* f) { delete f; }

int bmr_factorization_gramians(bmr_factorization* f, double tol, int max_iter) {
    if (int rc = require_args(f)) return rc;
    return guarded([&] {
        FixedPointOptions opts;
        if (tol > 0.0) opts.tol = tol;
        if (max_iter > 0) opts.max_iter = max_iter;
        f->gramians = compute_gramians(f->sys, f->schur, opts);
        const double h2 = h2_norm(f->sys, f->gramians->p);
        f->full_h2_sq = h2 * h2;
    });
}

int bmr_factorization_h2_norm(const bmr_factorization* f, double* h2,
                              double* h2_dual) {
    if (int rc = require_args(f)) return rc;
    if (!f->gramians) {
        g_last_error = "Gramians not computed yet";
        return BMR_ERR_CONFIG_INVALID;
    }
    if (h2) *h2 = h2_norm(f->sys, f->gramians->p);
    if (h2_dual) *h2_dual = h2_norm_dual(f->sys, f->gramians->q);
    return BMR_OK;
}

/* ---- balancing and reduction ------------------------------------------ */

int bmr_balance(bmr_factorization* f, bmr_balanced** out) {
    if (int rc = require_args(f && out)) return rc;
    if (!f->gramians) {
        g_last_error = "Gramians not computed yet";
        return BMR_ERR_CONFIG_INVALID;
    }
    return guarded([&] {
        *out = new bmr_balanced{compute_balancing(f->sys, *f->gramians)};
    });
}

void bmr_balanced_free(bmr_balanced* bal) { delete bal; }

int bmr_balanced_rank(const bmr_balanced* bal, long* r) {
    if (int rc = require_args(bal && r)) return rc;
    *r = static_cast<long>(bal->bal.rank());
    return BMR_OK;
}

int bmr_balanced_hsv(const bmr_balanced* bal, double* sigma) {
    if (int rc = require_args(bal && sigma)) return rc;
    std::memcpy(sigma, bal->bal.sigma.data(), bal->bal.rank() * sizeof(double));
    return BMR_OK;
}

int bmr_balanced_suggest_order(const bmr_balanced* bal, double tail_energy,
                               long* d) {
    if (int rc = require_args(bal && d)) return rc;
    return guarded([&] {
        *d = static_cast<long>(suggest_order(
            bal->bal.sigma, tail_energy > 0.0 ? tail_energy : 1e-6));
    });
}

int bmr_reduce_bt(const bmr_balanced* bal, long d, bmr_reduced** out) {
    if (int rc = require_args(bal && out)) return rc;
    return guarded([&] { *out = new bmr_reduced{truncate_bt(bal->bal, d)}; });
}

int bmr_reduce_sp(const bmr_balanced* bal, long d, bmr_reduced** out) {
    if (int rc = require_args(bal && out)) return rc;
    return guarded([&] { *out = new bmr_reduced{reduce_sp(bal->bal, d)}; });
}

int bmr_verify_stability(const bmr_balanced* bal, long d, double* report,
                         int* cluster_warning, int* passed) {
    if (int rc = require_args(bal && report)) return rc;
    return guarded([&] {
        StabilityReport rep = verify_stability(bal->bal, d);
        report[0] = rep.max_re_slow;
        report[1] = rep.max_re_fast;
        report[2] = rep.max_re_schur;
        report[3] = rep.hsv_gap;
        if (cluster_warning) *cluster_warning = rep.cluster_warning ? 1 : 0;
        if (passed) *passed = rep.passed ? 1 : 0;
    });
}

int bmr_reduced_load(const char* dir, bmr_reduced** out) {
    if (int rc = require_args(dir && out)) return rc;
    return guarded([&] { *out = new bmr_reduced{load_reduced(dir)}; });
}

int bmr_reduced_save(const bmr_reduced* red, const char* dir) {
    if (int rc = require_args(red && dir)) return rc;
    return guarded([&] { save_reduced(red->red, dir); });
}

void bmr_reduced_free(bmr_reduced* red) { delete red; }

int bmr_reduced_order(const bmr_reduced* red, long* d) {
    if (int rc = require_args(red && d)) return rc;
    *d = static_cast<long>(red->red.order());
    return BMR_OK;
}

int bmr_reduced_method(const bmr_reduced* red, char* buf, size_t buflen) {
    if (int rc = require_args(red && buf && buflen > 0)) return rc;
    std::strncpy(buf, red->red.method.c_str(), buflen - 1);
    buf[buflen - 1] = '\0';
    return BMR_OK;
}

int bmr_reduced_spectrum(const bmr_reduced* red, long k, double* values,
                         int* zero_prepended) {
    if (int rc = require_args(red && values)) return rc;
    return guarded([&] {
        SpectrumReport rep = spectrum_report(red->red, k);
        write_complex(rep.values, values);
        if (zero_prepended) *zero_prepended = rep.zero_prepended ? 1 : 0;
    });
}

/* ---- H2-optimal reduction --------------------------------------------- */

int bmr_birka(bmr_factorization* f, const bmr_reduced* init, long d,
              unsigned seed, double tol, int max_iter, bmr_reduced** out,
              double* wilson, int* converged, int* iterations) {
    if (int rc = require_args(f && out)) return rc;
    return guarded([&] {
        BirkaOptions opts;
        if (tol > 0.0) opts.tol = tol;
        if (max_iter > 0) opts.max_iter = max_iter;
        ReducedModel start =
            init ? init->red : random_initial_model(f->sys, d, seed);
        BirkaResult res = birka_iterate(f->sys, f->schur, start, opts);
        if (wilson) {
            wilson[0] = res.wilson.r_a;
            wilson[1] = res.wilson.r_n;
            wilson[2] = res.wilson.r_b;
            wilson[3] = res.wilson.r_c;
        }
        if (converged) *converged = res.converged ? 1 : 0;
        if (iterations) *iterations = res.iterations;
        *out = new bmr_reduced{std::move(res.model)};
    });
}

int bmr_wilson_residuals(bmr_factorization* f, const bmr_reduced* red,
                         double* wilson) {
    if (int rc = require_args(f && red && wilson)) return rc;
    return guarded([&] {
        WilsonResiduals w = wilson_residuals(f->sys, f->schur, red->red);
        wilson[0] = w.r_a;
        wilson[1] = w.r_n;
        wilson[2] = w.r_b;
        wilson[3] = w.r_c;
    });
}

int bmr_h2_error(bmr_factorization* f, const bmr_reduced* red,
                 double* abs_error, double* rel_error) {
    if (int rc = require_args(f && red)) return rc;
    if (!f->gramians) {
        g_last_error = "Gramians not computed yet";
        return BMR_ERR_CONFIG_INVALID;
    }
    return guarded([&] {
        H2ErrorReport rep = h2_error(f->sys, f->schur, f->full_h2_sq,
                                     red->red.a, red->red.n, red->red.b,
                                     red->red.c);
        if (abs_error) *abs_error = rep.abs_error;
        if (rel_error) *rel_error = rep.rel_error;
    });
}

/* ---- simulation -------------------------------------------------------- */

int bmr_simulate_system(const bmr_system* sys, const double* x0, double t_begin,
                        double t_end, long samples, long channel, double amp,
                        double center, double width, double rel_tol,
                        double abs_tol, bmr_trajectory** out) {
    if (int rc = require_args(sys && out)) return rc;
    return guarded([&] {
        IntegrateOptions opts;
        if (samples > 1) opts.samples = samples;
        if (rel_tol > 0.0) opts.rel_tol = rel_tol;
        if (abs_tol > 0.0) opts.abs_tol = abs_tol;
        Vec start = x0 ? read_complex(x0, sys->sys.dim())
                       : Vec(Vec::Zero(sys->sys.dim()));
        ControlSignal u =
            make_pulse(sys->sys.num_inputs(), channel, amp, center, width);
        *out = new bmr_trajectory{
            integrate(sys->sys, u, start, t_begin, t_end, opts)};
    });
}

int bmr_simulate_reduced(const bmr_reduced* red, const double* x0,
                         double t_begin, double t_end, long samples,
                         long channel, double amp, double center, double width,
                         double rel_tol, double abs_tol, bmr_trajectory** out) {
    if (int rc = require_args(red && out)) return rc;
    return guarded([&] {
        IntegrateOptions opts;
        if (samples > 1) opts.samples = samples;
        if (rel_tol > 0.0) opts.rel_tol = rel_tol;
        if (abs_tol > 0.0) opts.abs_tol = abs_tol;
        Vec start = x0 ? read_complex(x0, red->red.order())
                       : Vec(Vec::Zero(red->red.order()));
        ControlSignal u = make_pulse(static_cast<Index>(red->red.n.size()),
                                     channel, amp, center, width);
        *out = new bmr_trajectory{
            integrate(red->red, u, start, t_begin, t_end, opts)};
    });
}

void bmr_trajectory_free(bmr_trajectory* tr) { delete tr; }

int bmr_trajectory_sizes(const bmr_trajectory* tr, long* nt, long* m, long* l) {
    if (int rc = require_args(tr)) return rc;
    if (nt) *nt = static_cast<long>(tr->tr.t.size());
    if (m) *m = static_cast<long>(tr->tr.u.rows());
    if (l) *l = static_cast<long>(tr->tr.y.rows());
    return BMR_OK;
}

int bmr_trajectory_data(const bmr_trajectory* tr, double* t, double* u,
                        double* y) {
    if (int rc = require_args(tr)) return rc;
    const auto& b = tr->tr;
    if (t) std::memcpy(t, b.t.data(), b.t.size() * sizeof(double));
    if (u) std::memcpy(u, b.u.data(), b.u.size() * sizeof(double));
    if (y) {
        const double* raw = reinterpret_cast<const double*>(b.y.data());
        std::memcpy(y, raw, 2 * b.y.size() * sizeof(double));
    }
    return BMR_OK;
}

int bmr_trajectory_compare(const bmr_trajectory* full, const bmr_trajectory* red,
                           double* max_rel, double* max_dev) {
    if (int rc = require_args(full && red)) return rc;
    return guarded([&] {
        ComparisonReport rep = compare_outputs(full->tr, red->tr);
        if (max_rel) *max_rel = rep.max_rel;
        if (max_dev)
            std::memcpy(max_dev, rep.max_dev.data(),
                        rep.max_dev.size() * sizeof(double));
    });
}
