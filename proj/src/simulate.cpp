#include "bmr/simulate.hpp"

#include <algorithm>
#include <cmath>

#include "bmr/linalg.hpp"

namespace bmr {

ControlSignal zero_control(Index m) {
    ControlSignal u;
    for (Index k = 0; k < m; ++k)
        u.channels.emplace_back([](double) { return 0.0; });
    return u;
}

ControlSignal gaussian_pulse(double a, double t0, double tau) {
    if (!(tau > 0.0))
        throw Error(ErrorCode::ConfigInvalid, "pulse width tau must be > 0");
    const double sigma = tau / std::sqrt(8.0 * std::log(2.0));
    ControlSignal u;
    u.channels.emplace_back([a, t0, sigma](double t) {
        const double z = (t - t0) / sigma;
        return a * std::exp(-0.5 * z * z);
    });
    return u;
}

ControlSignal channel_pulse(Index m, Index k, double a, double t0, double tau) {
    if (k < 0 || k >= m)
        throw Error(ErrorCode::BadDimension, "pulse channel out of range");
    ControlSignal u = zero_control(m);
    u.channels[k] = gaussian_pulse(a, t0, tau).channels[0];
    return u;
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84},
};
constexpr double kB5[7] = {35.0 / 384,      0.0,        500.0 / 1113,
                           125.0 / 192,     -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,  0.0,        7571.0 / 16695,
                           393.0 / 640,     -92097.0 / 339200,
                           187.0 / 2100,    1.0 / 40};

using RhsFn = std::function<Vec(double, const Vec&)>;

TrajectoryBundle run_integrator(const RhsFn& f, const Mat& c, const Vec& d,
                                const ControlSignal& u, const Vec& x0,
                                double t0, double t1,
                                const IntegrateOptions& opts) {
    if (!(t1 > t0)) throw Error(ErrorCode::ConfigInvalid, "empty time span");
    if (opts.samples < 2)
        throw Error(ErrorCode::ConfigInvalid, "need at least 2 output samples");
    const Index n = x0.size();
    const Index nt = opts.samples;
    const Index l = c.rows();
    const double span = t1 - t0;

    TrajectoryBundle out;
    out.tol = opts.rel_tol;
    out.t.resize(nt);
    for (Index i = 0; i < nt; ++i) out.t[i] = t0 + span * i / (nt - 1);
    out.u.resize(u.dim(), nt);
    for (Index i = 0; i < nt; ++i) out.u.col(i) = u.eval(out.t[i]);
    out.y.resize(l, nt);

    auto emit = [&](Index i, const Vec& x) {
        out.y.col(i) = c * x;
        if (d.size() > 0) out.y.col(i) += d;
    };

    Vec x = x0;
    double t = t0;
    Vec k[7];
    k[0] = f(t, x);
    emit(0, x);
    Index next_sample = 1;

    double h = span / 1000.0;
    const double hmin = 1e-14 * span;
    const long max_steps = 20000000;

    while (t < t1) {
        if (h < hmin)
            throw Error(ErrorCode::StepSizeUnderflow,
                        "step size underflow at t = " + std::to_string(t));
        if (out.steps + out.rejected > max_steps)
            throw Error(ErrorCode::NoConvergence, "integration step budget exhausted");
        h = std::min(h, t1 - t);

        for (int s = 1; s < 7; ++s) {
            Vec xs = x;
            for (int j = 0; j < s; ++j)
                if (kA[s][j] != 0.0) xs += (h * kA[s][j]) * k[j];
            k[s] = f(t + kC[s] * h, xs);
        }
        Vec xn = x;
        for (int s = 0; s < 7; ++s)
            if (kB5[s] != 0.0) xn += (h * kB5[s]) * k[s];
        Vec err = Vec::Zero(n);
        for (int s = 0; s < 7; ++s) {
            const double w = kB5[s] - kB4[s];
            if (w != 0.0) err += (h * w) * k[s];
        }
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double scale =
                opts.abs_tol +
                opts.rel_tol * std::max(std::abs(x[i]), std::abs(xn[i]));
            const double e = std::abs(err[i]) / scale;
            acc += e * e;
        }
        const double err_norm = std::sqrt(acc / n);

        if (err_norm <= 1.0) {
            // cubic Hermite interpolation onto the uniform output grid
            const Vec& f0 = k[0];
            const Vec& f1 = k[6];
            while (next_sample < nt && out.t[next_sample] <= t + h + 1e-14 * span) {
                const double th = (out.t[next_sample] - t) / h;
                const double h00 = (1 + 2 * th) * (1 - th) * (1 - th);
                const double h10 = th * (1 - th) * (1 - th);
                const double h01 = th * th * (3 - 2 * th);
                const double h11 = th * th * (th - 1);
                Vec xi = h00 * x + (h * h10) * f0 + h01 * xn + (h * h11) * f1;
                emit(next_sample, xi);
                ++next_sample;
            }
            t += h;
            x.swap(xn);
            k[0] = k[6];  // first-same-as-last
            ++out.steps;
            h *= std::clamp(0.9 * std::pow(std::max(err_norm, 1e-10), -0.2), 0.5, 5.0);
        } else {
            ++out.rejected;
            h *= std::clamp(0.9 * std::pow(err_norm, -0.2), 0.2, 0.9);
        }
    }
    if (next_sample == nt - 1) emit(next_sample++, x);
    while (next_sample < nt) emit(next_sample++, x);
    return out;
}

} // namespace

TrajectoryBundle integrate(const BilinearSystem& sys, const ControlSignal& u,
                           const Vec& x0, double t0, double t1,
                           const IntegrateOptions& opts) {
    if (x0.size() != sys.dim())
        throw Error(ErrorCode::BadDimension, "initial state dimension mismatch");
    if (u.dim() != sys.num_inputs())
        throw Error(ErrorCode::BadDimension, "control channel count mismatch");
    const double eta = sys.control_scale();
    const bool has_b = sys.B.size() > 0;
    RhsFn f = [&sys, &u, eta, has_b](double t, const Vec& x) {
        Vec dx = sys.A.apply(x);
        const RealVec uv = u.eval(t);
        for (Index kk = 0; kk < sys.num_inputs(); ++kk) {
            const double uk = eta * uv[kk];
            if (uk == 0.0) continue;
            dx += uk * sys.N[kk].apply(x);
            if (has_b) dx += uk * sys.B.col(kk);
        }
        return dx;
    };
    return run_integrator(f, sys.C, sys.D, u, x0, t0, t1, opts);
}

TrajectoryBundle integrate(const ReducedModel& red, const ControlSignal& u,
                           const Vec& x0, double t0, double t1,
                           const IntegrateOptions& opts) {
    if (x0.size() != red.order())
        throw Error(ErrorCode::BadDimension, "initial state dimension mismatch");
    if (u.dim() != static_cast<Index>(red.n.size()))
        throw Error(ErrorCode::BadDimension, "control channel count mismatch");
    const double eta = red.control_scale;
    RhsFn f = [&red, &u, eta](double t, const Vec& x) {
        Vec dx = red.a * x;
        const RealVec uv = u.eval(t);
        for (size_t kk = 0; kk < red.n.size(); ++kk) {
            const double uk = eta * uv[static_cast<Index>(kk)];
            if (uk == 0.0) continue;
            dx += uk * (red.n[kk] * x);
            if (red.b.size() > 0) dx += uk * red.b.col(static_cast<Index>(kk));
        }
        return dx;
    };
    return run_integrator(f, red.c, red.d, u, x0, t0, t1, opts);
}

ComparisonReport compare_outputs(const TrajectoryBundle& full,
                                 const TrajectoryBundle& red) {
    if (full.t.size() != red.t.size() ||
        (full.t - red.t).cwiseAbs().maxCoeff() >
            1e-12 * std::max(std::abs(full.t[full.t.size() - 1]), 1.0))
        throw Error(ErrorCode::GridMismatch, "sampling grids differ");
    if (full.y.rows() != red.y.rows())
        throw Error(ErrorCode::GridMismatch, "output channel counts differ");
    ComparisonReport rep;
    const Index l = full.y.rows();
    rep.max_dev.resize(l);
    rep.l2_dev.resize(l);
    Mat diff = full.y - red.y;
    for (Index ch = 0; ch < l; ++ch) {
        rep.max_dev[ch] = diff.row(ch).cwiseAbs().maxCoeff();
        rep.l2_dev[ch] =
            std::sqrt(diff.row(ch).cwiseAbs2().mean());
    }
    rep.normalization = full.y.cwiseAbs().maxCoeff();
    rep.max_rel = rep.max_dev.maxCoeff() / std::max(rep.normalization, 1e-300);
    return rep;
}

namespace {

SpectrumReport finish_spectrum(std::vector<Complex> vals, double alpha,
                               bool prepend_zero, Index k) {
    for (auto& v : vals) v += alpha;
    std::sort(vals.begin(), vals.end(), [](Complex a, Complex b) {
        return std::abs(a) < std::abs(b);
    });
    SpectrumReport rep;
    if (prepend_zero) {
        vals.insert(vals.begin(), Complex(0.0));
        rep.zero_prepended = true;
    }
    if (static_cast<Index>(vals.size()) > k) vals.resize(k);
    rep.values = Eigen::Map<Vec>(vals.data(), static_cast<Index>(vals.size()));
    return rep;
}

} // namespace

SpectrumReport spectrum_report(const BilinearSystem& sys, Index k) {
    const double alpha = sys.discount_alpha();
    bool projected = false;
    for (const auto& rec : sys.provenance)
        if (rec.kind == TransformRecord::Kind::ProjectOutNull) projected = true;
    // a deflated zero mode is prepended to the list, so it extends the budget
    if (k < 1 || k > sys.dim() + (projected ? 1 : 0))
        throw Error(ErrorCode::BadDimension, "requested eigenvalue count invalid");

    std::vector<Complex> vals;
    if (sys.dim() <= 600) {
        Vec ev = eig_dense(sys.dense_a());
        vals.assign(ev.data(), ev.data() + ev.size());
    } else {
        // Target the neighborhood of the (possibly discounted) origin. A
        // small negative offset keeps the factorization regular when A has
        // an exact zero eigenvalue.
        const double scale = std::max(sys.A.norm_estimate(), 1e-300);
        const Complex shift(-alpha - 1e-4 * scale, 0.0);
        const Index want = std::min<Index>(sys.dim(), k + 3);
        SparseEigResult res =
            eig_sparse_smallest(sys.A, static_cast<int>(want), shift, 1e-10);
        vals.assign(res.values.data(), res.values.data() + res.values.size());
    }
    return finish_spectrum(std::move(vals), alpha, projected, k);
}

SpectrumReport spectrum_report(const ReducedModel& red, Index k) {
    if (k < 1 || k > red.order() + (red.parent_projected ? 1 : 0))
        throw Error(ErrorCode::BadDimension, "requested eigenvalue count invalid");
    Vec ev = eig_dense(red.a);
    std::vector<Complex> vals(ev.data(), ev.data() + ev.size());
    return finish_spectrum(std::move(vals), red.parent_alpha,
                           red.parent_projected, k);
}

} // namespace bmr
