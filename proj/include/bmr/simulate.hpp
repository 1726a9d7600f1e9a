#ifndef BMR_SIMULATE_HPP
#define BMR_SIMULATE_HPP

#include <functional>
#include <vector>

#include "bmr/balancing.hpp"
#include "bmr/system.hpp"
#include "bmr/types.hpp"

namespace bmr {

struct ControlSignal {
    std::vector<std::function<double(double)>> channels;

    Index dim() const { return static_cast<Index>(channels.size()); }
    RealVec eval(double t) const {
        RealVec u(dim());
        for (Index k = 0; k < dim(); ++k) u[k] = channels[k](t);
        return u;
    }
};

ControlSignal zero_control(Index m);

/// Single-channel Gaussian pulse a exp(-(t-t0)^2 / (2 sigma^2)) with sigma
/// set from the full width at half maximum: sigma = tau / sqrt(8 ln 2).
ControlSignal gaussian_pulse(double a, double t0, double tau);

/// Pulse on channel k of an m-channel signal; other channels are zero.
ControlSignal channel_pulse(Index m, Index k, double a, double t0, double tau);

struct IntegrateOptions {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    Index samples = 1000;  // uniform output grid over the time span
};

struct TrajectoryBundle {
    RealVec t;            // sample times, ascending
    Eigen::MatrixXd u;    // m x T control samples (as supplied by the caller)
    Mat y;                // l x T outputs
    long steps = 0;       // accepted steps
    long rejected = 0;
    double tol = 0.0;
};

/// Adaptive embedded Runge-Kutta (Dormand-Prince 5(4)) integration of
///   x' = A x + sum_k (eta u_k)(N_k x + b_k),  y = C x + D,
/// where eta is the recorded control scaling of the system, applied here so
/// callers always work with physical controls.
TrajectoryBundle integrate(const BilinearSystem& sys, const ControlSignal& u,
                           const Vec& x0, double t0, double t1,
                           const IntegrateOptions& opts = {});

TrajectoryBundle integrate(const ReducedModel& red, const ControlSignal& u,
                           const Vec& x0, double t0, double t1,
                           const IntegrateOptions& opts = {});

struct ComparisonReport {
    RealVec max_dev;   // per channel, max_t |y_full - y_red|
    RealVec l2_dev;    // per channel, sqrt(mean((y_full - y_red)^2))
    double normalization = 0.0;  // max_t,channel |y_full|
    double max_rel = 0.0;        // max(max_dev) / normalization
};

ComparisonReport compare_outputs(const TrajectoryBundle& full,
                                 const TrajectoryBundle& red);

struct SpectrumReport {
    Vec values;  // sorted by magnitude; discount shift already added back
    bool zero_prepended = false;  // marginal eigenvalue restored for
                                  // projected parents
};

/// k smallest-magnitude eigenvalues. Large sparse systems go through
/// shift-invert Arnoldi; small or dense (reduced) systems are solved
/// densely. The recorded discount shift is added back so spectra refer to
/// the original operator, and the exact zero removed by the null-space
/// projection is prepended again.
SpectrumReport spectrum_report(const BilinearSystem& sys, Index k);
SpectrumReport spectrum_report(const ReducedModel& red, Index k);

} // namespace bmr

#endif
