#ifndef BMR_BALANCING_HPP
#define BMR_BALANCING_HPP

#include <string>
#include <vector>

#include "bmr/gramians.hpp"
#include "bmr/system.hpp"
#include "bmr/types.hpp"

namespace bmr {

/// Balanced realization from the square-root method. With r the retained
/// numerical rank, t is n x r and t_inv is r x n with t_inv * t = I and
///   t^* P t = diag(sigma),   t_inv Q t_inv^* = diag(sigma).
/// The balanced coefficients (a, n_k, b, c) realize the same input-output
/// map with both Gramians equal to diag(sigma).
struct BalancedRealization {
    Mat t;
    Mat t_inv;
    RealVec sigma;  // Hankel singular values, descending
    Mat a;
    std::vector<Mat> n;
    Mat b;
    Mat c;
    Vec d_feed;
    Index dropped = 0;  // HSVs below 1e-13 * sigma_1 removed before inversion
    // Parent-system bookkeeping carried into reduced models.
    double control_scale = 1.0;
    double parent_alpha = 0.0;
    bool parent_projected = false;

    Index rank() const { return sigma.size(); }
};

struct ReducedModel {
    Mat a;
    std::vector<Mat> n;
    Mat b;
    Mat c;
    Vec d;
    std::string method;  // "bt" | "sp" | "h2"
    // Inherited from the parent system: recorded control scaling (applied
    // to user inputs at simulation time), discount shift (added back when
    // reporting spectra), and whether the parent had its marginal zero
    // eigenvalue projected out.
    double control_scale = 1.0;
    double parent_alpha = 0.0;
    bool parent_projected = false;

    Index order() const { return a.rows(); }
};

struct StabilityReport {
    Vec spectrum_slow;        // eig of the leading balanced block
    Vec spectrum_fast;        // eig of the trailing balanced block
    Vec spectrum_schur;       // eig of the Schur complement
    double max_re_slow = 0.0;
    double max_re_fast = 0.0;
    double max_re_schur = 0.0;
    double hsv_gap = 0.0;     // sigma_d / sigma_{d+1}
    bool cluster_warning = false;  // split inside an HSV cluster
    bool passed = false;
};

BalancedRealization compute_balancing(const BilinearSystem& sys,
                                      const GramianPair& gramians);

/// Leading d x d blocks of the balanced coefficients.
ReducedModel truncate_bt(const BalancedRealization& bal, Index d);

/// Schur-complement elimination of the fast balanced states:
/// A_hat = A11 - A12 A22^{-1} A21, same correction applied to N and C rows;
/// the input map keeps its leading block.
ReducedModel reduce_sp(const BalancedRealization& bal, Index d);

StabilityReport verify_stability(const BalancedRealization& bal, Index d);

/// Smallest d whose relative HSV tail energy is below the threshold.
Index suggest_order(const RealVec& sigma, double tail_energy = 1e-6);

void save_reduced(const ReducedModel& red, const std::string& dir);
ReducedModel load_reduced(const std::string& dir);

} // namespace bmr

#endif
