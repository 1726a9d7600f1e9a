#ifndef BMR_SYSTEM_HPP
#define BMR_SYSTEM_HPP

#include <optional>
#include <string>
#include <vector>

#include "bmr/errors.hpp"
#include "bmr/types.hpp"

namespace bmr {

/// Record of a preprocessing transform applied to a system, in application
/// order. Enough information is kept to replay the pipeline on the original
/// matrices.
struct TransformRecord {
    enum class Kind { ShiftToStandardForm, ProjectOutNull, Discount, ScaleControls };
    Kind kind;
    double alpha = 0.0; // Discount
    double eta = 1.0;   // ScaleControls
    Vec x_e;            // ShiftToStandardForm / ProjectOutNull
};

/// Bilinear control system
///   x' = A x + sum_k u_k (N_k x + b_k),  y = C x + D,
/// with b_k the columns of B. A and the N_k are stored sparse with an
/// optional low-rank correction so the stabilizing projection never
/// densifies them.
struct BilinearSystem {
    SparseLowRank A;
    std::vector<SparseLowRank> N;
    Mat B; // n x m
    Mat C; // l x n
    Vec D; // l (constant feedthrough; zero when absent)
    bool real_field = true;
    std::vector<TransformRecord> provenance;

    Index dim() const { return A.rows(); }
    Index num_inputs() const { return static_cast<Index>(N.size()); }
    Index num_outputs() const { return C.rows(); }

    Mat dense_a() const { return A.dense(); }
    std::vector<Mat> dense_n() const {
        std::vector<Mat> out;
        out.reserve(N.size());
        for (const auto& nk : N) out.push_back(nk.dense());
        return out;
    }
    /// Recorded control scaling (product over ScaleControls records).
    double control_scale() const;
    /// Recorded discount shift (sum over Discount records).
    double discount_alpha() const;

    void validate() const; // dimension consistency; throws BadDimension
};

struct StationaryState {
    Vec x_e;
    double residual = 0.0;      // ||A x_e||
    std::string normalization;  // "unit" or "probability"
};

/// Assumption-1-style stability certificate: exponential envelope
/// ||e^{At}|| <= lambda e^{-mu t} plus the induced small-gain contraction
/// value (lambda^2 / (2 mu)) * sum ||N_k||^2.
struct StabilityCertificate {
    double spectral_abscissa = 0.0;
    // Certified envelope from the Lyapunov equation A^*L + LA + I = 0.
    double lambda_certified = 0.0;
    double mu_certified = 0.0;
    double contraction_certified = 0.0;
    // Bare spectral pair (exact for normal A, optimistic otherwise).
    double lambda_spectral = 1.0;
    double mu_spectral = 0.0;
    double contraction_spectral = 0.0;
    // Direct estimate of the spectral radius of the Gramian fixed-point map
    // P -> L^{-1}(sum N_k P N_k^*); < 1 iff the iteration converges.
    double fixed_point_contraction = 0.0;
    // Admissible-control bounds reported both ways round (the two readings
    // of the envelope smallness condition).
    double control_bound_ratio = 0.0;    // (mu/lambda) / sum||N_k||
    double control_bound_product = 0.0;  // (mu/lambda) * sum||N_k||
    bool passed = false;
};

/// Null vector of A for a system whose A has a simple zero eigenvalue.
/// `probability_normalization` rescales so the entries sum to one (real
/// nonnegative direction expected); otherwise unit 2-norm.
StationaryState stationary_state(const BilinearSystem& sys,
                                 bool probability_normalization = true,
                                 double gap_factor = 1e3);

/// Rewrite a purely bilinear system (B = 0) around a stationary state x_e:
/// new state is x - x_e, B gains columns N_k x_e, D gains C x_e.
BilinearSystem shift_to_standard_form(const BilinearSystem& sys, const Vec& x_e);

/// Eliminate the marginal zero eigenvalue of a mass-conserving system
/// (1^T A = 0, 1^T N_k = 0) by the closed-form (n-1)-state realization.
/// The updates are kept as explicit rank-one corrections.
BilinearSystem project_out_null(const BilinearSystem& sys, const Vec& x_e);

/// A <- A - alpha I. Outputs are then e^{-alpha t}-discounted.
BilinearSystem discount_shift(const BilinearSystem& sys, double alpha);

/// N_k <- N_k / eta, B <- B / eta. The simulation layer multiplies user
/// controls by the recorded eta, so trajectories are unchanged.
BilinearSystem scale_controls(const BilinearSystem& sys, double eta);

StabilityCertificate check_assumption1(const BilinearSystem& sys);

/// Directory bundle: Matrix Market files for sparse parts, dense dumps for
/// B/C, JSON manifest with dimensions and provenance.
void save_system(const BilinearSystem& sys, const std::string& dir);
BilinearSystem load_system(const std::string& dir);

} // namespace bmr

#endif
