#ifndef BMR_FPE_HPP
#define BMR_FPE_HPP

#include <string>

#include "bmr/system.hpp"
#include "bmr/types.hpp"

namespace bmr {

/// Drift-diffusion benchmark on a rectangular domain: density dynamics in a
/// periodically perturbed quadruple-well potential at inverse temperature
/// beta, with two control channels that tilt the potential along the axes.
struct FpeConfig {
    double xmin = -6.0, xmax = 6.0;
    double ymin = -5.5, ymax = 6.5;
    double h1 = 0.25, h2 = 0.25;
    double beta = 4.0;

    void validate() const;  // throws ConfigInvalid naming the offending field
    Index nodes1() const;   // nodes per axis including the boundary
    Index nodes2() const;

    static FpeConfig from_json_file(const std::string& path);
};

/// Potential and its exact partial derivatives.
double potential_eval(double x1, double x2);
double potential_dx1(double x1, double x2);
double potential_dx2(double x1, double x2);

struct FpeAssembly {
    BilinearSystem sys;  // A, N1, N2, C assembled; purely bilinear (B empty)
    RealVec x1, x2;      // node coordinates (column-major state index i + j*n1)
    Index n1 = 0, n2 = 0;
    // False when the mesh undersamples the periodic potential term (fewer
    // than 4 nodes per oscillation period); dominant eigenvalues are then
    // unreliable and downstream spectrum consumers must not trust them.
    bool resolves_potential = true;
};

/// Conservative finite-volume discretization of the drift-diffusion operator
/// on the node grid, with zero-flux boundary faces. Column sums of A and the
/// N_k vanish exactly (discrete mass conservation).
FpeAssembly assemble_fpe(const FpeConfig& cfg);

/// 4 x n observable matrix summing cell-area-weighted density over the four
/// quadrants, ordered NE, NW, SW, SE; points on an axis go east / north.
Mat quadrant_observables(const FpeConfig& cfg);

/// exp(-beta (V - u . x)) on the grid, normalized to unit integral by
/// trapezoidal quadrature.
RealVec analytic_stationary_density(const FpeConfig& cfg, double u1 = 0.0,
                                    double u2 = 0.0);

/// Trapezoidal quadrature weights matching the node grid.
RealVec quadrature_weights(const FpeConfig& cfg);

} // namespace bmr

#endif
