#ifndef BMR_LVNE_HPP
#define BMR_LVNE_HPP

#include <string>
#include <vector>

#include "bmr/system.hpp"
#include "bmr/types.hpp"

namespace bmr {

enum class StateClass { Left = 0, Right = 1, Delocalized = 2 };

/// Open quantum system benchmark: q bound states of an asymmetric double
/// well, dipole-weighted downward relaxation rates closed by detailed
/// balance at temperature theta, and a control field coupling through the
/// dipole matrix. The density matrix is vectorized to an n = q^2 bilinear
/// system with populations ordered before coherences.
struct LvneConfig {
    Index q = 0;
    RealVec energies;                 // ascending
    Eigen::MatrixXd dipole;           // q x q symmetric (real eigenbasis)
    double gamma = 0.1;               // base downward rate, fixes rate(0 <- 2)
    double theta = 0.1;               // temperature
    std::vector<StateClass> classes;  // size q

    void validate() const;
    static LvneConfig from_json_file(const std::string& path);
    void to_json_file(const std::string& path) const;
};

/// Bundled default: lowest 21 states of a discretized 1-D asymmetric double
/// well tuned so the classification comes out 6 left / 5 right / 10
/// delocalized, with the position matrix as dipole proxy.
LvneConfig default_lvne_config();

/// Full q x q rate matrix: entry (i, j) is the transition rate j -> i.
/// Downward rates are gamma * |mu_ij|^2 / |mu_02|^2; upward partners follow
/// from detailed balance, rate(j<-i) = exp(-(E_j - E_i)/theta) rate(i<-j).
Eigen::MatrixXd lindblad_rates(const LvneConfig& cfg);

struct LvneAssembly {
    BilinearSystem sys;  // A, N (single input), C (3 outputs); purely bilinear
    Index q = 0;
    // State index layout: population (i,i) -> i; coherences (a,b), a != b,
    // row-major after the population block.
    Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> coherence_index;
};

/// Vectorized master equation: A collects the coherent part -i[H0, .] and
/// the projector-jump dissipator (block diagonal: q x q population rate
/// block, diagonal coherence decay); N vectorizes +i[mu, .].
LvneAssembly assemble_lvne(const LvneConfig& cfg);

/// 3 x n indicator matrix summing populations by class (left, right,
/// delocalized).
Mat well_observables(const LvneConfig& cfg);

/// Gibbs populations exp(-E_i/theta), normalized; the coherence entries of
/// the thermal state vanish.
RealVec gibbs_populations(const LvneConfig& cfg);

} // namespace bmr

#endif
