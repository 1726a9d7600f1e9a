#include "bmr/lvne.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include <lapacke.h>
#include <nlohmann/json.hpp>

namespace bmr {

void LvneConfig::validate() const {
    if (q < 2) throw Error(ErrorCode::ConfigInvalid, "q: need at least 2 states");
    if (energies.size() != q)
        throw Error(ErrorCode::ConfigInvalid, "energies: size must equal q");
    for (Index i = 1; i < q; ++i)
        if (energies[i] < energies[i - 1])
            throw Error(ErrorCode::ConfigInvalid, "energies: must be nondecreasing");
    if (dipole.rows() != q || dipole.cols() != q)
        throw Error(ErrorCode::ConfigInvalid, "dipole: must be q x q");
    if ((dipole - dipole.transpose()).cwiseAbs().maxCoeff() >
        1e-12 * std::max(dipole.cwiseAbs().maxCoeff(), 1e-300))
        throw Error(ErrorCode::ConfigInvalid, "dipole: must be symmetric");
    if (!(gamma > 0.0)) throw Error(ErrorCode::ConfigInvalid, "gamma: must be > 0");
    if (!(theta > 0.0)) throw Error(ErrorCode::ConfigInvalid, "theta: must be > 0");
    if (static_cast<Index>(classes.size()) != q)
        throw Error(ErrorCode::ConfigInvalid, "classes: size must equal q");
}

namespace {

StateClass class_from_string(const std::string& s) {
    if (s == "L") return StateClass::Left;
    if (s == "R") return StateClass::Right;
    if (s == "D") return StateClass::Delocalized;
    throw Error(ErrorCode::ConfigInvalid, "classes: entries must be L, R or D");
}

const char* class_to_string(StateClass c) {
    switch (c) {
        case StateClass::Left: return "L";
        case StateClass::Right: return "R";
        case StateClass::Delocalized: return "D";
    }
    return "?";
}

} // namespace

LvneConfig LvneConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("bad JSON: ") + e.what());
    }
    LvneConfig cfg;
    try {
        cfg.q = j.at("q").get<Index>();
        auto e = j.at("energies").get<std::vector<double>>();
        cfg.energies = Eigen::Map<RealVec>(e.data(), static_cast<Index>(e.size()));
        auto d = j.at("dipole").get<std::vector<std::vector<double>>>();
        cfg.dipole.resize(static_cast<Index>(d.size()),
                          d.empty() ? 0 : static_cast<Index>(d[0].size()));
        for (size_t r = 0; r < d.size(); ++r) {
            if (static_cast<Index>(d[r].size()) != cfg.dipole.cols())
                throw Error(ErrorCode::ConfigInvalid, "dipole: ragged rows");
            for (size_t c = 0; c < d[r].size(); ++c)
                cfg.dipole(static_cast<Index>(r), static_cast<Index>(c)) = d[r][c];
        }
        cfg.gamma = j.value("gamma", cfg.gamma);
        cfg.theta = j.value("theta", cfg.theta);
        for (const auto& s : j.at("classes"))
            cfg.classes.push_back(class_from_string(s.get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("config field: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

void LvneConfig::to_json_file(const std::string& path) const {
    nlohmann::json j;
    j["q"] = q;
    j["energies"] = std::vector<double>(energies.data(), energies.data() + q);
    std::vector<std::vector<double>> d(q, std::vector<double>(q));
    for (Index r = 0; r < q; ++r)
        for (Index c = 0; c < q; ++c) d[r][c] = dipole(r, c);
    j["dipole"] = d;
    j["gamma"] = gamma;
    j["theta"] = theta;
    std::vector<std::string> cls;
    for (auto c : classes) cls.push_back(class_to_string(c));
    j["classes"] = cls;
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
    out << j.dump(2) << "\n";
}

LvneConfig default_lvne_config() {
    // 1-D asymmetric double well U(x) = B ((x/x0)^2 - 1)^2 + s x on a
    // uniform grid, solved with the standard three-point kinetic stencil.
    constexpr double x0 = 3.0, depth = 1.15, tilt = 0.1 / 3.0, mass = 20.0;
    constexpr double half_width = 7.0;
    constexpr int npts = 801;
    constexpr Index q = 21;

    const double h = 2.0 * half_width / (npts - 1);
    std::vector<double> x(npts), u(npts), diag(npts), off(npts - 1);
    for (int i = 0; i < npts; ++i) {
        x[i] = -half_width + h * i;
        const double r = x[i] / x0;
        u[i] = depth * (r * r - 1.0) * (r * r - 1.0) + tilt * x[i];
        diag[i] = 1.0 / (mass * h * h) + u[i];
    }
    for (int i = 0; i + 1 < npts; ++i) off[i] = -0.5 / (mass * h * h);

    std::vector<double> z(static_cast<size_t>(npts) * npts);
    int info = LAPACKE_dstev(LAPACK_COL_MAJOR, 'V', npts, diag.data(),
                             off.data(), z.data(), npts);
    if (info != 0)
        throw Error(ErrorCode::NoConvergence, "tridiagonal eigensolve failed");
    // diag now holds the ascending eigenvalues, z the orthonormal vectors.

    LvneConfig cfg;
    cfg.q = q;
    // Moderate bath temperature: cold enough that the thermal state prefers
    // the deep well, warm enough that excited populations and coherences
    // carry weight (a frozen bath makes most of Liouville space numerically
    // unreachable).
    cfg.theta = 0.4;
    cfg.energies = Eigen::Map<RealVec>(diag.data(), q);
    cfg.dipole.resize(q, q);
    for (Index a = 0; a < q; ++a)
        for (Index b = 0; b < q; ++b) {
            double s = 0.0;
            for (int i = 0; i < npts; ++i)
                s += z[a * npts + i] * x[i] * z[b * npts + i];
            cfg.dipole(a, b) = s;
        }
    cfg.dipole = 0.5 * (cfg.dipole + cfg.dipole.transpose()).eval();

    // Barrier top: maximum of U strictly between the two well minima.
    int imin_l = 0, imin_r = npts - 1;
    for (int i = 0; i < npts; ++i) {
        if (x[i] < 0.0 && u[i] < u[imin_l]) imin_l = i;
        if (x[i] > 0.0 && u[i] < u[imin_r]) imin_r = i;
    }
    int ib = imin_l;
    for (int i = imin_l; i <= imin_r; ++i)
        if (u[i] > u[ib]) ib = i;
    const double barrier = u[ib];
    const double xb = x[ib];

    for (Index k = 0; k < q; ++k) {
        double p_left = 0.0, p_total = 0.0;
        for (int i = 0; i < npts; ++i) {
            const double p = z[k * npts + i] * z[k * npts + i];
            p_total += p;
            if (x[i] < xb) p_left += p;
        }
        const double frac = p_left / p_total;
        if (cfg.energies[k] < barrier && frac > 0.9)
            cfg.classes.push_back(StateClass::Left);
        else if (cfg.energies[k] < barrier && frac < 0.1)
            cfg.classes.push_back(StateClass::Right);
        else
            cfg.classes.push_back(StateClass::Delocalized);
    }
    cfg.validate();
    return cfg;
}

Eigen::MatrixXd lindblad_rates(const LvneConfig& cfg) {
    cfg.validate();
    const Index q = cfg.q;
    const double mu02 = std::abs(cfg.dipole(0, 2 < q ? 2 : q - 1));
    if (mu02 <= 0.0)
        throw Error(ErrorCode::ConfigInvalid,
                    "dipole: reference element mu_02 vanishes, cannot fix the "
                    "rate scale");
    const double scale = cfg.gamma / (mu02 * mu02);
    Eigen::MatrixXd rates = Eigen::MatrixXd::Zero(q, q);
    for (Index j = 1; j < q; ++j)
        for (Index i = 0; i < j; ++i) {
            const double mu = cfg.dipole(i, j);
            const double down = scale * mu * mu;  // j -> i releases energy
            rates(i, j) = down;
            rates(j, i) = std::exp(-(cfg.energies[j] - cfg.energies[i]) /
                                   cfg.theta) *
                          down;
        }
    return rates;
}

Mat well_observables(const LvneConfig& cfg) {
    const Index n = cfg.q * cfg.q;
    Mat c = Mat::Zero(3, n);
    for (Index i = 0; i < cfg.q; ++i)
        c(static_cast<Index>(cfg.classes[i]), i) = 1.0;
    return c;
}

RealVec gibbs_populations(const LvneConfig& cfg) {
    RealVec p(cfg.q);
    const double e0 = cfg.energies[0];
    for (Index i = 0; i < cfg.q; ++i)
        p[i] = std::exp(-(cfg.energies[i] - e0) / cfg.theta);
    return p / p.sum();
}

LvneAssembly assemble_lvne(const LvneConfig& cfg) {
    cfg.validate();
    const Index q = cfg.q;
    const Index n = q * q;

    LvneAssembly out;
    out.q = q;
    out.coherence_index.setConstant(q, q, -1);
    Index next = q;
    for (Index a = 0; a < q; ++a)
        for (Index b = 0; b < q; ++b)
            if (a != b) out.coherence_index(a, b) = next++;
    auto idx = [&](Index a, Index b) {
        return a == b ? a : out.coherence_index(a, b);
    };

    Eigen::MatrixXd rates = lindblad_rates(cfg);
    RealVec gamma_out = rates.colwise().sum();  // total escape rate per state

    using Triplet = Eigen::Triplet<Complex>;
    std::vector<Triplet> ta;
    ta.reserve(q * q + n);
    for (Index j = 0; j < q; ++j) {
        for (Index i = 0; i < q; ++i)
            if (i != j && rates(i, j) != 0.0)
                ta.emplace_back(i, j, Complex(rates(i, j)));
        ta.emplace_back(j, j, Complex(-gamma_out[j]));
    }
    for (Index a = 0; a < q; ++a)
        for (Index b = 0; b < q; ++b)
            if (a != b)
                ta.emplace_back(idx(a, b), idx(a, b),
                                Complex(-0.5 * (gamma_out[a] + gamma_out[b]),
                                        -(cfg.energies[a] - cfg.energies[b])));

    // Control coupling: (N rho)_{ab} = i sum_c (mu_ac rho_cb - rho_ac mu_cb).
    std::vector<Triplet> tn;
    tn.reserve(static_cast<size_t>(2 * q) * n);
    const Complex iu(0.0, 1.0);
    for (Index a = 0; a < q; ++a)
        for (Index b = 0; b < q; ++b) {
            const Index row = idx(a, b);
            for (Index c = 0; c < q; ++c) {
                const double mac = cfg.dipole(a, c);
                if (mac != 0.0 && !(c == a && a == b))
                    tn.emplace_back(row, idx(c, b), iu * mac);
                const double mcb = cfg.dipole(c, b);
                if (mcb != 0.0 && !(c == b && a == b))
                    tn.emplace_back(row, idx(a, c), -iu * mcb);
            }
        }

    SpMat a(n, n), nk(n, n);
    a.setFromTriplets(ta.begin(), ta.end());
    nk.setFromTriplets(tn.begin(), tn.end());
    a.makeCompressed();
    nk.prune([](Index, Index, const Complex& v) { return std::abs(v) > 0.0; });
    nk.makeCompressed();

    out.sys.A = SparseLowRank(std::move(a));
    out.sys.N.emplace_back(std::move(nk));
    out.sys.C = well_observables(cfg);
    out.sys.real_field = false;
    return out;
}

} // namespace bmr
