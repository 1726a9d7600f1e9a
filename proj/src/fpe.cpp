#include "bmr/fpe.hpp"

#include <cmath>
#include <fstream>
#include <vector>

#include <nlohmann/json.hpp>

namespace bmr {

namespace {

constexpr double kPi = 3.14159265358979323846;

Index axis_nodes(double lo, double hi, double h, const char* field) {
    if (h <= 0.0)
        throw Error(ErrorCode::ConfigInvalid, std::string(field) + ": step must be > 0");
    const double steps = (hi - lo) / h;
    const double rounded = std::round(steps);
    if (std::abs(steps - rounded) > 1e-9 * std::max(std::abs(steps), 1.0))
        throw Error(ErrorCode::ConfigInvalid,
                    std::string(field) + ": step does not divide the interval");
    if (rounded < 4)
        throw Error(ErrorCode::ConfigInvalid,
                    std::string(field) + ": fewer than 3 interior nodes");
    return static_cast<Index>(rounded) + 1;
}

} // namespace

void FpeConfig::validate() const {
    if (!(xmax > xmin))
        throw Error(ErrorCode::ConfigInvalid, "xmax: must exceed xmin");
    if (!(ymax > ymin))
        throw Error(ErrorCode::ConfigInvalid, "ymax: must exceed ymin");
    if (!(beta > 0.0))
        throw Error(ErrorCode::ConfigInvalid, "beta: must be > 0");
    axis_nodes(xmin, xmax, h1, "h1");
    axis_nodes(ymin, ymax, h2, "h2");
}

Index FpeConfig::nodes1() const { return axis_nodes(xmin, xmax, h1, "h1"); }
Index FpeConfig::nodes2() const { return axis_nodes(ymin, ymax, h2, "h2"); }

FpeConfig FpeConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ConfigInvalid, std::string("bad JSON: ") + e.what());
    }
    FpeConfig cfg;
    auto get = [&](const char* key, double& slot) {
        if (!j.contains(key)) return;
        if (!j[key].is_number())
            throw Error(ErrorCode::ConfigInvalid, std::string(key) + ": must be a number");
        slot = j[key].get<double>();
    };
    get("xmin", cfg.xmin);
    get("xmax", cfg.xmax);
    get("ymin", cfg.ymin);
    get("ymax", cfg.ymax);
    get("h1", cfg.h1);
    get("h2", cfg.h2);
    get("beta", cfg.beta);
    cfg.validate();
    return cfg;
}

double potential_eval(double x1, double x2) {
    const double a = x1 - 0.1;
    const double b = x2 + 0.4;
    return 0.01 * (a * a * a * a - 20.0 * x1 * x1 + b * b * b * b -
                   20.0 * x2 * x2 + 10.0 * std::sin(5.0 * x1) * std::cos(5.0 * x2) +
                   x1 * x2 + 290.4);
}

double potential_dx1(double x1, double x2) {
    const double a = x1 - 0.1;
    return 0.01 * (4.0 * a * a * a - 40.0 * x1 +
                   50.0 * std::cos(5.0 * x1) * std::cos(5.0 * x2) + x2);
}

double potential_dx2(double x1, double x2) {
    const double b = x2 + 0.4;
    return 0.01 * (4.0 * b * b * b - 40.0 * x2 -
                   50.0 * std::sin(5.0 * x1) * std::sin(5.0 * x2) + x1);
}

FpeAssembly assemble_fpe(const FpeConfig& cfg) {
    cfg.validate();
    FpeAssembly out;
    out.n1 = cfg.nodes1();
    out.n2 = cfg.nodes2();
    const Index n1 = out.n1, n2 = out.n2, n = n1 * n2;
    out.x1.resize(n1);
    out.x2.resize(n2);
    for (Index i = 0; i < n1; ++i) out.x1[i] = cfg.xmin + cfg.h1 * i;
    for (Index j = 0; j < n2; ++j) out.x2[j] = cfg.ymin + cfg.h2 * j;
    // The sin(5x)cos(5y) term has period 2*pi/5; below 4 nodes per period
    // the dominant eigenvalues of A are garbage.
    const double period = 2.0 * kPi / 5.0;
    out.resolves_potential = period / std::max(cfg.h1, cfg.h2) >= 4.0;

    const double binv = 1.0 / cfg.beta;
    auto idx = [n1](Index i, Index j) { return i + j * n1; };

    using Triplet = Eigen::Triplet<Complex>;
    std::vector<Triplet> ta, tn1, tn2;
    ta.reserve(8 * n);
    tn1.reserve(4 * n);
    tn2.reserve(4 * n);

    // Face flux between neighboring nodes L,R at spacing h with drift values
    // gL, gR:  J = binv (wR - wL)/h + (gL wL + gR wR)/2, and the two nodes
    // gain/lose J/h. Boundary faces carry no flux, so column sums vanish
    // exactly and total mass is conserved.
    auto face = [](std::vector<Triplet>& t, Index l, Index r, double cw_l,
                   double cw_r, double h) {
        t.emplace_back(l, l, Complex(cw_l / h));
        t.emplace_back(l, r, Complex(cw_r / h));
        t.emplace_back(r, l, Complex(-cw_l / h));
        t.emplace_back(r, r, Complex(-cw_r / h));
    };

    for (Index j = 0; j < n2; ++j)
        for (Index i = 0; i + 1 < n1; ++i) {
            const double gl = potential_dx1(out.x1[i], out.x2[j]);
            const double gr = potential_dx1(out.x1[i + 1], out.x2[j]);
            face(ta, idx(i, j), idx(i + 1, j), -binv / cfg.h1 + gl / 2.0,
                 binv / cfg.h1 + gr / 2.0, cfg.h1);
            // control channel 1: unit tilt along x1 replaces the drift by -1
            face(tn1, idx(i, j), idx(i + 1, j), -0.5, -0.5, cfg.h1);
        }
    for (Index i = 0; i < n1; ++i)
        for (Index j = 0; j + 1 < n2; ++j) {
            const double gl = potential_dx2(out.x1[i], out.x2[j]);
            const double gr = potential_dx2(out.x1[i], out.x2[j + 1]);
            face(ta, idx(i, j), idx(i, j + 1), -binv / cfg.h2 + gl / 2.0,
                 binv / cfg.h2 + gr / 2.0, cfg.h2);
            face(tn2, idx(i, j), idx(i, j + 1), -0.5, -0.5, cfg.h2);
        }

    SpMat a(n, n), m1(n, n), m2(n, n);
    a.setFromTriplets(ta.begin(), ta.end());
    m1.setFromTriplets(tn1.begin(), tn1.end());
    m2.setFromTriplets(tn2.begin(), tn2.end());
    a.makeCompressed();
    m1.makeCompressed();
    m2.makeCompressed();

    out.sys.A = SparseLowRank(std::move(a));
    out.sys.N.emplace_back(std::move(m1));
    out.sys.N.emplace_back(std::move(m2));
    out.sys.C = quadrant_observables(cfg);
    out.sys.real_field = true;
    return out;
}

Mat quadrant_observables(const FpeConfig& cfg) {
    const Index n1 = cfg.nodes1(), n2 = cfg.nodes2();
    Mat c = Mat::Zero(4, n1 * n2);
    const double area = cfg.h1 * cfg.h2;
    for (Index j = 0; j < n2; ++j)
        for (Index i = 0; i < n1; ++i) {
            const bool east = cfg.xmin + cfg.h1 * i >= 0.0;
            const bool north = cfg.ymin + cfg.h2 * j >= 0.0;
            const Index row = north ? (east ? 0 : 1) : (east ? 3 : 2);
            c(row, i + j * n1) = area;
        }
    return c;
}

RealVec quadrature_weights(const FpeConfig& cfg) {
    const Index n1 = cfg.nodes1(), n2 = cfg.nodes2();
    RealVec w(n1 * n2);
    for (Index j = 0; j < n2; ++j) {
        const double wy = (j == 0 || j == n2 - 1) ? 0.5 : 1.0;
        for (Index i = 0; i < n1; ++i) {
            const double wx = (i == 0 || i == n1 - 1) ? 0.5 : 1.0;
            w[i + j * n1] = cfg.h1 * cfg.h2 * wx * wy;
        }
    }
    return w;
}

RealVec analytic_stationary_density(const FpeConfig& cfg, double u1, double u2) {
    const Index n1 = cfg.nodes1(), n2 = cfg.nodes2();
    RealVec rho(n1 * n2);
    double vmin = std::numeric_limits<double>::infinity();
    for (Index j = 0; j < n2; ++j)
        for (Index i = 0; i < n1; ++i) {
            const double x = cfg.xmin + cfg.h1 * i;
            const double y = cfg.ymin + cfg.h2 * j;
            const double v = potential_eval(x, y) - u1 * x - u2 * y;
            rho[i + j * n1] = v;
            vmin = std::min(vmin, v);
        }
    // subtract the minimum before exponentiating to avoid underflow
    for (Index k = 0; k < rho.size(); ++k)
        rho[k] = std::exp(-cfg.beta * (rho[k] - vmin));
    const double z = quadrature_weights(cfg).dot(rho);
    rho /= z;
    return rho;
}

} // namespace bmr
