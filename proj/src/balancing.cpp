#include "bmr/balancing.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>

#include <Eigen/LU>

#include <nlohmann/json.hpp>

#include "bmr/linalg.hpp"
#include "bmr/matrix_io.hpp"

namespace fs = std::filesystem;

namespace bmr {

BalancedRealization compute_balancing(const BilinearSystem& sys,
                                      const GramianPair& gramians) {
    const Index n = sys.dim();
    PsdFactor fp = cholesky_psd(gramians.p);
    PsdFactor fq = cholesky_psd(gramians.q);
    if (fp.rank == 0 || fq.rank == 0)
        throw Error(ErrorCode::RankDeficientGramian,
                    "Gramian numerically zero (ranks " +
                        std::to_string(fp.rank) + ", " +
                        std::to_string(fq.rank) + ")");
    // P = Zp Zp^*, Q = Zq Zq^* with the factors cut to numerical rank.
    Mat zp = fp.s.topRows(fp.rank).adjoint();  // n x rp
    Mat zq = fq.s.topRows(fq.rank).adjoint();  // n x rq

    Svd dec = svd(Mat(zq.adjoint() * zp));
    const double s1 = dec.sigma.size() > 0 ? dec.sigma[0] : 0.0;
    if (s1 <= 0.0)
        throw Error(ErrorCode::RankDeficientGramian,
                    "Gramian product has no significant singular values");
    Index r = 0;
    while (r < dec.sigma.size() && dec.sigma[r] > 1e-13 * s1) ++r;

    BalancedRealization bal;
    bal.dropped = n - r;
    bal.sigma = dec.sigma.head(r);
    RealVec si = bal.sigma.cwiseSqrt().cwiseInverse();
    // Row map w (r x n) and column map v (n x r) of the balancing
    // transformation: w P w^* = v^* Q v = diag(sigma), w v = I.
    Mat w = si.asDiagonal() * dec.u.leftCols(r).adjoint() * zq.adjoint();
    Mat v = zp * dec.v.leftCols(r) * si.asDiagonal();
    bal.t = w.adjoint();
    bal.t_inv = v.adjoint();

    bal.a = w * sys.A.apply(v);
    bal.n.reserve(sys.N.size());
    for (const auto& nk : sys.N) bal.n.push_back(Mat(w * nk.apply(v)));
    bal.b = w * sys.B;
    bal.c = sys.C * v;
    bal.d_feed = sys.D;
    bal.control_scale = sys.control_scale();
    bal.parent_alpha = sys.discount_alpha();
    for (const auto& rec : sys.provenance)
        if (rec.kind == TransformRecord::Kind::ProjectOutNull)
            bal.parent_projected = true;
    return bal;
}

ReducedModel truncate_bt(const BalancedRealization& bal, Index d) {
    if (d < 1 || d > bal.rank())
        throw Error(ErrorCode::BadDimension, "truncation order out of range");
    ReducedModel red;
    red.method = "bt";
    red.control_scale = bal.control_scale;
    red.parent_alpha = bal.parent_alpha;
    red.parent_projected = bal.parent_projected;
    red.a = bal.a.topLeftCorner(d, d);
    for (const auto& nk : bal.n) red.n.push_back(nk.topLeftCorner(d, d));
    red.b = bal.b.topRows(d);
    red.c = bal.c.leftCols(d);
    red.d = bal.d_feed;
    return red;
}

ReducedModel reduce_sp(const BalancedRealization& bal, Index d) {
    const Index r = bal.rank();
    if (d < 1 || d > r)
        throw Error(ErrorCode::BadDimension, "truncation order out of range");
    ReducedModel red;
    red.method = "sp";
    red.control_scale = bal.control_scale;
    red.parent_alpha = bal.parent_alpha;
    red.parent_projected = bal.parent_projected;
    red.d = bal.d_feed;
    if (d == r) {  // no fast block to eliminate
        red.a = bal.a;
        red.n = bal.n;
        red.b = bal.b;
        red.c = bal.c;
        return red;
    }
    const Index f = r - d;
    Mat a22 = bal.a.bottomRightCorner(f, f);
    Eigen::PartialPivLU<Mat> lu(a22);
    const double umin = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    const double umax = lu.matrixLU().diagonal().cwiseAbs().maxCoeff();
    if (umin <= 1e-14 * std::max(umax, 1.0))
        throw Error(ErrorCode::SingularFastBlock,
                    "fast balanced block is numerically singular");
    Mat corr = lu.solve(Mat(bal.a.bottomLeftCorner(f, d)));  // A22^{-1} A21

    red.a = bal.a.topLeftCorner(d, d) - bal.a.topRightCorner(d, f) * corr;
    for (const auto& nk : bal.n)
        red.n.push_back(
            Mat(nk.topLeftCorner(d, d) - nk.topRightCorner(d, f) * corr));
    red.b = bal.b.topRows(d);
    red.c = bal.c.leftCols(d) - bal.c.rightCols(f) * corr;
    return red;
}

StabilityReport verify_stability(const BalancedRealization& bal, Index d) {
    const Index r = bal.rank();
    if (d < 1 || d > r)
        throw Error(ErrorCode::BadDimension, "truncation order out of range");
    StabilityReport rep;
    const Index f = r - d;
    rep.spectrum_slow = eig_dense(Mat(bal.a.topLeftCorner(d, d)));
    rep.max_re_slow = rep.spectrum_slow.real().maxCoeff();
    if (f > 0) {
        rep.spectrum_fast = eig_dense(Mat(bal.a.bottomRightCorner(f, f)));
        rep.max_re_fast = rep.spectrum_fast.real().maxCoeff();
        Mat a22 = bal.a.bottomRightCorner(f, f);
        Eigen::PartialPivLU<Mat> lu(a22);
        Mat schur = bal.a.topLeftCorner(d, d) -
                    bal.a.topRightCorner(d, f) *
                        lu.solve(Mat(bal.a.bottomLeftCorner(f, d)));
        rep.spectrum_schur = eig_dense(schur);
        rep.max_re_schur = rep.spectrum_schur.real().maxCoeff();
        rep.hsv_gap = bal.sigma[d] > 0.0 ? bal.sigma[d - 1] / bal.sigma[d]
                                         : std::numeric_limits<double>::infinity();
        rep.cluster_warning = (bal.sigma[d - 1] - bal.sigma[d]) <= 1e-8 * bal.sigma[0];
    } else {
        rep.spectrum_fast.resize(0);
        rep.spectrum_schur = rep.spectrum_slow;
        rep.max_re_fast = -std::numeric_limits<double>::infinity();
        rep.max_re_schur = rep.max_re_slow;
        rep.hsv_gap = std::numeric_limits<double>::infinity();
    }
    rep.passed = rep.max_re_slow < -1e-12 && rep.max_re_fast < -1e-12 &&
                 rep.max_re_schur < -1e-12;
    return rep;
}

Index suggest_order(const RealVec& sigma, double tail_energy) {
    const double total = sigma.sum();
    if (total <= 0.0) return 1;
    double tail = total;
    for (Index d = 1; d <= sigma.size(); ++d) {
        tail -= sigma[d - 1];
        if (tail / total <= tail_energy) return d;
    }
    return sigma.size();
}

void save_reduced(const ReducedModel& red, const std::string& dir_str) {
    fs::path dir(dir_str);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir_str);
    write_dense((dir / "A.bin").string(), red.a);
    for (size_t k = 0; k < red.n.size(); ++k)
        write_dense((dir / ("N" + std::to_string(k) + ".bin")).string(), red.n[k]);
    write_dense((dir / "B.bin").string(), red.b);
    write_dense((dir / "C.bin").string(), red.c);
    if (red.d.size() > 0) write_dense((dir / "D.bin").string(), Mat(red.d));
    nlohmann::json manifest = {
        {"order", red.order()},
        {"num_inputs", red.n.size()},
        {"method", red.method},
        {"has_D", red.d.size() > 0},
        {"control_scale", red.control_scale},
        {"parent_alpha", red.parent_alpha},
        {"parent_projected", red.parent_projected},
    };
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error(ErrorCode::IoError, "cannot write manifest");
    out << manifest.dump(2) << "\n";
}

ReducedModel load_reduced(const std::string& dir_str) {
    fs::path dir(dir_str);
    nlohmann::json manifest;
    {
        std::ifstream in(dir / "manifest.json");
        if (!in) throw Error(ErrorCode::IoError, "missing manifest in " + dir_str);
        try {
            in >> manifest;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::IoError, std::string("bad manifest: ") + e.what());
        }
    }
    ReducedModel red;
    red.method = manifest.at("method").get<std::string>();
    red.control_scale = manifest.value("control_scale", 1.0);
    red.parent_alpha = manifest.value("parent_alpha", 0.0);
    red.parent_projected = manifest.value("parent_projected", false);
    red.a = read_dense((dir / "A.bin").string());
    const size_t m = manifest.at("num_inputs").get<size_t>();
    for (size_t k = 0; k < m; ++k)
        red.n.push_back(read_dense((dir / ("N" + std::to_string(k) + ".bin")).string()));
    red.b = read_dense((dir / "B.bin").string());
    red.c = read_dense((dir / "C.bin").string());
    if (manifest.value("has_D", false))
        red.d = Vec(read_dense((dir / "D.bin").string()));
    return red;
}

} // namespace bmr
