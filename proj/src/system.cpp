#include "bmr/system.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include <nlohmann/json.hpp>

#include "bmr/linalg.hpp"
#include "bmr/matrix_io.hpp"

namespace fs = std::filesystem;

namespace bmr {

namespace {

double inf_norm_columns(const SparseLowRank& m) {
    // max_j |sum_i m_ij| -- deviation from exact column-sum conservation.
    Vec ones = Vec::Ones(m.rows());
    Vec colsums = m.apply_adjoint(ones).conjugate();
    return colsums.cwiseAbs().maxCoeff();
}

double sparse_inf_scale(const SparseLowRank& m) {
    double s = 0.0;
    for (int k = 0; k < m.core.outerSize(); ++k)
        for (SpMat::InnerIterator it(m.core, k); it; ++it)
            s = std::max(s, std::abs(it.value()));
    if (m.has_low_rank())
        s = std::max(s, m.u.cwiseAbs().maxCoeff() * m.v.cwiseAbs().maxCoeff());
    return s;
}

} // namespace

double BilinearSystem::control_scale() const {
    double eta = 1.0;
    for (const auto& rec : provenance)
        if (rec.kind == TransformRecord::Kind::ScaleControls) eta *= rec.eta;
    return eta;
}

double BilinearSystem::discount_alpha() const {
    double alpha = 0.0;
    for (const auto& rec : provenance)
        if (rec.kind == TransformRecord::Kind::Discount) alpha += rec.alpha;
    return alpha;
}

void BilinearSystem::validate() const {
    const Index n = A.rows();
    if (A.cols() != n) throw Error(ErrorCode::BadDimension, "A not square");
    for (const auto& nk : N)
        if (nk.rows() != n || nk.cols() != n)
            throw Error(ErrorCode::BadDimension, "N_k dimension mismatch");
    if (B.size() > 0 && (B.rows() != n || B.cols() != static_cast<Index>(N.size())))
        throw Error(ErrorCode::BadDimension, "B dimension mismatch");
    if (C.size() > 0 && C.cols() != n)
        throw Error(ErrorCode::BadDimension, "C dimension mismatch");
    if (D.size() > 0 && C.size() > 0 && D.size() != C.rows())
        throw Error(ErrorCode::BadDimension, "D dimension mismatch");
}

StationaryState stationary_state(const BilinearSystem& sys,
                                 bool probability_normalization,
                                 double gap_factor) {
    const Index n = sys.dim();
    const double scale = std::max(sys.A.norm_estimate(), 1e-300);
    SparseEigResult eig;
    if (n <= 2) {
        auto [vals, vecs] = eig_dense_vectors(sys.A.dense());
        std::vector<Index> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](Index a, Index b) {
            return std::abs(vals[a]) < std::abs(vals[b]);
        });
        eig.values.resize(n);
        eig.vectors.resize(n, n);
        for (Index i = 0; i < n; ++i) {
            eig.values[i] = vals[order[i]];
            eig.vectors.col(i) = vecs.col(order[i]);
        }
    } else {
        // A is exactly singular at the target; a tiny negative shift keeps
        // the factorization regular while staying inside the null cluster.
        eig = eig_sparse_smallest(sys.A, 2, Complex(-1e-8 * scale, 0.0), 1e-9);
    }
    const Complex lam0 = eig.values[0];
    if (std::abs(lam0) > 1e-7 * scale)
        throw Error(ErrorCode::NoNullVector,
                    "smallest eigenvalue " + std::to_string(std::abs(lam0)) +
                        " is not numerically zero");
    if (eig.values.size() > 1) {
        const double lam1 = std::abs(eig.values[1]);
        if (lam1 < gap_factor * std::max(std::abs(lam0), 1e-13 * scale))
            throw Error(ErrorCode::NonSimpleNull,
                        "zero eigenvalue is not well separated");
    }
    StationaryState st;
    st.x_e = eig.vectors.col(0);
    if (probability_normalization) {
        Complex total = st.x_e.sum();
        if (std::abs(total) < 1e-8 * st.x_e.norm() * std::sqrt(double(n)))
            throw Error(ErrorCode::NoNullVector,
                        "null vector has (near) zero total mass");
        st.x_e /= total;
        st.normalization = "probability";
    } else {
        st.x_e /= st.x_e.norm();
        // fix the phase so results are reproducible
        Index imax = 0;
        st.x_e.cwiseAbs().maxCoeff(&imax);
        Complex ph = st.x_e[imax] / std::abs(st.x_e[imax]);
        st.x_e /= ph;
        st.normalization = "unit";
    }
    st.residual = sys.A.apply(st.x_e).norm();
    return st;
}

BilinearSystem shift_to_standard_form(const BilinearSystem& sys, const Vec& x_e) {
    if (sys.B.size() > 0 && sys.B.norm() > 0.0)
        throw Error(ErrorCode::NotPurelyBilinear,
                    "system already has a linear input term");
    const double res = sys.A.apply(x_e).norm();
    const double scale = sys.A.norm_estimate() * x_e.norm();
    if (res > 1e-7 * std::max(scale, 1e-300))
        throw Error(ErrorCode::NoNullVector,
                    "x_e is not a stationary state (residual " +
                        std::to_string(res) + ")");
    BilinearSystem out = sys;
    const Index m = sys.num_inputs();
    out.B.resize(sys.dim(), m);
    for (Index k = 0; k < m; ++k) out.B.col(k) = sys.N[k].apply(x_e);
    if (sys.C.size() > 0) {
        Vec d = sys.C * x_e;
        if (out.D.size() == 0) out.D = d;
        else out.D += d;
    }
    TransformRecord rec;
    rec.kind = TransformRecord::Kind::ShiftToStandardForm;
    rec.x_e = x_e;
    out.provenance.push_back(rec);
    return out;
}

namespace {

/// Remove the last state of one sparse+low-rank operator using the
/// conservation structure: M' = M_11 - m_col * 1^T with m_col the last
/// column of M restricted to the leading block.
SparseLowRank project_operator(const SparseLowRank& m) {
    const Index n = m.rows();
    SpMat core = m.core.topLeftCorner(n - 1, n - 1);
    core.makeCompressed();
    Vec last_col = Vec::Zero(n - 1);
    for (SpMat::InnerIterator it(m.core, n - 1); it; ++it)
        if (it.row() < n - 1) last_col[it.row()] = it.value();
    Index r_old = m.has_low_rank() ? m.u.cols() : 0;
    Mat u(n - 1, r_old + 1), v(n - 1, r_old + 1);
    if (r_old > 0) {
        u.leftCols(r_old) = m.u.topRows(n - 1);
        v.leftCols(r_old) = m.v.topRows(n - 1);
        last_col += m.u.topRows(n - 1) * m.v.row(n - 1).adjoint();
    }
    u.col(r_old) = -last_col;
    v.col(r_old) = Vec::Ones(n - 1);
    return SparseLowRank(std::move(core), std::move(u), std::move(v));
}

} // namespace

BilinearSystem project_out_null(const BilinearSystem& sys, const Vec& x_e) {
    const Index n = sys.dim();
    if (n < 2) throw Error(ErrorCode::BadDimension, "cannot project a 1-state system");
    double worst = inf_norm_columns(sys.A);
    for (const auto& nk : sys.N) worst = std::max(worst, inf_norm_columns(nk));
    double scale = sparse_inf_scale(sys.A);
    if (worst > 1e-10 * std::max(scale, 1e-300))
        throw Error(ErrorCode::RowSumViolation,
                    "conservation sums violated by " + std::to_string(worst));
    const double res = sys.A.apply(x_e).norm();
    if (res > 1e-7 * std::max(sys.A.norm_estimate() * x_e.norm(), 1e-300))
        throw Error(ErrorCode::NoNullVector, "x_e is not stationary");

    BilinearSystem out;
    out.real_field = sys.real_field;
    out.A = project_operator(sys.A);
    out.N.reserve(sys.N.size());
    for (const auto& nk : sys.N) out.N.push_back(project_operator(nk));
    if (sys.B.size() > 0) out.B = sys.B.topRows(n - 1);
    if (sys.C.size() > 0)
        out.C = sys.C.leftCols(n - 1) -
                sys.C.col(n - 1) * Eigen::RowVectorXcd::Ones(n - 1);
    out.D = sys.D;
    out.provenance = sys.provenance;
    TransformRecord rec;
    rec.kind = TransformRecord::Kind::ProjectOutNull;
    rec.x_e = x_e;
    out.provenance.push_back(rec);
    return out;
}

BilinearSystem discount_shift(const BilinearSystem& sys, double alpha) {
    if (alpha < 0.0)
        throw Error(ErrorCode::ConfigInvalid, "discount alpha must be >= 0");
    BilinearSystem out = sys;
    const Index n = sys.dim();
    SpMat id(n, n);
    id.setIdentity();
    out.A.core = (sys.A.core - Complex(alpha) * id).pruned();
    out.A.core.makeCompressed();
    if (alpha > 0.0) {
        bool hurwitz = true;
        if (n <= 600) {
            hurwitz = SchurForm::compute(out.A.dense()).spectral_abscissa() < 0.0;
        } else {
            // Only eigenvalues near zero can spoil stability for the
            // generators handled here; probe the cluster around the origin.
            SparseEigResult e =
                eig_sparse_smallest(out.A, 4, Complex(alpha / 2, 0.0), 1e-8);
            for (Index i = 0; i < e.values.size(); ++i)
                if (e.values[i].real() >= 0.0) hurwitz = false;
        }
        if (!hurwitz)
            throw Error(ErrorCode::NotStabilizing,
                        "A - alpha I still has an eigenvalue with Re >= 0");
    }
    TransformRecord rec;
    rec.kind = TransformRecord::Kind::Discount;
    rec.alpha = alpha;
    out.provenance.push_back(rec);
    return out;
}

BilinearSystem scale_controls(const BilinearSystem& sys, double eta) {
    if (eta < 1.0)
        throw Error(ErrorCode::ConfigInvalid, "control scaling requires eta >= 1");
    BilinearSystem out = sys;
    const Complex inv(1.0 / eta);
    for (auto& nk : out.N) {
        nk.core *= inv;
        if (nk.has_low_rank()) nk.u *= inv;
    }
    if (out.B.size() > 0) out.B *= inv;
    TransformRecord rec;
    rec.kind = TransformRecord::Kind::ScaleControls;
    rec.eta = eta;
    out.provenance.push_back(rec);
    return out;
}

StabilityCertificate check_assumption1(const BilinearSystem& sys) {
    const Index n = sys.dim();
    if (n > 3000)
        throw Error(ErrorCode::TooLarge, "certificate limited to n <= 3000");
    StabilityCertificate cert;
    Mat a = sys.dense_a();
    SchurForm schur = SchurForm::compute(a);
    cert.spectral_abscissa = schur.spectral_abscissa();

    double sum_norm = 0.0, sum_norm_sq = 0.0;
    for (const auto& nk : sys.N) {
        double nn = nk.norm_estimate();
        sum_norm += nn;
        sum_norm_sq += nn * nn;
    }

    cert.mu_spectral = -cert.spectral_abscissa;
    cert.lambda_spectral = 1.0;
    if (cert.mu_spectral > 0.0) {
        cert.contraction_spectral = sum_norm_sq / (2.0 * cert.mu_spectral);

        // Certified envelope from A^*L + LA + I = 0:
        //   ||e^{At}||^2 <= cond(L) e^{-t/lmax(L)}.
        Mat l = solve_lyapunov_schur_adjoint(schur, Mat::Identity(n, n));
        RealVec evs = eig_hermitian(l);
        const double lmin = evs.minCoeff();
        const double lmax = evs.maxCoeff();
        if (lmin > 0.0) {
            cert.lambda_certified = std::sqrt(lmax / lmin);
            cert.mu_certified = 1.0 / (2.0 * lmax);
            cert.contraction_certified =
                cert.lambda_certified * cert.lambda_certified /
                (2.0 * cert.mu_certified) * sum_norm_sq;
        }
        if (sum_norm > 0.0) {
            const double ratio = cert.mu_certified > 0.0
                                     ? cert.mu_certified / cert.lambda_certified
                                     : cert.mu_spectral;
            cert.control_bound_ratio = ratio / sum_norm;
            cert.control_bound_product = ratio * sum_norm;
        }

        // Empirical contraction of the Gramian fixed-point map
        //   P -> Lyap^{-1}(sum_k N_k P N_k^*)
        // via power iteration on Hermitian matrices.
        if (!sys.N.empty()) {
            Mat p = Mat::Random(n, n);
            p = (p + p.adjoint()).eval();
            p /= p.norm();
            double rho = 0.0;
            for (int it = 0; it < 12; ++it) {
                Mat w = Mat::Zero(n, n);
                for (const auto& nk : sys.N) {
                    // N_k P N_k^* without forming N_k densely (p Hermitian)
                    Mat np = nk.apply(p).adjoint();
                    w += nk.apply(np).adjoint();
                }
                Mat next = solve_lyapunov_schur(schur, w);
                const double nn = next.norm();
                if (nn == 0.0) { rho = 0.0; break; }
                const double prev = rho;
                rho = nn;
                p = next / nn;
                if (it > 3 && std::abs(rho - prev) < 0.02 * rho) break;
            }
            cert.fixed_point_contraction = rho;
        }
    }
    double best = std::numeric_limits<double>::infinity();
    if (cert.contraction_certified > 0.0) best = std::min(best, cert.contraction_certified);
    best = std::min(best, cert.contraction_spectral);
    if (!sys.N.empty() && cert.mu_spectral > 0.0)
        best = std::min(best, cert.fixed_point_contraction);
    if (sys.N.empty()) best = 0.0;
    cert.passed = cert.spectral_abscissa < 0.0 && best < 1.0;
    return cert;
}

namespace {

const char* kind_name(TransformRecord::Kind k) {
    switch (k) {
        case TransformRecord::Kind::ShiftToStandardForm: return "shift_to_standard_form";
        case TransformRecord::Kind::ProjectOutNull: return "project_out_null";
        case TransformRecord::Kind::Discount: return "discount";
        case TransformRecord::Kind::ScaleControls: return "scale_controls";
    }
    return "?";
}

TransformRecord::Kind kind_from_name(const std::string& s) {
    if (s == "shift_to_standard_form") return TransformRecord::Kind::ShiftToStandardForm;
    if (s == "project_out_null") return TransformRecord::Kind::ProjectOutNull;
    if (s == "discount") return TransformRecord::Kind::Discount;
    if (s == "scale_controls") return TransformRecord::Kind::ScaleControls;
    throw Error(ErrorCode::IoError, "unknown transform kind: " + s);
}

void save_op(const SparseLowRank& m, const fs::path& dir, const std::string& stem) {
    write_matrix_market((dir / (stem + "_core.mtx")).string(), m.core);
    if (m.has_low_rank()) {
        write_dense((dir / (stem + "_u.bin")).string(), m.u);
        write_dense((dir / (stem + "_v.bin")).string(), m.v);
    }
}

SparseLowRank load_op(const fs::path& dir, const std::string& stem) {
    SparseLowRank m(read_matrix_market((dir / (stem + "_core.mtx")).string()));
    if (fs::exists(dir / (stem + "_u.bin"))) {
        m.u = read_dense((dir / (stem + "_u.bin")).string());
        m.v = read_dense((dir / (stem + "_v.bin")).string());
    }
    return m;
}

} // namespace

void save_system(const BilinearSystem& sys, const std::string& dir_str) {
    fs::path dir(dir_str);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir_str);

    save_op(sys.A, dir, "A");
    for (size_t k = 0; k < sys.N.size(); ++k)
        save_op(sys.N[k], dir, "N" + std::to_string(k));
    if (sys.B.size() > 0) write_dense((dir / "B.bin").string(), sys.B);
    if (sys.C.size() > 0) write_dense((dir / "C.bin").string(), sys.C);
    if (sys.D.size() > 0) write_dense((dir / "D.bin").string(), Mat(sys.D));

    nlohmann::json prov = nlohmann::json::array();
    int xe_count = 0;
    for (const auto& rec : sys.provenance) {
        nlohmann::json j;
        j["kind"] = kind_name(rec.kind);
        j["alpha"] = rec.alpha;
        j["eta"] = rec.eta;
        if (rec.x_e.size() > 0) {
            std::string name = "xe" + std::to_string(xe_count++) + ".bin";
            write_dense((dir / name).string(), Mat(rec.x_e));
            j["x_e"] = name;
        }
        prov.push_back(j);
    }
    nlohmann::json manifest = {
        {"dim", sys.dim()},
        {"num_inputs", sys.num_inputs()},
        {"num_outputs", sys.num_outputs()},
        {"real_field", sys.real_field},
        {"has_B", sys.B.size() > 0},
        {"has_C", sys.C.size() > 0},
        {"has_D", sys.D.size() > 0},
        {"provenance", prov},
    };
    std::ofstream out(dir / "manifest.json");
    if (!out) throw Error(ErrorCode::IoError, "cannot write manifest");
    out << manifest.dump(2) << "\n";
}

BilinearSystem load_system(const std::string& dir_str) {
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
    BilinearSystem sys;
    sys.real_field = manifest.at("real_field").get<bool>();
    sys.A = load_op(dir, "A");
    const Index m = manifest.at("num_inputs").get<Index>();
    for (Index k = 0; k < m; ++k)
        sys.N.push_back(load_op(dir, "N" + std::to_string(k)));
    if (manifest.value("has_B", false)) sys.B = read_dense((dir / "B.bin").string());
    if (manifest.value("has_C", false)) sys.C = read_dense((dir / "C.bin").string());
    if (manifest.value("has_D", false)) sys.D = Vec(read_dense((dir / "D.bin").string()));
    for (const auto& j : manifest.at("provenance")) {
        TransformRecord rec;
        rec.kind = kind_from_name(j.at("kind").get<std::string>());
        rec.alpha = j.value("alpha", 0.0);
        rec.eta = j.value("eta", 1.0);
        if (j.contains("x_e"))
            rec.x_e = Vec(read_dense((dir / j["x_e"].get<std::string>()).string()));
        sys.provenance.push_back(rec);
    }
    sys.validate();
    return sys;
}

} // namespace bmr
