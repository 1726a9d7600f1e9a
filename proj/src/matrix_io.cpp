#include "bmr/matrix_io.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include <nlohmann/json.hpp>

#include "bmr/errors.hpp"

namespace bmr {

namespace {

bool is_real(const SpMat& m) {
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it)
            if (it.value().imag() != 0.0) return false;
    return true;
}

} // namespace

void write_matrix_market(const std::string& path, const SpMat& m) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::IoError, "cannot open " + path + " for writing");
    const bool real = is_real(m);
    out << "%%MatrixMarket matrix coordinate "
        << (real ? "real" : "complex") << " general\n";
    out << m.rows() << " " << m.cols() << " " << m.nonZeros() << "\n";
    out.precision(17);
    for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it) {
            out << (it.row() + 1) << " " << (it.col() + 1) << " "
                << it.value().real();
            if (!real) out << " " << it.value().imag();
            out << "\n";
        }
    if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
}

SpMat read_matrix_market(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw Error(ErrorCode::IoError, path + ": missing MatrixMarket banner");
    std::istringstream banner(line);
    std::string tok, obj, fmt, field, sym;
    banner >> tok >> obj >> fmt >> field >> sym;
    if (obj != "matrix" || fmt != "coordinate")
        throw Error(ErrorCode::IoError, path + ": only coordinate matrices supported");
    if (field != "real" && field != "complex" && field != "integer")
        throw Error(ErrorCode::IoError, path + ": unsupported field " + field);
    const bool complex_field = (field == "complex");
    const bool symmetric = (sym == "symmetric");
    if (sym != "general" && sym != "symmetric")
        throw Error(ErrorCode::IoError, path + ": unsupported symmetry " + sym);

    while (std::getline(in, line))
        if (!line.empty() && line[0] != '%') break;
    std::istringstream header(line);
    Index rows = 0, cols = 0;
    long long nnz = 0;
    header >> rows >> cols >> nnz;
    if (!header || rows <= 0 || cols <= 0)
        throw Error(ErrorCode::IoError, path + ": bad size header");

    std::vector<Eigen::Triplet<Complex>> trips;
    trips.reserve(static_cast<size_t>(symmetric ? 2 * nnz : nnz));
    for (long long e = 0; e < nnz; ++e) {
        Index i = 0, j = 0;
        double re = 0.0, im = 0.0;
        in >> i >> j >> re;
        if (complex_field) in >> im;
        if (!in) throw Error(ErrorCode::IoError, path + ": truncated entry list");
        if (i < 1 || i > rows || j < 1 || j > cols)
            throw Error(ErrorCode::IoError, path + ": index out of range");
        trips.emplace_back(i - 1, j - 1, Complex(re, im));
        if (symmetric && i != j) trips.emplace_back(j - 1, i - 1, Complex(re, im));
    }
    SpMat m(rows, cols);
    m.setFromTriplets(trips.begin(), trips.end());
    return m;
}

void write_dense(const std::string& path, const Mat& m) {
    {
        std::ofstream out(path, std::ios::binary);
        if (!out) throw Error(ErrorCode::IoError, "cannot open " + path);
        out.write(reinterpret_cast<const char*>(m.data()),
                  static_cast<std::streamsize>(sizeof(Complex) * m.size()));
        if (!out) throw Error(ErrorCode::IoError, "write failed: " + path);
    }
    nlohmann::json header = {
        {"rows", m.rows()},
        {"cols", m.cols()},
        {"field", "complex"},
        {"layout", "column-major"},
        {"scalar", "float64"},
    };
    std::ofstream hdr(path + ".json");
    if (!hdr) throw Error(ErrorCode::IoError, "cannot open " + path + ".json");
    hdr << header.dump(2) << "\n";
}

Mat read_dense(const std::string& path) {
    nlohmann::json header;
    {
        std::ifstream hdr(path + ".json");
        if (!hdr) throw Error(ErrorCode::IoError, "missing header " + path + ".json");
        try {
            hdr >> header;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::IoError, path + ".json: " + e.what());
        }
    }
    const Index rows = header.at("rows").get<Index>();
    const Index cols = header.at("cols").get<Index>();
    if (rows < 0 || cols < 0 ||
        header.at("layout").get<std::string>() != "column-major" ||
        header.at("field").get<std::string>() != "complex")
        throw Error(ErrorCode::IoError, path + ".json: unsupported header");
    Mat m(rows, cols);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(Complex) * m.size()));
    if (in.gcount() != static_cast<std::streamsize>(sizeof(Complex) * m.size()))
        throw Error(ErrorCode::IoError, path + ": truncated payload");
    return m;
}

} // namespace bmr
