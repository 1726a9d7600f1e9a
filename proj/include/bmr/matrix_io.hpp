#ifndef BMR_MATRIX_IO_HPP
#define BMR_MATRIX_IO_HPP

#include <string>

#include "bmr/types.hpp"

namespace bmr {

/// Matrix Market coordinate format, real or complex general.
void write_matrix_market(const std::string& path, const SpMat& m);
SpMat read_matrix_market(const std::string& path);

/// Dense dump: raw column-major binary (interleaved re/im doubles) with a
/// JSON header sidecar <path>.json describing rows/cols/field/layout.
void write_dense(const std::string& path, const Mat& m);
Mat read_dense(const std::string& path);

} // namespace bmr

#endif
