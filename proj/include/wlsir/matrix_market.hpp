// SPDX-License-Identifier: Apache-2.0
//
// Matrix Market (.mtx) reader/writer for real matrices, densified.

#pragma once

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "wlsir/densela.hpp"
#include "wlsir/error.hpp"

namespace wlsir {

struct MatrixMarketFile {
  Matrix matrix;
  bool coordinate = true;
  std::string symmetry = "general";
  std::size_t stored_entries = 0;  ///< entries listed in the file

  /// Nonzeros of the densified matrix.
  std::size_t nnz() const {
    return static_cast<std::size_t>((matrix.array() != 0.0).count());
  }
};

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] inline void mm_fail(std::size_t line, const std::string& msg) {
  throw Error(ErrorCode::parse_error,
              "matrix market line " + std::to_string(line) + ": " + msg);
}

}  // namespace detail

/// Coordinate or array format; field real or integer; symmetry general,
/// symmetric or skew-symmetric.  Duplicate coordinate entries are summed.
inline MatrixMarketFile read_matrix_market(std::istream& in) {
  std::string line;
  std::size_t lineno = 0;
  if (!std::getline(in, line)) detail::mm_fail(1, "empty input");
  ++lineno;
  std::istringstream banner(line);
  std::string tag, object, format, field, symmetry;
  banner >> tag >> object >> format >> field >> symmetry;
  if (tag != "%%MatrixMarket") detail::mm_fail(lineno, "missing %%MatrixMarket banner");
  object = detail::lower(object);
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (object != "matrix") detail::mm_fail(lineno, "object must be 'matrix'");
  if (format != "coordinate" && format != "array")
    detail::mm_fail(lineno, "format must be coordinate or array");
  if (field == "complex" || field == "pattern")
    throw Error(ErrorCode::unsupported_field,
                "matrix market field '" + field + "' is not supported");
  if (field != "real" && field != "integer" && field != "double")
    detail::mm_fail(lineno, "unknown field '" + field + "'");
  if (symmetry != "general" && symmetry != "symmetric" &&
      symmetry != "skew-symmetric")
    throw Error(ErrorCode::unsupported_field,
                "matrix market symmetry '" + symmetry + "' is not supported");

  const auto next_data_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      const auto pos = line.find_first_not_of(" \t\r");
      if (pos == std::string::npos || line[pos] == '%') continue;
      return true;
    }
    return false;
  };

  MatrixMarketFile out;
  out.coordinate = format == "coordinate";
  out.symmetry = symmetry;
  if (!next_data_line()) detail::mm_fail(lineno, "missing size line");
  std::istringstream sz(line);
  long long rows = 0, cols = 0, entries = 0;
  if (out.coordinate) {
    if (!(sz >> rows >> cols >> entries)) detail::mm_fail(lineno, "bad size line");
  } else {
    if (!(sz >> rows >> cols)) detail::mm_fail(lineno, "bad size line");
    entries = symmetry == "general" ? rows * cols
              : symmetry == "symmetric" ? rows * (rows + 1) / 2
                                        : rows * (rows - 1) / 2;
  }
  if (rows < 1 || cols < 1 || entries < 0) detail::mm_fail(lineno, "bad dimensions");
  if (symmetry != "general" && rows != cols)
    detail::mm_fail(lineno, "symmetric matrix must be square");

  Matrix a = Matrix::Zero(rows, cols);
  const bool skew = symmetry == "skew-symmetric";
  const auto put = [&](long long i, long long j, double v) {
    a(i, j) += v;
    if (symmetry != "general" && i != j) a(j, i) += skew ? -v : v;
  };

  if (out.coordinate) {
    for (long long k = 0; k < entries; ++k) {
      if (!next_data_line()) detail::mm_fail(lineno, "unexpected end of file");
      std::istringstream es(line);
      long long i = 0, j = 0;
      double v = 0.0;
      if (!(es >> i >> j >> v)) detail::mm_fail(lineno, "bad entry");
      if (i < 1 || i > rows || j < 1 || j > cols)
        detail::mm_fail(lineno, "index out of range");
      put(i - 1, j - 1, v);
    }
  } else {
    // Column-major; symmetric storage lists the lower triangle only.
    const long long first_row = skew ? 1 : 0;
    long long i = first_row, j = 0;
    for (long long k = 0; k < entries; ++k) {
      if (!next_data_line()) detail::mm_fail(lineno, "unexpected end of file");
      std::istringstream es(line);
      double v = 0.0;
      if (!(es >> v)) detail::mm_fail(lineno, "bad entry");
      put(i, j, v);
      if (++i == rows) {
        ++j;
        i = symmetry == "general" ? 0 : j + first_row;
      }
    }
  }
  out.stored_entries = static_cast<std::size_t>(entries);
  out.matrix = std::move(a);
  return out;
}

inline MatrixMarketFile read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
  return read_matrix_market(in);
}

inline Matrix read_matrix_market(const std::string& path) {
  return read_matrix_market_file(path).matrix;
}

/// Writes the nonzeros in coordinate real general format with 17 significant
/// digits, which round-trips binary64 exactly.
inline void write_matrix_market(std::ostream& out, const Matrix& a) {
  std::size_t nnz = 0;
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != 0.0) ++nnz;
  out << "%%MatrixMarket matrix coordinate real general\n";
  out << a.rows() << ' ' << a.cols() << ' ' << nnz << '\n';
  char buf[64];
  for (Eigen::Index j = 0; j < a.cols(); ++j)
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      if (a(i, j) != 0.0) {
        std::snprintf(buf, sizeof buf, "%.17g", a(i, j));
        out << (i + 1) << ' ' << (j + 1) << ' ' << buf << '\n';
      }
}

}  // namespace wlsir
