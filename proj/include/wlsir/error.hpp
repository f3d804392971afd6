// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace wlsir {

enum class ErrorCode {
  invalid_argument,
  invalid_shape,
  rank_deficient,
  singular,
  no_convergence,
  zero_diagonal,
  zero_row,
  parse_error,
  unsupported_field,
  nonpositive_weight,
  cholesky_failed,
  not_orthonormal,
  factorization_failed,
  io_error,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wlsir
