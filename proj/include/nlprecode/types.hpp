#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>

namespace nlprecode {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class Errc {
  invalid_dimensions,
  angle_out_of_range,
  io_error,
  bad_magic,
  dimension_mismatch,
  unknown_ibo,
  ill_conditioned_basis,
  zero_matrix,
  zero_channel,
  singular_channel,
  zero_gain_saturated_antenna,
  no_bracket,
  shape_mismatch,
  version_mismatch,
  negative_snidr,
  insufficient_samples,
  divergence,
  config_error,
};

const char* errc_name(Errc c);

// All module errors are thrown as Error so callers can branch on code().
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}
  Errc code() const { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, Errc code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace nlprecode
