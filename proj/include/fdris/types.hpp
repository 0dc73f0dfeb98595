#pragma once

#include <complex>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace fdris {

using Complex = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

/// Single RNG type for every stochastic draw in the library. Seeded explicitly,
/// never default-constructed from ambient state.
using Rng = std::mt19937_64;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;
inline constexpr double kLog2E = 1.44269504088896340736;

/// Raised when a quantity lies outside the domain of an operation
/// (non-positive distance, zero-length array, singular system, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when matrix operands are not conformable.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised for invalid scenario or solver configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) throw DimensionError(what);
}

/// (A + A^H) / 2
inline CMat hermitian_part(const CMat& a) { return 0.5 * (a + a.adjoint()); }

/// Circularly-symmetric CN(0, 1) sample.
inline Complex complex_gaussian(Rng& rng) {
  std::normal_distribution<double> n(0.0, std::sqrt(0.5));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline CMat complex_gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  CMat out(rows, cols);
  // column-major fill keeps the draw order fixed
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) out(r, c) = complex_gaussian(rng);
  return out;
}

inline double uniform(Rng& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  return u(rng);
}

/// log2 det of a Hermitian positive-definite matrix via Cholesky.
inline double log2_det_hpd(const CMat& a) {
  Eigen::LLT<CMat> llt(hermitian_part(a));
  if (llt.info() != Eigen::Success) throw DomainError("matrix is not positive definite");
  const CMat& l = llt.matrixLLT();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log2(l(i, i).real());
  return 2.0 * acc;
}

}  // namespace detail
}  // namespace fdris
