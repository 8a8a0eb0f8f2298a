#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oddm {

using cplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;
using IMat = Eigen::MatrixXi;

// Bits are stored unpacked, one 0/1 value per element, MSB first within a field.
using Bits = std::vector<std::uint8_t>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kSpeedOfLight = 3.0e8;  // m/s

// Thrown when a constellation request cannot be met (e.g. the mode/offset
// geometry collapses points together).
class ConstellationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Thrown for malformed recipes / CLI configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline bool is_pow2(int v) { return v > 0 && (v & (v - 1)) == 0; }

inline int ilog2(int v) {
  if (!is_pow2(v)) throw std::invalid_argument("ilog2: not a power of two");
  int b = 0;
  while ((1 << b) < v) ++b;
  return b;
}

}  // namespace oddm
