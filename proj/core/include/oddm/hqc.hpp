#pragma once

#include <iosfwd>
#include <utility>

#include "oddm/types.hpp"

namespace oddm {

// Two-layer constellation: every transmitted point is the sum of a base
// QAM point (per-symbol bits) and a mode offset shared by a block:
//
//   points[q1][q2] = base_points[q1] + mode_points[q2]
//
// d1 is the minimum distance between points with different base index q1,
// d2 the minimum distance between mode offsets. The mode lattice spacing is
// chosen so d1/d2 hits the requested rho, then the whole set is scaled to
// unit mean energy.
struct Constellation {
  int q1_order = 0;  // Q1, power of two >= 2
  int q2_order = 0;  // Q2, power of two >= 1
  double rho = 0.0;  // achieved d1/d2 (0 when q2_order == 1)
  double d1 = 0.0;
  double d2 = 0.0;   // 0 when q2_order == 1

  std::vector<cplx> base_points;  // size Q1
  std::vector<cplx> mode_points;  // size Q2, already scaled by the found δ
  std::vector<cplx> points;       // flat Q1*Q2 grid, index q1*Q2 + q2

  // Gray labels, MSB first when serialized to bits.
  std::vector<std::uint32_t> bit_labels_q1;  // size Q1
  std::vector<std::uint32_t> bit_labels_q2;  // size Q2
  // Inverse lookup: index_q1[label] is the q1 with that label.
  std::vector<int> index_q1;
  std::vector<int> index_q2;

  int bits_q1() const { return ilog2(q1_order); }
  int bits_q2() const { return ilog2(q2_order); }
  int num_points() const { return q1_order * q2_order; }
  const cplx& point(int q1, int q2) const { return points[q1 * q2_order + q2]; }

  // Nearest (q1, q2) to x; ties resolve to the lowest flat index.
  std::pair<int, int> nearest(const cplx& x) const;
};

// Builds the two-layer constellation. q1_order >= 2; both orders powers of
// two. When q2_order == 1 rho is ignored and the result is plain Gray QAM.
// One-dimensional layers (order 2) sit on the real axis for the mode and the
// imaginary axis for the base, so (2,2,rho=1) lands exactly on 4-QAM with the
// usual (real, imag) bit order. Orders with an odd bit count use the
// rectangular layout of the common reference implementations (8-QAM: 4x2,
// real spread wider). Throws ConstellationError when no spacing achieves rho
// without collapsing points.
Constellation build_hqc(int q1_order, int q2_order, double rho);

// Exhaustive-enumeration recomputation of (d1, d2); the oracle for the
// distance invariants. d2 is 0 when q2_order == 1.
std::pair<double, double> min_distances(const Constellation& c);

// Plain-text table "index bits_q1 bits_q2 re im" (bits_q2 prints '-' when the
// mode layer carries no bits). load_constellation round-trips a dump,
// recomputing rho/d1/d2 from the listed points.
void dump_constellation(const Constellation& c, std::ostream& os);
Constellation load_constellation(std::istream& is);

}  // namespace oddm
