#include "oddm/hqc.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace oddm {

namespace {

constexpr double kDistinctTol = 1e-9;

inline std::uint32_t gray(std::uint32_t i) { return i ^ (i >> 1); }

// One layer of the constellation: Gray-labelled lattice with unit spacing,
// centred at the origin. Order 2 is one-dimensional along the given axis;
// odd bit counts use a rectangle with the wider side on the real axis
// (8 -> 4x2), matching the usual reference implementations.
struct Lattice {
  std::vector<cplx> pts;
  std::vector<std::uint32_t> labels;
};

enum class Axis1D { Real, Imag };

Lattice make_lattice(int order, Axis1D one_d_axis) {
  Lattice lat;
  if (order == 1) {
    lat.pts = {cplx(0.0, 0.0)};
    lat.labels = {0};
    return lat;
  }
  int bits = ilog2(order);
  if (bits == 1) {
    for (int i = 0; i < 2; ++i) {
      double coord = i - 0.5;
      lat.pts.push_back(one_d_axis == Axis1D::Real ? cplx(coord, 0.0)
                                                   : cplx(0.0, coord));
      lat.labels.push_back(gray(static_cast<std::uint32_t>(i)));
    }
    return lat;
  }
  int bits_i = (bits + 1) / 2;  // real-axis bits (wider side when odd)
  int bits_q = bits / 2;
  int ci = 1 << bits_i, cq = 1 << bits_q;
  for (int col = 0; col < ci; ++col)
    for (int row = 0; row < cq; ++row) {
      lat.pts.emplace_back(col - (ci - 1) / 2.0, row - (cq - 1) / 2.0);
      lat.labels.push_back((gray(col) << bits_q) | gray(row));
    }
  return lat;
}

// Minimum distance between points whose base index differs, for mode lattice
// scaled by delta. Exhaustive.
double d1_at(const Lattice& base, const Lattice& mode, double delta) {
  double best = std::numeric_limits<double>::infinity();
  const int q1n = static_cast<int>(base.pts.size());
  const int q2n = static_cast<int>(mode.pts.size());
  for (int a1 = 0; a1 < q1n; ++a1)
    for (int a2 = 0; a2 < q2n; ++a2)
      for (int b1 = 0; b1 < q1n; ++b1) {
        if (b1 == a1) continue;
        for (int b2 = 0; b2 < q2n; ++b2) {
          cplx d = (base.pts[a1] + delta * mode.pts[a2]) -
                   (base.pts[b1] + delta * mode.pts[b2]);
          best = std::min(best, std::abs(d));
        }
      }
  return best;
}

double mode_min_gap(const Lattice& mode) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < mode.pts.size(); ++i)
    for (size_t j = i + 1; j < mode.pts.size(); ++j)
      best = std::min(best, std::abs(mode.pts[i] - mode.pts[j]));
  return best;
}

void fill_tables(Constellation& c, const Lattice& base, const Lattice& mode,
                 double delta) {
  c.base_points.resize(base.pts.size());
  c.mode_points.resize(mode.pts.size());
  for (size_t i = 0; i < base.pts.size(); ++i) c.base_points[i] = base.pts[i];
  for (size_t i = 0; i < mode.pts.size(); ++i) c.mode_points[i] = delta * mode.pts[i];
  c.points.resize(c.base_points.size() * c.mode_points.size());
  for (int q1 = 0; q1 < c.q1_order; ++q1)
    for (int q2 = 0; q2 < c.q2_order; ++q2)
      c.points[q1 * c.q2_order + q2] = c.base_points[q1] + c.mode_points[q2];
  c.bit_labels_q1 = base.labels;
  c.bit_labels_q2 = mode.labels;
  c.index_q1.assign(c.q1_order, -1);
  c.index_q2.assign(c.q2_order, -1);
  for (int i = 0; i < c.q1_order; ++i) c.index_q1[c.bit_labels_q1[i]] = i;
  for (int i = 0; i < c.q2_order; ++i) c.index_q2[c.bit_labels_q2[i]] = i;
}

void scale_all(Constellation& c, double s) {
  for (auto& p : c.base_points) p *= s;
  for (auto& p : c.mode_points) p *= s;
  for (auto& p : c.points) p *= s;
  c.d1 *= s;
  c.d2 *= s;
}

double mean_point_energy(const Constellation& c) {
  double e = 0.0;
  for (const auto& p : c.points) e += std::norm(p);
  return e / static_cast<double>(c.points.size());
}

}  // namespace

std::pair<int, int> Constellation::nearest(const cplx& x) const {
  int bq1 = 0, bq2 = 0;
  double best = std::numeric_limits<double>::infinity();
  for (int q1 = 0; q1 < q1_order; ++q1)
    for (int q2 = 0; q2 < q2_order; ++q2) {
      double d = std::norm(point(q1, q2) - x);
      if (d < best) {
        best = d;
        bq1 = q1;
        bq2 = q2;
      }
    }
  return {bq1, bq2};
}

Constellation build_hqc(int q1_order, int q2_order, double rho) {
  if (q1_order < 2 || !is_pow2(q1_order))
    throw std::invalid_argument("build_hqc: q1_order must be a power of two >= 2");
  if (q2_order < 1 || !is_pow2(q2_order))
    throw std::invalid_argument("build_hqc: q2_order must be a power of two >= 1");
  if (q2_order > 1 && !(rho > 0.0))
    throw std::invalid_argument("build_hqc: rho must be positive");

  Lattice base = make_lattice(q1_order, Axis1D::Imag);
  Lattice mode = make_lattice(q2_order, Axis1D::Real);

  Constellation c;
  c.q1_order = q1_order;
  c.q2_order = q2_order;

  if (q2_order == 1) {
    fill_tables(c, base, mode, 0.0);
    c.d1 = d1_at(base, mode, 0.0);
    c.d2 = 0.0;
    c.rho = 0.0;
    scale_all(c, 1.0 / std::sqrt(mean_point_energy(c)));
    return c;
  }

  const double unit_gap = mode_min_gap(mode);  // 1 for the standard lattices
  auto ratio = [&](double delta) {
    return d1_at(base, mode, delta) / (delta * unit_gap);
  };

  // ratio(δ) falls strictly from +inf toward 0 (d1 is weakly decreasing and
  // the denominator grows), so bisection brackets any positive target.
  double lo = 1e-12, hi = 1.0;
  while (ratio(hi) > rho) {
    hi *= 2.0;
    if (hi > 1e18) throw ConstellationError("build_hqc: ratio search diverged");
  }
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (ratio(mid) > rho)
      lo = mid;
    else
      hi = mid;
  }
  double delta = 0.5 * (lo + hi);

  fill_tables(c, base, mode, delta);
  c.d1 = d1_at(base, mode, delta);
  c.d2 = delta * unit_gap;
  c.rho = c.d1 / c.d2;
  scale_all(c, 1.0 / std::sqrt(mean_point_energy(c)));

  double min_pair = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < c.points.size(); ++i)
    for (size_t j = i + 1; j < c.points.size(); ++j)
      min_pair = std::min(min_pair, std::abs(c.points[i] - c.points[j]));
  if (min_pair <= kDistinctTol || !(std::abs(c.rho - rho) <= 1e-9 * std::max(1.0, rho))) {
    // Report the smallest ratio that keeps normalised points ~1e-8 apart.
    double e_base = 0.0, e_mode = 0.0;
    for (const auto& p : base.pts) e_base += std::norm(p);
    for (const auto& p : mode.pts) e_mode += std::norm(p);
    e_base /= static_cast<double>(base.pts.size());
    e_mode /= static_cast<double>(mode.pts.size());
    auto norm_gap = [&](double d) {
      return std::min(d1_at(base, mode, d), d * unit_gap) /
             std::sqrt(e_base + d * d * e_mode);
    };
    double probe = delta;
    while (norm_gap(probe) < 1e-8 && probe > 1e-15) probe *= 0.5;
    double achievable = ratio(probe);
    std::ostringstream msg;
    msg << "build_hqc: rho=" << rho << " infeasible for (" << q1_order << ","
        << q2_order << "): points collapse (min gap " << min_pair
        << "); smallest safely achievable rho is about " << achievable;
    throw ConstellationError(msg.str());
  }
  return c;
}

std::pair<double, double> min_distances(const Constellation& c) {
  double d1 = std::numeric_limits<double>::infinity();
  for (int a1 = 0; a1 < c.q1_order; ++a1)
    for (int a2 = 0; a2 < c.q2_order; ++a2)
      for (int b1 = 0; b1 < c.q1_order; ++b1) {
        if (b1 == a1) continue;
        for (int b2 = 0; b2 < c.q2_order; ++b2)
          d1 = std::min(d1, std::abs(c.point(a1, a2) - c.point(b1, b2)));
      }
  double d2 = 0.0;
  if (c.q2_order > 1) {
    d2 = std::numeric_limits<double>::infinity();
    for (int i = 0; i < c.q2_order; ++i)
      for (int j = i + 1; j < c.q2_order; ++j)
        d2 = std::min(d2, std::abs(c.mode_points[i] - c.mode_points[j]));
  }
  return {d1, d2};
}

void dump_constellation(const Constellation& c, std::ostream& os) {
  os.precision(17);
  os << "# q1_order " << c.q1_order << " q2_order " << c.q2_order << "\n";
  os << "# index bits_q1 bits_q2 re im\n";
  auto bitstr = [](std::uint32_t v, int n) {
    if (n == 0) return std::string("-");
    std::string s;
    for (int b = n - 1; b >= 0; --b) s.push_back((v >> b) & 1 ? '1' : '0');
    return s;
  };
  int idx = 0;
  for (int q1 = 0; q1 < c.q1_order; ++q1)
    for (int q2 = 0; q2 < c.q2_order; ++q2, ++idx) {
      const cplx& p = c.point(q1, q2);
      os << idx << ' ' << bitstr(c.bit_labels_q1[q1], c.bits_q1()) << ' '
         << bitstr(c.bit_labels_q2[q2], c.bits_q2()) << ' ' << p.real() << ' '
         << p.imag() << "\n";
    }
}

Constellation load_constellation(std::istream& is) {
  Constellation c;
  std::string line;
  int q1_order = -1, q2_order = -1;
  std::vector<std::tuple<int, std::string, std::string, double, double>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream hs(line.substr(1));
      std::string key;
      while (hs >> key) {
        if (key == "q1_order") hs >> q1_order;
        if (key == "q2_order") hs >> q2_order;
      }
      continue;
    }
    std::istringstream ls(line);
    int idx;
    std::string b1, b2;
    double re, im;
    if (!(ls >> idx >> b1 >> b2 >> re >> im))
      throw ConfigError("load_constellation: malformed row: " + line);
    rows.emplace_back(idx, b1, b2, re, im);
  }
  if (q1_order < 2 || q2_order < 1)
    throw ConfigError("load_constellation: missing or bad header");
  if (static_cast<int>(rows.size()) != q1_order * q2_order)
    throw ConfigError("load_constellation: row count mismatch");

  c.q1_order = q1_order;
  c.q2_order = q2_order;
  c.points.resize(rows.size());
  c.bit_labels_q1.assign(q1_order, 0);
  c.bit_labels_q2.assign(q2_order, 0);
  auto parse_bits = [](const std::string& s) -> std::uint32_t {
    if (s == "-") return 0;
    std::uint32_t v = 0;
    for (char ch : s) v = (v << 1) | (ch == '1' ? 1u : 0u);
    return v;
  };
  for (const auto& [idx, b1, b2, re, im] : rows) {
    if (idx < 0 || idx >= static_cast<int>(rows.size()))
      throw ConfigError("load_constellation: index out of range");
    c.points[idx] = cplx(re, im);
    c.bit_labels_q1[idx / q2_order] = parse_bits(b1);
    c.bit_labels_q2[idx % q2_order] = parse_bits(b2);
  }
  // Rebuild the factor layers from the grid: base point q1 is the mean of its
  // mode column; mode offsets are the shared residuals.
  c.base_points.assign(q1_order, cplx(0, 0));
  c.mode_points.assign(q2_order, cplx(0, 0));
  for (int q1 = 0; q1 < q1_order; ++q1) {
    cplx s{0, 0};
    for (int q2 = 0; q2 < q2_order; ++q2) s += c.points[q1 * q2_order + q2];
    c.base_points[q1] = s / static_cast<double>(q2_order);
  }
  for (int q2 = 0; q2 < q2_order; ++q2)
    c.mode_points[q2] = c.points[q2] - c.base_points[0];
  c.index_q1.assign(q1_order, -1);
  c.index_q2.assign(q2_order, -1);
  for (int i = 0; i < q1_order; ++i) c.index_q1[c.bit_labels_q1[i]] = i;
  for (int i = 0; i < q2_order; ++i) c.index_q2[c.bit_labels_q2[i]] = i;
  auto [d1, d2] = min_distances(c);
  c.d1 = d1;
  c.d2 = d2;
  c.rho = (c.q2_order > 1 && d2 > 0) ? d1 / d2 : 0.0;
  return c;
}

}  // namespace oddm
