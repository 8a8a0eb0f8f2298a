#include "oddm/transform.hpp"

namespace oddm {

CMat dft_matrix(int n) {
  CMat f(n, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) {
      double ang = -2.0 * kPi * a * b / n;
      f(a, b) = scale * cplx(std::cos(ang), std::sin(ang));
    }
  return f;
}

CVec dd_to_time(const CMat& x_dd) {
  const int m = static_cast<int>(x_dd.rows());
  const int n = static_cast<int>(x_dd.cols());
  CMat x_dt = x_dd * dft_matrix(n).conjugate();  // row-wise unitary IDFT
  // Column-major storage already interleaves delay fastest: element (m, n)
  // of the DT grid is sample q = n*M + m.
  return Eigen::Map<const CVec>(x_dt.data(), m * n);
}

CMat time_to_dd(const CVec& r, int m_delay, int n_doppler) {
  if (r.size() != static_cast<Eigen::Index>(m_delay) * n_doppler)
    throw std::invalid_argument("time_to_dd: length != M*N");
  Eigen::Map<const CMat> grid(r.data(), m_delay, n_doppler);
  return grid * dft_matrix(n_doppler);
}

CVec add_cp(const CVec& s, int l_max) {
  if (l_max < 0 || l_max >= s.size())
    throw std::invalid_argument("add_cp: need 0 <= l_max < length");
  CVec ext(s.size() + l_max);
  ext.head(l_max) = s.tail(l_max);
  ext.tail(s.size()) = s;
  return ext;
}

CVec remove_cp(const CVec& ext, int l_max) {
  if (l_max < 0 || l_max >= ext.size())
    throw std::invalid_argument("remove_cp: need 0 <= l_max < length");
  return ext.tail(ext.size() - l_max);
}

}  // namespace oddm
