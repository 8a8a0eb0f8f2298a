#pragma once

#include "oddm/types.hpp"

namespace oddm {

// Domain conventions, used everywhere downstream:
//  * DD grid X is M×N: row m = delay bin, column n = Doppler bin.
//  * The delay-time grid is X^DT[m][n'] = unitary N-point IDFT of row m of X.
//  * The time sequence interleaves delay fastest: s[q] = X^DT[m][n] with
//    q = n·M + m (one length-M stagger per multicarrier symbol, N symbols).
// time_to_dd is the exact inverse (row-wise unitary DFT after devectorizing).

// Unitary DFT matrix, F[a,b] = exp(-j2πab/n)/√n.
CMat dft_matrix(int n);

CVec dd_to_time(const CMat& x_dd);
CMat time_to_dd(const CVec& r, int m_delay, int n_doppler);

// Frame-wise cyclic prefix: prepend/drop the last l_max samples.
CVec add_cp(const CVec& s, int l_max);
CVec remove_cp(const CVec& ext, int l_max);

}  // namespace oddm
