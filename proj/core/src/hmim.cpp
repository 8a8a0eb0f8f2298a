#include "oddm/hmim.hpp"

#include <algorithm>

namespace oddm {

void FrameConfig::validate() const {
  if (m_delay < 1 || n_doppler < 1) throw std::invalid_argument("frame config: empty grid");
  if (n_block < 1 || n_doppler % n_block != 0)
    throw std::invalid_argument("frame config: N must be a multiple of N_b");
  if (constellation.q1_order < 2)
    throw std::invalid_argument("frame config: constellation not built");
}

std::uint64_t uint_from_bits(const Bits& bits, size_t pos, int count) {
  std::uint64_t v = 0;
  for (int i = 0; i < count; ++i) v = (v << 1) | (bits[pos + i] & 1u);
  return v;
}

void bits_from_uint(std::uint64_t v, int count, Bits& out) {
  out.resize(count);
  for (int i = 0; i < count; ++i)
    out[i] = static_cast<std::uint8_t>((v >> (count - 1 - i)) & 1u);
}

std::vector<Bits> split_bits(const Bits& bits, const FrameConfig& cfg) {
  cfg.validate();
  if (static_cast<long>(bits.size()) != cfg.total_bits())
    throw std::invalid_argument("split_bits: expected exactly B bits");
  const int bb = cfg.block_bits();
  std::vector<Bits> groups(cfg.num_blocks());
  for (long g = 0; g < cfg.num_blocks(); ++g)
    groups[g].assign(bits.begin() + g * bb, bits.begin() + (g + 1) * bb);
  return groups;
}

MappedBlock map_block(const Bits& group, const Constellation& c, int n_block) {
  const int b1 = c.bits_q1(), b2 = c.bits_q2();
  if (static_cast<int>(group.size()) != n_block * b1 + b2)
    throw std::invalid_argument("map_block: wrong group size");
  MappedBlock blk;
  blk.mode = c.index_q2[uint_from_bits(group, 0, b2)];
  blk.symbols.resize(n_block);
  for (int i = 0; i < n_block; ++i) {
    int q1 = c.index_q1[uint_from_bits(group, b2 + i * b1, b1)];
    blk.symbols[i] = c.point(q1, blk.mode);
  }
  return blk;
}

Bits demap_block_hard(const BlockPosterior& post, const Constellation& c,
                      int n_block) {
  if (post.mode_pmf.size() != c.q2_order ||
      post.symbol_pmfs.rows() != n_block ||
      post.symbol_pmfs.cols() != c.num_points())
    throw std::invalid_argument("demap_block_hard: posterior shape mismatch");

  int mode = 0;
  for (int q2 = 1; q2 < c.q2_order; ++q2)
    if (post.mode_pmf(q2) > post.mode_pmf(mode)) mode = q2;

  Bits bits;
  Bits tmp;
  bits_from_uint(c.bit_labels_q2[mode], c.bits_q2(), tmp);
  bits.insert(bits.end(), tmp.begin(), tmp.end());
  for (int n = 0; n < n_block; ++n) {
    int best = 0;
    for (int q1 = 1; q1 < c.q1_order; ++q1)
      if (post.symbol_pmfs(n, q1 * c.q2_order + mode) >
          post.symbol_pmfs(n, best * c.q2_order + mode))
        best = q1;
    bits_from_uint(c.bit_labels_q1[best], c.bits_q1(), tmp);
    bits.insert(bits.end(), tmp.begin(), tmp.end());
  }
  return bits;
}

Frame assemble_frame(const std::vector<Bits>& groups, const FrameConfig& cfg) {
  cfg.validate();
  if (static_cast<long>(groups.size()) != cfg.num_blocks())
    throw std::invalid_argument("assemble_frame: wrong group count");
  Frame f;
  f.symbols.resize(cfg.m_delay, cfg.n_doppler);
  f.modes.resize(cfg.m_delay, cfg.blocks_per_row());
  const int bpr = cfg.blocks_per_row();
  for (int m = 0; m < cfg.m_delay; ++m)
    for (int beta = 0; beta < bpr; ++beta) {
      MappedBlock blk =
          map_block(groups[m * bpr + beta], cfg.constellation, cfg.n_block);
      f.modes(m, beta) = blk.mode;
      for (int i = 0; i < cfg.n_block; ++i)
        f.symbols(m, beta * cfg.n_block + i) = blk.symbols[i];
    }
  return f;
}

Bits disassemble_frame(const Frame& frame, const FrameConfig& cfg) {
  cfg.validate();
  const Constellation& c = cfg.constellation;
  const int bpr = cfg.blocks_per_row();
  Bits bits, tmp;
  bits.reserve(cfg.total_bits());
  for (int m = 0; m < cfg.m_delay; ++m)
    for (int beta = 0; beta < bpr; ++beta) {
      int mode = frame.modes(m, beta);
      bits_from_uint(c.bit_labels_q2[mode], c.bits_q2(), tmp);
      bits.insert(bits.end(), tmp.begin(), tmp.end());
      for (int i = 0; i < cfg.n_block; ++i) {
        cplx s = frame.symbols(m, beta * cfg.n_block + i);
        int best = 0;
        double bd = std::numeric_limits<double>::infinity();
        for (int q1 = 0; q1 < c.q1_order; ++q1) {
          double d = std::norm(s - c.point(q1, mode));
          if (d < bd) {
            bd = d;
            best = q1;
          }
        }
        bits_from_uint(c.bit_labels_q1[best], c.bits_q1(), tmp);
        bits.insert(bits.end(), tmp.begin(), tmp.end());
      }
    }
  return bits;
}

Frame map_frame(const Bits& bits, const FrameConfig& cfg) {
  return assemble_frame(split_bits(bits, cfg), cfg);
}

int ImBaselineConfig::index_bits() const {
  std::uint64_t c = comb(n_block, k_active);
  int b = 0;
  while ((2ull << b) <= c) ++b;  // floor(log2 c)
  return b;
}

void ImBaselineConfig::validate() const {
  if (n_block < 1 || k_active < 1 || k_active > n_block)
    throw std::invalid_argument("im config: need 1 <= K_b <= N_b");
  if (qam.q1_order != qam_order || qam.q2_order != 1)
    throw std::invalid_argument("im config: constellation not built");
}

ImBaselineConfig make_im_config(int n_block, int k_active, int qam_order) {
  ImBaselineConfig cfg;
  cfg.n_block = n_block;
  cfg.k_active = k_active;
  cfg.qam_order = qam_order;
  cfg.qam = build_hqc(qam_order, 1, 1.0);
  cfg.validate();
  return cfg;
}

std::uint64_t comb(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  std::uint64_t c = 1;
  for (int i = 0; i < k; ++i) c = c * (n - i) / (i + 1);
  return c;
}

std::vector<int> unrank_combination(int n, int k, std::uint64_t rank) {
  std::vector<int> pos(k);
  int next = 0;
  for (int i = 0; i < k; ++i) {
    for (int c = next;; ++c) {
      std::uint64_t count = comb(n - 1 - c, k - 1 - i);
      if (rank < count) {
        pos[i] = c;
        next = c + 1;
        break;
      }
      rank -= count;
    }
  }
  return pos;
}

std::uint64_t rank_combination(int n, int k, const std::vector<int>& positions) {
  std::uint64_t rank = 0;
  int next = 0;
  for (int i = 0; i < k; ++i) {
    for (int c = next; c < positions[i]; ++c) rank += comb(n - 1 - c, k - 1 - i);
    next = positions[i] + 1;
  }
  return rank;
}

std::vector<cplx> map_im_block(const Bits& group, const ImBaselineConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(group.size()) != cfg.block_bits())
    throw std::invalid_argument("map_im_block: wrong group size");
  const int ib = cfg.index_bits();
  const int qb = ilog2(cfg.qam_order);
  auto active = unrank_combination(cfg.n_block, cfg.k_active,
                                   ib > 0 ? uint_from_bits(group, 0, ib) : 0);
  std::vector<cplx> symbols(cfg.n_block, cplx(0, 0));
  const double scale = cfg.active_scale();
  for (int i = 0; i < cfg.k_active; ++i) {
    int q = cfg.qam.index_q1[uint_from_bits(group, ib + i * qb, qb)];
    symbols[active[i]] = scale * cfg.qam.base_points[q];
  }
  return symbols;
}

Bits demap_im_block(const std::vector<cplx>& symbols, const ImBaselineConfig& cfg) {
  cfg.validate();
  if (static_cast<int>(symbols.size()) != cfg.n_block)
    throw std::invalid_argument("demap_im_block: wrong block size");
  std::vector<int> active;
  for (int i = 0; i < cfg.n_block; ++i)
    if (std::abs(symbols[i]) > 1e-12) active.push_back(i);
  if (static_cast<int>(active.size()) != cfg.k_active)
    throw std::invalid_argument("demap_im_block: wrong active count");

  Bits bits, tmp;
  const int ib = cfg.index_bits();
  if (ib > 0) {
    bits_from_uint(rank_combination(cfg.n_block, cfg.k_active, active), ib, tmp);
    bits.insert(bits.end(), tmp.begin(), tmp.end());
  }
  const double inv = 1.0 / cfg.active_scale();
  for (int i = 0; i < cfg.k_active; ++i) {
    cplx s = symbols[active[i]] * inv;
    int best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (int q = 0; q < cfg.qam_order; ++q) {
      double d = std::norm(s - cfg.qam.base_points[q]);
      if (d < bd) {
        bd = d;
        best = q;
      }
    }
    bits_from_uint(cfg.qam.bit_labels_q1[best], ilog2(cfg.qam_order), tmp);
    bits.insert(bits.end(), tmp.begin(), tmp.end());
  }
  return bits;
}

long im_frame_bits(int m_delay, int n_doppler, const ImBaselineConfig& cfg) {
  cfg.validate();
  if (m_delay < 1 || n_doppler < 1 || n_doppler % cfg.n_block != 0)
    throw std::invalid_argument("im frame: N must be a multiple of N_b");
  return static_cast<long>(m_delay) * (n_doppler / cfg.n_block) * cfg.block_bits();
}

CMat map_im_frame(const Bits& bits, int m_delay, int n_doppler,
                  const ImBaselineConfig& cfg) {
  if (static_cast<long>(bits.size()) != im_frame_bits(m_delay, n_doppler, cfg))
    throw std::invalid_argument("map_im_frame: wrong bit count");
  const int bpr = n_doppler / cfg.n_block;
  const int bb = cfg.block_bits();
  CMat x(m_delay, n_doppler);
  Bits group;
  for (int m = 0; m < m_delay; ++m)
    for (int beta = 0; beta < bpr; ++beta) {
      size_t off = static_cast<size_t>(m * bpr + beta) * bb;
      group.assign(bits.begin() + off, bits.begin() + off + bb);
      auto symbols = map_im_block(group, cfg);
      for (int i = 0; i < cfg.n_block; ++i)
        x(m, beta * cfg.n_block + i) = symbols[i];
    }
  return x;
}

std::vector<BlockHypothesis> hmim_block_hypotheses(const Constellation& c,
                                                   int n_block) {
  const int bb = n_block * c.bits_q1() + c.bits_q2();
  if (bb > 24) throw std::invalid_argument("hmim_block_hypotheses: block too large");
  std::vector<BlockHypothesis> hyp(1ull << bb);
  for (std::uint64_t v = 0; v < hyp.size(); ++v) {
    bits_from_uint(v, bb, hyp[v].bits);
    hyp[v].symbols = map_block(hyp[v].bits, c, n_block).symbols;
  }
  return hyp;
}

std::vector<BlockHypothesis> im_block_hypotheses(const ImBaselineConfig& cfg) {
  const int bb = cfg.block_bits();
  if (bb > 24) throw std::invalid_argument("im_block_hypotheses: block too large");
  std::vector<BlockHypothesis> hyp(1ull << bb);
  for (std::uint64_t v = 0; v < hyp.size(); ++v) {
    bits_from_uint(v, bb, hyp[v].bits);
    hyp[v].symbols = map_im_block(hyp[v].bits, cfg);
  }
  return hyp;
}

}  // namespace oddm
