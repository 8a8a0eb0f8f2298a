#pragma once

#include "oddm/hqc.hpp"
#include "oddm/map_estimator.hpp"
#include "oddm/types.hpp"

namespace oddm {

// Frame geometry: M delay rows, N Doppler columns, blocks of N_b consecutive
// Doppler symbols sharing one mode.
struct FrameConfig {
  int m_delay = 0;
  int n_doppler = 0;
  int n_block = 1;
  Constellation constellation;

  int b1() const { return n_block * constellation.bits_q1(); }
  int b2() const { return constellation.bits_q2(); }
  int block_bits() const { return b1() + b2(); }
  int blocks_per_row() const { return n_doppler / n_block; }
  long num_blocks() const { return static_cast<long>(m_delay) * blocks_per_row(); }
  long total_bits() const { return num_blocks() * block_bits(); }
  double spectral_efficiency() const {
    return constellation.bits_q1() +
           static_cast<double>(constellation.bits_q2()) / n_block;
  }
  void validate() const;
};

struct Frame {
  CMat symbols;  // M×N
  IMat modes;    // M×(N/N_b)
};

// Helpers shared by the mappers: MSB-first bit/integer packing.
std::uint64_t uint_from_bits(const Bits& bits, size_t pos, int count);
void bits_from_uint(std::uint64_t v, int count, Bits& out);

// Splits exactly B bits into MN/N_b groups of B_b, delay-major then block.
std::vector<Bits> split_bits(const Bits& bits, const FrameConfig& cfg);

// Mode bits first (b2 of them), then N_b chunks of log2(Q1) bits.
struct MappedBlock {
  std::vector<cplx> symbols;
  int mode = 0;
};
MappedBlock map_block(const Bits& group, const Constellation& c, int n_block);

// Hard decisions from detector posteriors: argmax mode, then per-symbol
// argmax within that mode's column. Ties break to the lowest index.
Bits demap_block_hard(const BlockPosterior& post, const Constellation& c,
                      int n_block);

Frame assemble_frame(const std::vector<Bits>& groups, const FrameConfig& cfg);
Bits disassemble_frame(const Frame& frame, const FrameConfig& cfg);

// bits → Frame in one step.
Frame map_frame(const Bits& bits, const FrameConfig& cfg);

// Conventional index-modulation baseline: K_b of N_b positions active with
// plain QAM symbols, activation pattern chosen by a lexicographic
// (combinadic) ranking, active symbols scaled by √(N_b/K_b).
struct ImBaselineConfig {
  int n_block = 0;
  int k_active = 0;
  int qam_order = 0;
  Constellation qam;  // build_hqc(qam_order, 1, -)

  int index_bits() const;
  int block_bits() const { return index_bits() + k_active * ilog2(qam_order); }
  double spectral_efficiency() const {
    return static_cast<double>(block_bits()) / n_block;
  }
  double active_scale() const {
    return std::sqrt(static_cast<double>(n_block) / k_active);
  }
  void validate() const;
};
ImBaselineConfig make_im_config(int n_block, int k_active, int qam_order);

std::uint64_t comb(int n, int k);
std::vector<int> unrank_combination(int n, int k, std::uint64_t rank);
std::uint64_t rank_combination(int n, int k, const std::vector<int>& positions);

std::vector<cplx> map_im_block(const Bits& group, const ImBaselineConfig& cfg);
Bits demap_im_block(const std::vector<cplx>& symbols, const ImBaselineConfig& cfg);

// IM frames reuse the delay-major block geometry of HMIM frames.
long im_frame_bits(int m_delay, int n_doppler, const ImBaselineConfig& cfg);
CMat map_im_frame(const Bits& bits, int m_delay, int n_doppler,
                  const ImBaselineConfig& cfg);

// All valid blocks of a scheme, enumerated in ascending bit-group order;
// detectors use these as ML hypothesis sets.
struct BlockHypothesis {
  std::vector<cplx> symbols;
  Bits bits;
};
std::vector<BlockHypothesis> hmim_block_hypotheses(const Constellation& c,
                                                   int n_block);
std::vector<BlockHypothesis> im_block_hypotheses(const ImBaselineConfig& cfg);

}  // namespace oddm
