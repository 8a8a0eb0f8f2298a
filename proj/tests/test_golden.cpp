// Frozen-output regressions: regenerate three small artifacts and compare
// byte-for-byte against the committed files. Set ODDM_REGEN_GOLDEN=1 to
// rewrite the files after an intentional behavior change.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "oddm/channel.hpp"
#include "oddm/hmim.hpp"
#include "oddm/hqc.hpp"

using namespace oddm;

namespace {

std::string golden_path(const std::string& leaf) {
  return std::string(ODDM_GOLDEN_DIR) + "/" + leaf;
}

void check_or_regen(const std::string& leaf, const std::string& generated) {
  const std::string path = golden_path(leaf);
  if (std::getenv("ODDM_REGEN_GOLDEN")) {
    std::ofstream(path) << generated;
    MESSAGE("regenerated ", path);
    return;
  }
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing golden file ", path);
  std::ostringstream os;
  os << in.rdbuf();
  CHECK_MESSAGE(os.str() == generated, "golden mismatch for ", leaf,
                " (set ODDM_REGEN_GOLDEN=1 to accept new output)");
}

std::string fmt_cplx_row(const std::string& prefix, const cplx& v) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%s,%.12e,%.12e\n", prefix.c_str(),
                v.real(), v.imag());
  return buf;
}

}  // namespace

TEST_CASE("golden: constellation tables") {
  struct Row {
    const char* leaf;
    int q1, q2;
    double rho;
  };
  for (const Row& r : {Row{"hqc_2_2_r1.4.csv", 2, 2, 1.4},
                       {"hqc_4_4_r1.1.csv", 4, 4, 1.1},
                       {"hqc_4_1_plain.csv", 4, 1, 1.0}}) {
    Constellation c = build_hqc(r.q1, r.q2, r.rho);
    std::string out = "q1,q2,re,im\n";
    for (int q1 = 0; q1 < c.q1_order; ++q1)
      for (int q2 = 0; q2 < c.q2_order; ++q2)
        out += fmt_cplx_row(std::to_string(q1) + "," + std::to_string(q2),
                            c.point(q1, q2));
    check_or_regen(r.leaf, out);
  }
}

TEST_CASE("golden: mapped frame") {
  FrameConfig fc;
  fc.m_delay = 4;
  fc.n_doppler = 4;
  fc.n_block = 4;
  fc.constellation = build_hqc(4, 4, 1.1);  // SE 2.5 row
  std::mt19937_64 rng(77);
  Bits bits(static_cast<size_t>(fc.total_bits()));
  std::string header = "bits,";
  for (auto& b : bits) {
    b = static_cast<std::uint8_t>(rng() & 1);
    header += static_cast<char>('0' + b);
  }
  Frame frame = map_frame(bits, fc);
  std::string out = header + "\nm,n,re,im\n";
  for (int m = 0; m < fc.m_delay; ++m)
    for (int n = 0; n < fc.n_doppler; ++n)
      out += fmt_cplx_row(std::to_string(m) + "," + std::to_string(n),
                          frame.symbols(m, n));
  check_or_regen("frame_se2.5_4x4.csv", out);
}

TEST_CASE("golden: channel draw") {
  ChannelModel model;
  model.taps = 5;
  model.ue_speed_mps = 500 / 3.6;
  std::mt19937_64 rng(55);
  ChannelRealization ch = gen_channel(model, 8, 8, rng);
  std::ostringstream os;
  dump_channel(ch, os);
  check_or_regen("channel_8x8_seed55.txt", os.str());

  // The dump round-trips through the loader.
  std::istringstream in(os.str());
  ChannelRealization back = load_channel(in, 8, 8);
  REQUIRE(back.paths.size() == ch.paths.size());
  for (size_t i = 0; i < ch.paths.size(); ++i) {
    CHECK(back.paths[i].delay_idx == ch.paths[i].delay_idx);
    CHECK(back.paths[i].doppler_idx == ch.paths[i].doppler_idx);
    CHECK(std::abs(back.paths[i].gain - ch.paths[i].gain) < 1e-12);
  }
}
