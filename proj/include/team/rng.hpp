#ifndef TEAM_RNG_HPP
#define TEAM_RNG_HPP

#include <cstdint>

namespace team {

// Counter-based generator (Philox4x32-10). A generator is addressed by
// (seed, stream): the seed is the 64-bit user seed and the stream selects an
// independent substream. Draws within a stream are sequential; distinct
// (seed, stream) pairs never collide. The simulation code documents its
// stream layout next to the call sites.
//
// Normal variates use the inverse CDF so that sequences are identical across
// platforms and compilers.
class Philox {
 public:
  Philox(std::uint64_t seed, std::uint64_t stream);

  std::uint32_t next_u32();
  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random bits.
  double next_double();
  // Uniform on the open interval (0, 1); safe as an inverse-CDF argument.
  double next_open_double();
  // Standard normal via inverse CDF.
  double next_normal();

 private:
  void refill();

  std::uint64_t key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::uint32_t buf_[4];
  int buf_pos_ = 4;
};

// Inverse of the standard normal CDF (Wichura's algorithm, full double
// precision). Requires 0 < p < 1.
double inverse_normal_cdf(double p);

// Standard normal CDF via erfc; accurate in both tails.
double normal_cdf(double z);

}  // namespace team

#endif  // TEAM_RNG_HPP
