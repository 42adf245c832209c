#include "team/rng.hpp"

#include <cmath>

#include "team/errors.hpp"

namespace team {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

inline void philox_round(std::uint32_t ctr[4], std::uint32_t k0, std::uint32_t k1) {
  const std::uint64_t p0 = static_cast<std::uint64_t>(kPhiloxM0) * ctr[0];
  const std::uint64_t p1 = static_cast<std::uint64_t>(kPhiloxM1) * ctr[2];
  const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32);
  const std::uint32_t lo0 = static_cast<std::uint32_t>(p0);
  const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32);
  const std::uint32_t lo1 = static_cast<std::uint32_t>(p1);
  const std::uint32_t out0 = hi1 ^ ctr[1] ^ k0;
  const std::uint32_t out2 = hi0 ^ ctr[3] ^ k1;
  ctr[0] = out0;
  ctr[1] = lo1;
  ctr[2] = out2;
  ctr[3] = lo0;
}

}  // namespace

Philox::Philox(std::uint64_t seed, std::uint64_t stream) : key_(seed), stream_(stream) {}

void Philox::refill() {
  std::uint32_t ctr[4] = {
      static_cast<std::uint32_t>(block_),
      static_cast<std::uint32_t>(block_ >> 32),
      static_cast<std::uint32_t>(stream_),
      static_cast<std::uint32_t>(stream_ >> 32),
  };
  std::uint32_t k0 = static_cast<std::uint32_t>(key_);
  std::uint32_t k1 = static_cast<std::uint32_t>(key_ >> 32);
  for (int round = 0; round < 10; ++round) {
    philox_round(ctr, k0, k1);
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  for (int i = 0; i < 4; ++i) buf_[i] = ctr[i];
  ++block_;
  buf_pos_ = 0;
}

std::uint32_t Philox::next_u32() {
  if (buf_pos_ >= 4) refill();
  return buf_[buf_pos_++];
}

std::uint64_t Philox::next_u64() {
  const std::uint64_t lo = next_u32();
  const std::uint64_t hi = next_u32();
  return (hi << 32) | lo;
}

double Philox::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Philox::next_open_double() {
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Philox::next_normal() { return inverse_normal_cdf(next_open_double()); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / 1.4142135623730951); }

// PPND16: rational approximations on three regions, |error| < 1e-15.
double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ConfigError("inverse_normal_cdf: p must lie in (0,1)");
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num = (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                             6.7265770927008700853e4) *
                                r +
                            4.5921953931549871457e4) *
                               r +
                           1.3731693765509461125e4) *
                              r +
                          1.9715909503065514427e3) *
                             r +
                         1.3314166789178437745e2) *
                            r +
                        3.3871328727963666080e0);
    const double den = (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                             3.9307895800092710610e4) *
                                r +
                            2.1213794301586595867e4) *
                               r +
                           5.3941960214247511077e3) *
                              r +
                          6.8718700749205790830e2) *
                             r +
                         4.2313330701600911252e1) *
                            r +
                        1.0);
    return q * num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                             2.41780725177450611770e-1) *
                                r +
                            1.27045825245236838258e0) *
                               r +
                           3.64784832476320460504e0) *
                              r +
                          5.76949722146069140550e0) *
                             r +
                         4.63033784615654529590e0) *
                            r +
                        1.42343711074968357734e0);
    const double den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                             1.51986665636164571966e-2) *
                                r +
                            1.48103976427480074590e-1) *
                               r +
                           6.89767334985100004550e-1) *
                              r +
                          1.67638483018380384940e0) *
                             r +
                         2.05319162663775882187e0) *
                            r +
                        1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                             1.24266094738807843860e-3) *
                                r +
                            2.65321895265761230930e-2) *
                               r +
                           2.96560571828504891230e-1) *
                              r +
                          1.78482653991729133580e0) *
                             r +
                         5.46378491116411436990e0) *
                            r +
                        6.65790464350110377720e0);
    const double den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                             1.84631831751005468180e-5) *
                                r +
                            7.86869131145613259100e-4) *
                               r +
                           1.48753612908506148525e-2) *
                              r +
                          1.36929880922735805310e-1) *
                             r +
                         5.99832206555887937690e-1) *
                            r +
                        1.0);
    value = num / den;
  }
  return (q < 0.0) ? -value : value;
}

}  // namespace team
