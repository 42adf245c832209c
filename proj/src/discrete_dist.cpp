#include "team/discrete_dist.hpp"

#include <bit>
#include <cmath>
#include <cstdint>

#include "team/errors.hpp"

namespace team {

namespace {

constexpr double kPmfSumTolerance = 1e-12;

}  // namespace

DiscreteDist::DiscreteDist(std::vector<double> pmf) : pmf_(std::move(pmf)) {
  if (pmf_.empty()) throw ConfigError("DiscreteDist: empty pmf");
  double sum = 0.0;
  for (double p : pmf_) {
    if (!(p >= 0.0)) throw ConfigError("DiscreteDist: negative or NaN pmf entry");
    sum += p;
  }
  if (std::fabs(sum - 1.0) > kPmfSumTolerance)
    throw ConfigError("DiscreteDist: pmf does not sum to 1");
  // Suffix sums never exceed 1 in exact arithmetic; clamp the accumulated
  // rounding so the table stays a valid CCDF.
  ccdf_.assign(pmf_.size(), 0.0);
  for (int k = static_cast<int>(pmf_.size()) - 2; k >= 0; --k)
    ccdf_[k] = std::min(ccdf_[k + 1] + pmf_[k + 1], 1.0);
}

DiscreteDist DiscreteDist::binomial(std::int64_t n, double theta) {
  if (n < 0) throw ConfigError("binomial: n must be >= 0");
  if (!(theta > 0.0 && theta < 1.0)) throw ConfigError("binomial: theta must lie in (0,1)");
  std::vector<double> pmf(static_cast<std::size_t>(n) + 1);
  const double log_theta = std::log(theta);
  const double log_comp = std::log1p(-theta);
  const double lg_n1 = std::lgamma(static_cast<double>(n) + 1.0);
  for (std::int64_t k = 0; k <= n; ++k) {
    const double log_pmf = lg_n1 - std::lgamma(static_cast<double>(k) + 1.0) -
                           std::lgamma(static_cast<double>(n - k) + 1.0) +
                           static_cast<double>(k) * log_theta +
                           static_cast<double>(n - k) * log_comp;
    pmf[static_cast<std::size_t>(k)] = std::exp(log_pmf);
  }
  // The log-gamma seeding drifts by ~n*1e-16 in the total for large n; divide
  // by the realized sum so the mass identity holds at every support size.
  double sum = 0.0;
  for (double p : pmf) sum += p;
  for (double& p : pmf) p /= sum;
  return DiscreteDist(std::move(pmf));
}

double DiscreteDist::pmf(int k) const {
  if (k < 0 || k > support_max()) return 0.0;
  return pmf_[static_cast<std::size_t>(k)];
}

double DiscreteDist::ccdf(int x) const {
  if (x < 0) return 1.0;
  if (x >= support_max()) return 0.0;
  return ccdf_[static_cast<std::size_t>(x)];
}

int threshold_count(const DiscreteDist& dist, double c_hat) {
  if (!(c_hat > 0.0 && c_hat < 1.0)) throw ConfigError("threshold_count: c_hat must lie in (0,1)");
  // ccdf is nonincreasing: binary-search the last z with ccdf(z) > c_hat.
  int lo = 0;
  int hi = dist.support_max();
  if (!(dist.ccdf(0) > c_hat)) return -1;
  while (lo < hi) {
    const int mid = lo + (hi - lo + 1) / 2;
    if (dist.ccdf(mid) > c_hat)
      lo = mid;
    else
      hi = mid - 1;
  }
  return lo;
}

DiscreteDist truncate_renormalize(const DiscreteDist& dist, int b_hat) {
  if (b_hat < 0) throw DegenerateNullError("truncate_renormalize: conditioning event has probability 0");
  if (b_hat >= dist.support_max()) return dist;
  const auto& pmf = dist.probabilities();
  double mass = 0.0;
  for (int k = 0; k <= b_hat; ++k) mass += pmf[static_cast<std::size_t>(k)];
  if (!(mass > 0.0))
    throw DegenerateNullError("truncate_renormalize: truncated support carries no mass");
  std::vector<double> out(static_cast<std::size_t>(b_hat) + 1);
  for (int k = 0; k <= b_hat; ++k) out[static_cast<std::size_t>(k)] = pmf[static_cast<std::size_t>(k)] / mass;
  return DiscreteDist(std::move(out));
}

DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b) {
  const auto& pa = a.probabilities();
  const auto& pb = b.probabilities();
  const int sa = static_cast<int>(pa.size());
  const int sb = static_cast<int>(pb.size());
  std::vector<double> out(static_cast<std::size_t>(sa + sb - 1), 0.0);
  for (int k = 0; k < sa + sb - 1; ++k) {
    const int j_lo = std::max(0, k - (sb - 1));
    const int j_hi = std::min(k, sa - 1);
    double sum = 0.0;
    for (int j = j_lo; j <= j_hi; ++j)
      sum += pa[static_cast<std::size_t>(j)] * pb[static_cast<std::size_t>(k - j)];
    out[static_cast<std::size_t>(k)] = sum;
  }
  return DiscreteDist(std::move(out));
}

std::shared_ptr<LayeredNull> make_leaf_null(std::int64_t n, double theta0) {
  auto null = std::make_shared<LayeredNull>(DiscreteDist::binomial(n, theta0));
  null->layer = 1;
  return null;
}

std::shared_ptr<LayeredNull> build_layer_null(const std::shared_ptr<LayeredNull>& child1,
                                              const std::shared_ptr<LayeredNull>& child2,
                                              double c_hat_prev) {
  if (!child1 || !child2) throw ConfigError("build_layer_null: null child");
  if (child1->layer != child2->layer)
    throw ConfigError("build_layer_null: children must come from the same layer");
  const int b1 = threshold_count(child1->dist, c_hat_prev);
  const int b2 = threshold_count(child2->dist, c_hat_prev);
  if (b1 < 0 || b2 < 0)
    throw DegenerateNullError("build_layer_null: a child cannot survive at c_hat_prev");
  child1->b_hat = b1;
  child2->b_hat = b2;
  auto parent = std::make_shared<LayeredNull>(convolve(truncate_renormalize(child1->dist, b1),
                                                       truncate_renormalize(child2->dist, b2)));
  parent->layer = child1->layer + 1;
  parent->child1 = child1;
  parent->child2 = child2;
  return parent;
}

NullCache::NullCache(double theta0) : theta0_(theta0) {
  if (!(theta0 > 0.0 && theta0 < 1.0)) throw ConfigError("NullCache: theta0 must lie in (0,1)");
}

std::shared_ptr<LayeredNull> NullCache::leaf_null(std::int64_t n) {
  auto it = leaves_.find(n);
  if (it != leaves_.end()) return it->second;
  auto null = make_leaf_null(n, theta0_);
  leaves_.emplace(n, null);
  return null;
}

std::shared_ptr<LayeredNull> NullCache::parent_null(const std::shared_ptr<LayeredNull>& child1,
                                                    const std::shared_ptr<LayeredNull>& child2,
                                                    double c_hat_prev) {
  const auto key = std::make_tuple(child1.get(), child2.get(),
                                   std::bit_cast<std::uint64_t>(c_hat_prev));
  auto it = parents_.find(key);
  if (it != parents_.end()) return it->second;
  auto parent = build_layer_null(child1, child2, c_hat_prev);
  parents_.emplace(key, parent);
  return parent;
}

}  // namespace team
