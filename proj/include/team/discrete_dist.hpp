#ifndef TEAM_DISCRETE_DIST_HPP
#define TEAM_DISCRETE_DIST_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <tuple>
#include <vector>

namespace team {

// Distribution of a nonnegative count with support 0..support_max.
// Probabilities live in linear space; the CCDF is a suffix-sum table built
// once at construction, accumulated from the small tail end.
class DiscreteDist {
 public:
  explicit DiscreteDist(std::vector<double> pmf);

  // Binom(n, theta). The PMF is seeded through log-gamma for stability.
  static DiscreteDist binomial(std::int64_t n, double theta);

  int support_max() const { return static_cast<int>(pmf_.size()) - 1; }
  double pmf(int k) const;
  // P(Z > x). Returns 1 for x < 0 and 0 for x >= support_max.
  double ccdf(int x) const;
  // P(Z <= x).
  double cdf(int x) const { return 1.0 - ccdf(x); }
  const std::vector<double>& probabilities() const { return pmf_; }

  friend bool operator==(const DiscreteDist& a, const DiscreteDist& b) {
    return a.pmf_ == b.pmf_;
  }

 private:
  std::vector<double> pmf_;
  std::vector<double> ccdf_;  // ccdf_[k] = P(Z > k)
};

// b_hat = max{z in support : ccdf(z) > c_hat}, or -1 when even ccdf(0) <= c_hat.
// A count survives testing at threshold c_hat iff it is <= b_hat.
int threshold_count(const DiscreteDist& dist, double c_hat);

// Condition on Z <= b_hat: support becomes 0..b_hat, masses rescaled by
// 1/P(Z <= b_hat). b_hat beyond the support is the identity.
DiscreteDist truncate_renormalize(const DiscreteDist& dist, int b_hat);

// Distribution of the sum of two independent counts (direct O(|a||b|) sum).
DiscreteDist convolve(const DiscreteDist& a, const DiscreteDist& b);

// Thrown when a parent null cannot be formed because a child's survival
// event has probability zero (b_hat = -1).
class DegenerateNullError : public std::runtime_error {
 public:
  explicit DegenerateNullError(const std::string& msg) : std::runtime_error(msg) {}
};

// Null distribution of a node count given that every ancestor survived its
// layer. Layer 1 is plain Binom(n_i, theta0); layer l >= 2 is the convolution
// of the two children, each truncated at its own survival threshold for the
// previous layer's c_hat and renormalized.
struct LayeredNull {
  int layer = 1;
  DiscreteDist dist;
  // Survival count threshold at this layer's c_hat; -1 until the layer's
  // threshold is known.
  int b_hat = -1;
  std::shared_ptr<const LayeredNull> child1;
  std::shared_ptr<const LayeredNull> child2;

  explicit LayeredNull(DiscreteDist d) : dist(std::move(d)) {}
};

std::shared_ptr<LayeredNull> make_leaf_null(std::int64_t n, double theta0);

std::shared_ptr<LayeredNull> build_layer_null(const std::shared_ptr<LayeredNull>& child1,
                                              const std::shared_ptr<LayeredNull>& child2,
                                              double c_hat_prev);

// Memoizing factory for the nulls of one TEAM run. Leaf nulls are interned by
// n; parent nulls by the identities of their (already interned) children plus
// the exact bits of c_hat_prev. Nodes with identical count structure and
// testing history therefore share one distribution object. Not thread-safe;
// the layer loop builds nulls in a sequential pass.
class NullCache {
 public:
  explicit NullCache(double theta0);

  std::shared_ptr<LayeredNull> leaf_null(std::int64_t n);
  std::shared_ptr<LayeredNull> parent_null(const std::shared_ptr<LayeredNull>& child1,
                                           const std::shared_ptr<LayeredNull>& child2,
                                           double c_hat_prev);

  double theta0() const { return theta0_; }

 private:
  double theta0_;
  std::map<std::int64_t, std::shared_ptr<LayeredNull>> leaves_;
  std::map<std::tuple<const LayeredNull*, const LayeredNull*, std::uint64_t>,
           std::shared_ptr<LayeredNull>>
      parents_;
};

}  // namespace team

#endif  // TEAM_DISCRETE_DIST_HPP
