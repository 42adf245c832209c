#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "team/rng.hpp"

namespace team::testing {

BhOracleResult bh_with_floor_oracle(const std::vector<double>& pvalues, double alpha) {
  const std::size_t m = pvalues.size();
  if (m < 2) throw std::invalid_argument("oracle: m >= 2");
  const double a_floor = 1.0 / (static_cast<double>(m) * std::log(static_cast<double>(m)));
  std::vector<std::size_t> order(m);
  for (std::size_t i = 0; i < m; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
  // Ascending walk remembering the best feasible corner.
  std::size_t best_k = 0;
  for (std::size_t k = 1; k <= m; ++k) {
    const double corner = static_cast<double>(k) * alpha / static_cast<double>(m);
    if (corner < a_floor) continue;
    if (pvalues[order[k - 1]] <= corner) best_k = k;
  }
  BhOracleResult result;
  if (best_k > 0) {
    result.c_hat = static_cast<double>(best_k) * alpha / static_cast<double>(m);
    result.sup_found = true;
  } else if (alpha / static_cast<double>(m) >= a_floor) {
    result.c_hat = alpha / static_cast<double>(m);
    result.sup_found = true;
  } else {
    result.c_hat = a_floor;
    result.sup_found = false;
  }
  for (std::size_t i = 0; i < m; ++i)
    if (pvalues[i] <= result.c_hat) result.rejected.push_back(i);
  return result;
}

double grid_threshold_oracle(const std::vector<double>& pvalues, double alpha,
                             std::int64_t grid_points) {
  const std::size_t m = pvalues.size();
  const double a_floor = 1.0 / (static_cast<double>(m) * std::log(static_cast<double>(m)));
  std::vector<double> sorted(pvalues);
  std::sort(sorted.begin(), sorted.end());
  if (a_floor > alpha) {
    // Empty feasible range; the fallback is the floor itself.
    return a_floor;
  }
  // Candidate scan over [a_floor, alpha]: the feasibility bound is a step
  // function whose sup sits at a corner k*alpha/m, so the candidate set is
  // every corner in range (largest ones first if the budget binds) merged
  // with a uniform fill, grid_points candidates in total. Each candidate is
  // tested against the raw definition by counting.
  std::size_t k_start = 1;
  while (k_start <= m &&
         static_cast<double>(k_start) * alpha / static_cast<double>(m) < a_floor)
    ++k_start;
  const std::int64_t corner_budget = grid_points / 2;
  if (static_cast<std::int64_t>(m - k_start + 1) > corner_budget)
    k_start = m - static_cast<std::size_t>(corner_budget) + 1;
  const std::int64_t n_corners = static_cast<std::int64_t>(m - k_start + 1);
  const std::int64_t n_uniform = grid_points - n_corners;

  double best_c = -1.0;
  std::size_t count_ptr = 0;  // p-values <= current candidate
  std::size_t ki = k_start;
  std::int64_t ui = 0;
  auto corner_value = [&](std::size_t k) {
    return static_cast<double>(k) * alpha / static_cast<double>(m);
  };
  auto uniform_value = [&](std::int64_t g) {
    return a_floor + (alpha - a_floor) * static_cast<double>(g) /
                         static_cast<double>(n_uniform - 1);
  };
  while (ki <= m || ui < n_uniform) {
    double c;
    if (ki > m) {
      c = uniform_value(ui++);
    } else if (ui >= n_uniform || corner_value(ki) <= uniform_value(ui)) {
      c = corner_value(ki++);
    } else {
      c = uniform_value(ui++);
    }
    while (count_ptr < m && sorted[count_ptr] <= c) ++count_ptr;
    const double bound = static_cast<double>(std::max<std::size_t>(count_ptr, 1)) * alpha /
                         static_cast<double>(m);
    if (c <= bound && c >= best_c) best_c = c;
  }
  return best_c < 0.0 ? a_floor : best_c;
}

std::vector<double> binomial_pmf_oracle(std::int64_t n, double theta) {
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
  double sum = 0.0;
  for (double p : pmf) sum += p;
  for (double& p : pmf) p /= sum;
  return pmf;
}

namespace {

std::vector<double> suffix_ccdf(const std::vector<double>& pmf) {
  std::vector<double> ccdf(pmf.size(), 0.0);
  for (int k = static_cast<int>(pmf.size()) - 2; k >= 0; --k)
    ccdf[static_cast<std::size_t>(k)] = std::min(
        ccdf[static_cast<std::size_t>(k) + 1] + pmf[static_cast<std::size_t>(k) + 1], 1.0);
  return ccdf;
}

int survival_threshold(const std::vector<double>& ccdf, double c_hat) {
  int b = -1;
  for (std::size_t k = 0; k < ccdf.size(); ++k)
    if (ccdf[k] > c_hat) b = static_cast<int>(k);
  return b;
}

std::vector<double> truncated(const std::vector<double>& pmf, int b) {
  double mass = 0.0;
  for (int k = 0; k <= b; ++k) mass += pmf[static_cast<std::size_t>(k)];
  std::vector<double> out(static_cast<std::size_t>(b) + 1);
  for (int k = 0; k <= b; ++k) out[static_cast<std::size_t>(k)] = pmf[static_cast<std::size_t>(k)] / mass;
  return out;
}

}  // namespace

McConditionalResult mc_conditional_oracle(int n1, int n2, double theta0, double c_hat_prev,
                                          std::int64_t n_accept,
                                          const std::vector<int>& eval_points,
                                          std::uint64_t seed) {
  const auto pmf1 = binomial_pmf_oracle(n1, theta0);
  const auto pmf2 = binomial_pmf_oracle(n2, theta0);
  const auto ccdf1 = suffix_ccdf(pmf1);
  const auto ccdf2 = suffix_ccdf(pmf2);
  // Inverse-CDF sampling tables.
  auto cumulative = [](const std::vector<double>& pmf) {
    std::vector<double> cdf(pmf.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < pmf.size(); ++k) {
      acc += pmf[k];
      cdf[k] = acc;
    }
    cdf.back() = 1.0;
    return cdf;
  };
  const auto cdf1 = cumulative(pmf1);
  const auto cdf2 = cumulative(pmf2);
  auto draw = [](const std::vector<double>& cdf, double u) {
    return static_cast<int>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
  };

  Philox gen(seed, 0xC0ED);
  std::vector<std::int64_t> tally(static_cast<std::size_t>(n1 + n2) + 1, 0);
  std::int64_t accepted = 0;
  const std::int64_t max_draws = 20 * n_accept;
  for (std::int64_t i = 0; i < max_draws && accepted < n_accept; ++i) {
    const int z1 = draw(cdf1, gen.next_double());
    const int z2 = draw(cdf2, gen.next_double());
    if (ccdf1[static_cast<std::size_t>(z1)] > c_hat_prev &&
        ccdf2[static_cast<std::size_t>(z2)] > c_hat_prev) {
      ++tally[static_cast<std::size_t>(z1 + z2)];
      ++accepted;
    }
  }
  McConditionalResult result;
  result.accepted = accepted;
  std::vector<std::int64_t> suffix(tally.size() + 1, 0);
  for (std::size_t k = tally.size(); k-- > 0;) suffix[k] = suffix[k + 1] + tally[k];
  for (int c : eval_points) {
    const std::int64_t above =
        (c + 1 < static_cast<int>(suffix.size())) ? suffix[static_cast<std::size_t>(c) + 1] : 0;
    const double p = static_cast<double>(above) / static_cast<double>(accepted);
    result.estimate.push_back(p);
    result.se.push_back(std::sqrt(p * (1.0 - p) / static_cast<double>(accepted)));
  }
  return result;
}

std::vector<double> enumerate_conditional_ccdf(int n1, int n2, double theta0,
                                               double c_hat_prev) {
  const auto pmf1 = binomial_pmf_oracle(n1, theta0);
  const auto pmf2 = binomial_pmf_oracle(n2, theta0);
  const int b1 = survival_threshold(suffix_ccdf(pmf1), c_hat_prev);
  const int b2 = survival_threshold(suffix_ccdf(pmf2), c_hat_prev);
  if (b1 < 0 || b2 < 0) throw std::invalid_argument("oracle: degenerate conditioning");
  const auto q1 = truncated(pmf1, b1);
  const auto q2 = truncated(pmf2, b2);
  // Joint tail over the truncated support, summed per total in ascending
  // child order.
  std::vector<double> joint(static_cast<std::size_t>(b1 + b2) + 1, 0.0);
  for (int k = 0; k <= b1 + b2; ++k) {
    const int j_lo = std::max(0, k - b2);
    const int j_hi = std::min(k, b1);
    double sum = 0.0;
    for (int j = j_lo; j <= j_hi; ++j)
      sum += q1[static_cast<std::size_t>(j)] * q2[static_cast<std::size_t>(k - j)];
    joint[static_cast<std::size_t>(k)] = sum;
  }
  return suffix_ccdf(joint);
}

}  // namespace team::testing
