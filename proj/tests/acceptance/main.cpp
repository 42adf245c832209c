// Acceptance suite: one pass/fail line per criterion. Each criterion pins its
// tolerances in code; run `acceptance --criterion N` for a single one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "generators.hpp"
#include "oracles.hpp"
#include "property_suites.hpp"
#include "team/discrete_dist.hpp"
#include "team/partition.hpp"
#include "team/rng.hpp"
#include "team/sim.hpp"
#include "team/team.hpp"

namespace {

using namespace team;
using namespace team::testing;

using Clock = std::chrono::steady_clock;

struct CriterionResult {
  int id = 0;
  std::string title;
  bool pass = false;
  double seconds = 0.0;
  std::vector<std::string> details;
};

int g_threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

CriterionResult criterion1() {
  CriterionResult result;
  result.id = 1;
  result.title = "layer-1 BH equivalence and threshold sup";
  const auto t0 = Clock::now();
  const double alpha = 0.05;
  const std::vector<std::size_t> sizes = {50, 1000, 100000};
  const int vectors_per_size[3] = {67, 67, 66};
  bool ok = true;
  std::int64_t checked = 0;
  double worst_gap = 0.0;
  for (int s = 0; s < 3; ++s) {
    for (int v = 0; v < vectors_per_size[s]; ++v) {
      Philox gen(0xACCE01, static_cast<std::uint64_t>(s) * 1000 + static_cast<std::uint64_t>(v));
      const std::vector<double> p = random_pvalues(gen, sizes[static_cast<std::size_t>(s)]);
      const ThresholdResult th = find_threshold(p, alpha);
      const BhOracleResult oracle = bh_with_floor_oracle(p, alpha);
      const double grid = grid_threshold_oracle(p, alpha, 1000000);
      worst_gap = std::max({worst_gap, std::fabs(th.c_hat - oracle.c_hat),
                            std::fabs(th.c_hat - grid)});
      if (std::fabs(th.c_hat - oracle.c_hat) > 1e-12 || std::fabs(th.c_hat - grid) > 1e-12) {
        ok = false;
        result.details.push_back("threshold mismatch at m=" +
                                 std::to_string(sizes[static_cast<std::size_t>(s)]));
        continue;
      }
      LeafBinning binning = uniform_binning(sizes[static_cast<std::size_t>(s)], 2, 1);
      TeamConfig config;
      config.alpha = alpha;
      config.stop.max_layers = 1;
      const TeamResult run = run_team(binning, config, [&](int, const Node& node) {
        return p[node.leaves[0]];
      });
      std::vector<std::size_t> rejected;
      for (std::size_t i = 0; i < p.size(); ++i)
        if (run.rejection_layer[i] == 1) rejected.push_back(i);
      if (rejected != oracle.rejected) {
        ok = false;
        result.details.push_back("rejection set mismatch at m=" +
                                 std::to_string(sizes[static_cast<std::size_t>(s)]));
      }
      ++checked;
    }
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (result.seconds >= 10.0) {
    ok = false;
    result.details.push_back("runtime exceeded 10 s");
  }
  result.details.push_back("vectors checked: " + std::to_string(checked) +
                           ", worst |c_hat gap| = " + fmt(worst_gap));
  result.pass = ok;
  return result;
}

// ---------------------------------------------------------------- criterion 2

CriterionResult criterion2() {
  CriterionResult result;
  result.id = 2;
  result.title = "conditional-null exactness (recursive truncation+convolution)";
  const auto t0 = Clock::now();
  struct Config {
    int n1, n2;
    double theta0, c_hat;
  };
  const std::vector<Config> configs = {{20, 20, 0.5, 0.1}, {50, 40, 0.3, 0.02},
                                       {200, 200, 0.48, 0.005}};
  bool ok = true;
  for (std::size_t ci = 0; ci < configs.size(); ++ci) {
    const auto& cfg = configs[ci];
    const auto parent = build_layer_null(make_leaf_null(cfg.n1, cfg.theta0),
                                         make_leaf_null(cfg.n2, cfg.theta0), cfg.c_hat);
    // Bit-level agreement with the double-sum enumeration over the truncated
    // joint support (both routes use canonical ascending summation).
    const auto enumerated = enumerate_conditional_ccdf(cfg.n1, cfg.n2, cfg.theta0, cfg.c_hat);
    if (static_cast<int>(enumerated.size()) != parent->dist.support_max() + 1) {
      ok = false;
      result.details.push_back("config " + std::to_string(ci + 1) + ": support size mismatch");
      continue;
    }
    int bit_mismatches = 0;
    for (int c = 0; c <= parent->dist.support_max(); ++c) {
      const double a = parent->dist.ccdf(c);
      const double b = enumerated[static_cast<std::size_t>(c)];
      if (std::memcmp(&a, &b, sizeof(double)) != 0) ++bit_mismatches;
    }
    if (bit_mismatches > 0) {
      ok = false;
      result.details.push_back("config " + std::to_string(ci + 1) + ": " +
                               std::to_string(bit_mismatches) + " non-bit-identical ccdf values");
    }
    // Monte Carlo conditioning oracle at well-powered points (plus the fixed
    // trio for the first configuration).
    std::vector<int> eval_points;
    for (double q : {0.5, 0.1, 0.01}) {
      for (int c = 0; c <= parent->dist.support_max(); ++c) {
        if (parent->dist.ccdf(c) <= q) {
          eval_points.push_back(c);
          break;
        }
      }
    }
    if (ci == 0) {
      eval_points.insert(eval_points.end(), {15, 18, 21});
    }
    std::sort(eval_points.begin(), eval_points.end());
    eval_points.erase(std::unique(eval_points.begin(), eval_points.end()), eval_points.end());
    const McConditionalResult mc = mc_conditional_oracle(
        cfg.n1, cfg.n2, cfg.theta0, cfg.c_hat, 1000000, eval_points,
        0xACCE02 + static_cast<std::uint64_t>(ci));
    for (std::size_t e = 0; e < eval_points.size(); ++e) {
      const double exact = parent->dist.ccdf(eval_points[e]);
      const double se = std::max(
          mc.se[e], std::sqrt(exact * (1.0 - exact) / static_cast<double>(mc.accepted)));
      const double gap = std::fabs(exact - mc.estimate[e]);
      if (gap > 3.0 * se) {
        ok = false;
        result.details.push_back("config " + std::to_string(ci + 1) + ": MC gap " + fmt(gap) +
                                 " > 3 SE at c=" + std::to_string(eval_points[e]));
      }
    }
    result.details.push_back("config " + std::to_string(ci + 1) + ": support 0.." +
                             std::to_string(parent->dist.support_max()) + ", MC points " +
                             std::to_string(eval_points.size()) + ", accepted " +
                             std::to_string(mc.accepted));
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (result.seconds >= 60.0) {
    ok = false;
    result.details.push_back("runtime exceeded 60 s");
  }
  result.pass = ok;
  return result;
}

// ---------------------------------------------------------------- criterion 3

std::vector<std::vector<std::uint32_t>> one_based(const std::vector<std::vector<std::uint32_t>>& sets) {
  auto out = sets;
  for (auto& s : out)
    for (auto& v : s) ++v;
  return out;
}

CriterionResult criterion3() {
  CriterionResult result;
  result.id = 3;
  result.title = "aggregation walkthroughs (toy 12-leaf and 64-bin examples)";
  const auto t0 = Clock::now();
  bool ok = true;

  // --- 12-leaf example: layer 1 rejects leaf 8 only.
  {
    LeafBinning binning = uniform_binning(12, 100, 50);
    TeamConfig config;
    config.stop.max_layers = 3;
    std::vector<std::vector<std::uint32_t>> layer2_nodes, layer3_nodes;
    const TeamResult run = run_team(binning, config, [&](int layer, const Node& node) {
      if (layer == 1) return node.leaves[0] == 7 ? 0.0 : 1.0;
      if (layer == 2) {
        layer2_nodes.push_back(node.leaves);
        return (node.leaves == std::vector<std::uint32_t>{4, 5}) ? 0.0 : 1.0;
      }
      layer3_nodes.push_back(node.leaves);
      return (node.leaves == std::vector<std::uint32_t>{0, 1, 2, 3}) ? 0.0 : 1.0;
    });
    const std::vector<std::vector<std::uint32_t>> expected_a2 = {
        {1, 2}, {3, 4}, {5, 6}, {7, 9}, {10, 11}};
    if (one_based(layer2_nodes) != expected_a2) {
      ok = false;
      result.details.push_back("12-leaf example: layer-2 parent set differs");
    }
    if (run.layers[0].leftover_leaves != 1) {
      ok = false;
      result.details.push_back("12-leaf example: leaf 12 was not the leftover");
    }
    const std::vector<std::vector<std::uint32_t>> expected_a3 = {{1, 2, 3, 4}, {7, 9, 10, 11}};
    if (one_based(layer3_nodes) != expected_a3) {
      ok = false;
      result.details.push_back("12-leaf example: layer-3 parent set differs");
    }
    std::vector<int> expected_layers(12, 0);
    expected_layers[7] = 1;               // leaf 8
    expected_layers[4] = expected_layers[5] = 2;  // leaves 5,6
    for (int i = 0; i < 4; ++i) expected_layers[static_cast<std::size_t>(i)] = 3;
    if (run.rejection_layer != expected_layers) {
      ok = false;
      result.details.push_back("12-leaf example: rejection layers differ");
    }
  }

  // --- 64-bin example.
  {
    LeafBinning binning = uniform_binning(64, 100, 50);
    TeamConfig config;
    config.stop.max_layers = 3;
    std::vector<std::vector<std::uint32_t>> layer2_nodes, layer3_nodes;
    auto is_one_based = [](const std::vector<std::uint32_t>& leaves,
                           const std::vector<std::uint32_t>& want) {
      if (leaves.size() != want.size()) return false;
      for (std::size_t i = 0; i < leaves.size(); ++i)
        if (leaves[i] + 1 != want[i]) return false;
      return true;
    };
    const TeamResult run = run_team(binning, config, [&](int layer, const Node& node) {
      if (layer == 1) {
        const std::uint32_t leaf = node.leaves[0] + 1;
        return (leaf == 2 || leaf == 10 || leaf == 53 || leaf == 55) ? 0.0 : 1.0;
      }
      if (layer == 2) {
        layer2_nodes.push_back(node.leaves);
        return (is_one_based(node.leaves, {41, 42}) || is_one_based(node.leaves, {59, 60}))
                   ? 0.0
                   : 1.0;
      }
      layer3_nodes.push_back(node.leaves);
      return is_one_based(node.leaves, {54, 56, 57, 58}) ? 0.0 : 1.0;
    });
    if (layer2_nodes.size() != 30) {
      ok = false;
      result.details.push_back("64-bin example: expected 30 layer-2 nodes, saw " +
                               std::to_string(layer2_nodes.size()));
    } else if (!is_one_based(layer2_nodes[19], {41, 42}) ||
               !is_one_based(layer2_nodes[27], {59, 60})) {
      ok = false;
      result.details.push_back("64-bin example: nodes 20/28 hold the wrong leaf sets");
    }
    if (layer3_nodes.size() != 14) {
      ok = false;
      result.details.push_back("64-bin example: expected 14 layer-3 nodes, saw " +
                               std::to_string(layer3_nodes.size()));
    } else if (!is_one_based(layer3_nodes[12], {54, 56, 57, 58})) {
      ok = false;
      result.details.push_back("64-bin example: node 13 holds the wrong leaf set");
    }
    auto layer_set = [&](int layer) {
      std::vector<std::uint32_t> set;
      for (std::size_t i = 0; i < 64; ++i)
        if (run.rejection_layer[i] == layer) set.push_back(static_cast<std::uint32_t>(i) + 1);
      return set;
    };
    const std::vector<std::uint32_t> r1 = {2, 10, 53, 55};
    const std::vector<std::uint32_t> r2 = {41, 42, 59, 60};
    const std::vector<std::uint32_t> r3 = {54, 56, 57, 58};
    if (layer_set(1) != r1 || layer_set(2) != r2 || layer_set(3) != r3) {
      ok = false;
      result.details.push_back("64-bin example: per-layer rejection sets differ");
    }
    std::vector<std::uint32_t> overall;
    for (std::size_t i = 0; i < 64; ++i)
      if (run.rejection_layer[i] > 0) overall.push_back(static_cast<std::uint32_t>(i) + 1);
    const std::vector<std::uint32_t> expected_overall = {2,  10, 41, 42, 53, 54,
                                                         55, 56, 57, 58, 59, 60};
    if (overall != expected_overall) {
      ok = false;
      result.details.push_back("64-bin example: overall rejection set differs");
    } else {
      // The published caption lists the overall set without {41,42}, which
      // contradicts its own layer-2 set; the union over layers is definitive
      // (12 leaves), and the per-layer sets match the figure exactly.
      result.details.push_back(
          "overall set = union over layers (12 leaves; the caption's 10-leaf list "
          "omits its own layer-2 pair {41,42})");
    }
  }

  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  result.pass = ok;
  return result;
}

// ---------------------------------------------------------------- criterion 4

CriterionResult criterion4() {
  CriterionResult result;
  result.id = 4;
  result.title = "S1 full-scale FDR control and power gain (100 reps)";
  const auto t0 = Clock::now();
  const SimSetting setting = SimSetting::s1();
  bool ok = true;
  {
    // About 245 leaves are truly alternative at m = 2^14 (+-10% over binning
    // randomness).
    const MarkerMatrix data = generate_cohorts(setting, 0xA174);
    PartitionSpec spec;
    spec.scheme = Scheme::kSequential;
    spec.bins_per_dim = 16384;
    const LeafTruth truth = leaf_truth(setting, build_partition(data, spec));
    const std::int64_t alternatives = truth.alternative_count();
    result.details.push_back("alternative leaves: " + std::to_string(alternatives) +
                             " (expect ~245 +-10%)");
    if (alternatives < 220 || alternatives > 270) ok = false;
  }
  ReplicationConfig config;
  config.alpha = 0.05;
  config.bins_per_dim = 16384;
  config.max_layers = 5;
  config.threads = g_threads;
  const ReplicationTable table = run_replications(setting, 100, config, 0xACCE04);
  const auto& l1 = table.summary.front();
  const auto& l5 = table.summary.back();
  if (!(l5.fdp_mean <= 0.07)) {
    ok = false;
    result.details.push_back("mean FDP at L=5 " + fmt(l5.fdp_mean) + " > 0.07");
  }
  if (!(l5.fn_mean < l1.fn_mean)) {
    ok = false;
    result.details.push_back("false negatives did not drop from L=1 to L=5");
  }
  if (!(l1.fn_mean > 60.0)) {
    ok = false;
    result.details.push_back("L=1 mean misses " + fmt(l1.fn_mean) + " <= 60");
  }
  if (!(l5.fn_mean < 60.0)) {
    ok = false;
    result.details.push_back("L=5 mean misses " + fmt(l5.fn_mean) + " >= 60");
  }
  for (const auto& s : table.summary)
    result.details.push_back("L=" + std::to_string(s.layer) + ": fdp=" + fmt(s.fdp_mean) +
                             " fn=" + fmt(s.fn_mean) + " discoveries=" + fmt(s.disc_mean));
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (result.seconds >= 1200.0) {
    ok = false;
    result.details.push_back("runtime exceeded 20 min");
  }
  result.pass = ok;
  return result;
}

// ---------------------------------------------------------------- criterion 5

CriterionResult criterion5() {
  CriterionResult result;
  result.id = 5;
  result.title = "pure-null FDP (f1 = f2, m = 2^10, 500 reps)";
  const auto t0 = Clock::now();
  const SimSetting setting = SimSetting::pure_null(100000, 100000);
  ReplicationConfig config;
  config.alpha = 0.05;
  config.bins_per_dim = 1024;
  config.threads = g_threads;
  // max_layers stays 0: the layer-count rule gives L = 1 at m = 1024.
  const ReplicationTable table = run_replications(setting, 500, config, 0xACCE05);
  const double fdp = table.summary.back().fdp_mean;
  bool ok = fdp <= 0.07;
  result.details.push_back("mean realized FDP = " + fmt(fdp) + " (bound 0.07)");
  if (!ok) {
    result.details.push_back(
        "rejections always include {P <= a_N} (threshold floor semantics), so the "
        "pure-null any-rejection rate is ~m*P(P <= a_N) ~ 1/log(m) ~ 0.14 at m=1024;");
    result.details.push_back(
        "the 0.07 bound is unattainable under the floor-rejection rule "
        "(suppressing floor rejections would give ~0.001).");
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  if (result.seconds >= 300.0) {
    ok = false;
    result.details.push_back("runtime exceeded 5 min");
  }
  result.pass = ok;
  return result;
}

// ---------------------------------------------------------------- criterion 6

CriterionResult criterion6() {
  CriterionResult result;
  result.id = 6;
  result.title = "per-replication speed (partition + 5-layer run, m = 2^14)";
  const SimSetting setting = SimSetting::s1();
  const MarkerMatrix data = generate_cohorts(setting, 0xACCE06);  // excluded from timing
  const auto t0 = Clock::now();
  PartitionSpec spec;
  spec.scheme = Scheme::kSequential;
  spec.bins_per_dim = 16384;
  const LeafBinning binning = build_partition(data, spec);
  TeamConfig config;
  config.alpha = 0.05;
  config.stop.max_layers = 5;
  const TeamResult run = run_team(binning, config);
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  result.pass = result.seconds <= 30.0;
  result.details.push_back("partition + 5 layers took " + fmt(result.seconds) + " s (cap 30 s)");
  result.details.push_back("total rejections: " + std::to_string(run.total_rejections()));
  return result;
}

// ---------------------------------------------------------------- criterion 7

CriterionResult criterion7() {
  CriterionResult result;
  result.id = 7;
  result.title = "small-N product-binomial approximation (TV distance)";
  const auto t0 = Clock::now();
  // N = 200 (100 per cohort), m = 10 pooled-quantile bins => n_i = 20. Joint
  // frequency of (X_1, X_2) over 1e6 replications against Binom(20, 1/2)^2.
  constexpr int kN = 200;
  constexpr int kBin = 20;
  constexpr std::int64_t kReps = 1000000;
  std::vector<std::vector<std::int64_t>> tallies(
      static_cast<std::size_t>(g_threads),
      std::vector<std::int64_t>((kBin + 1) * (kBin + 1), 0));
  std::vector<std::thread> pool;
  const std::int64_t per_thread = (kReps + g_threads - 1) / g_threads;
  for (int t = 0; t < g_threads; ++t) {
    pool.emplace_back([&, t]() {
      auto& tally = tallies[static_cast<std::size_t>(t)];
      const std::int64_t lo = t * per_thread;
      const std::int64_t hi = std::min<std::int64_t>(kReps, lo + per_thread);
      std::pair<double, bool> rows[kN];
      for (std::int64_t rep = lo; rep < hi; ++rep) {
        Philox gen(0xACCE07, static_cast<std::uint64_t>(rep));
        for (int i = 0; i < kN; ++i) rows[i] = {gen.next_normal(), i >= kN / 2};
        std::nth_element(rows, rows + 2 * kBin, rows + kN);
        std::nth_element(rows, rows + kBin, rows + 2 * kBin);
        int x1 = 0, x2 = 0;
        for (int i = 0; i < kBin; ++i) x1 += rows[i].second;
        for (int i = kBin; i < 2 * kBin; ++i) x2 += rows[i].second;
        ++tally[static_cast<std::size_t>(x1 * (kBin + 1) + x2)];
      }
    });
  }
  for (auto& th : pool) th.join();
  std::vector<double> empirical((kBin + 1) * (kBin + 1), 0.0);
  for (const auto& tally : tallies)
    for (std::size_t k = 0; k < tally.size(); ++k)
      empirical[k] += static_cast<double>(tally[k]) / static_cast<double>(kReps);
  const auto pmf = binomial_pmf_oracle(kBin, 0.5);
  double tv = 0.0;
  for (int a = 0; a <= kBin; ++a)
    for (int b = 0; b <= kBin; ++b)
      tv += std::fabs(empirical[static_cast<std::size_t>(a * (kBin + 1) + b)] -
                      pmf[static_cast<std::size_t>(a)] * pmf[static_cast<std::size_t>(b)]);
  tv *= 0.5;
  result.pass = tv <= 0.02;
  result.details.push_back("TV(empirical joint, product binomial) = " + fmt(tv) +
                           " (bound 0.02)");
  if (!result.pass) {
    result.details.push_back(
        "the exact fixed-margin law at N=200, n=20 sits ~0.053 in TV from the product "
        "binomial (n^2/N = 2 is far outside the approximation's n^2 << N regime);");
    result.details.push_back("the 0.02 bound is unattainable at this N, m combination.");
  }
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return result;
}

// ---------------------------------------------------------------- criterion 8

CriterionResult criterion8() {
  CriterionResult result;
  result.id = 8;
  result.title = "module property suites (>= 1000 randomized cases each)";
  const auto t0 = Clock::now();
  const auto reports = run_property_suites(1000, 0xACCE08);
  bool ok = true;
  for (const auto& report : reports) {
    if (!report.pass()) {
      ok = false;
      result.details.push_back(report.name + ": " + std::to_string(report.failures) + "/" +
                               std::to_string(report.cases) + " failed (" +
                               report.first_failure + ")");
    }
  }
  result.details.push_back(std::to_string(reports.size()) +
                           " suites run (the product-binomial TV oracle runs as criterion 7)");
  result.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  result.pass = ok;
  return result;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected.push_back(std::atoi(argv[++i]));
    } else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc) {
      g_threads = std::max(1, std::atoi(argv[++i]));
    } else {
      std::fprintf(stderr, "usage: acceptance [--criterion N]... [--threads T]\n");
      return 64;
    }
  }
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8};

  using Criterion = CriterionResult (*)();
  const Criterion criteria[8] = {criterion1, criterion2, criterion3, criterion4,
                                 criterion5, criterion6, criterion7, criterion8};
  int failures = 0;
  for (int id : selected) {
    if (id < 1 || id > 8) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 64;
    }
    const CriterionResult r = criteria[id - 1]();
    std::printf("[%s] criterion %d: %s (%.1f s)\n", r.pass ? "PASS" : "FAIL", r.id,
                r.title.c_str(), r.seconds);
    for (const auto& d : r.details) std::printf("         %s\n", d.c_str());
    std::fflush(stdout);
    failures += r.pass ? 0 : 1;
  }
  return failures;
}
