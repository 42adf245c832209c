#ifndef TEAM_SIM_HPP
#define TEAM_SIM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "team/matrix.hpp"
#include "team/partition.hpp"
#include "team/team.hpp"

namespace team {

// One Gaussian mixture component in 1 or 2 dimensions. Unused entries of
// mean/cov are ignored in 1D.
struct GaussComponent {
  double weight = 1.0;
  double mean[2] = {0.0, 0.0};
  double cov[2][2] = {{1.0, 0.0}, {0.0, 1.0}};
};

struct Rect {
  double xlo = 0.0, xhi = 0.0, ylo = 0.0, yhi = 0.0;
  double area() const { return (xhi - xlo) * (yhi - ylo); }
};

// Generative spec for one experiment. Cohort 2 draws (n2 - extra_count) rows
// from its mixture plus extra_count rows uniform over the rectangles (chosen
// with area-proportional probability).
struct SimSetting {
  std::string name = "custom";
  int dim = 1;
  std::int64_t n1 = 0;
  std::int64_t n2 = 0;  // total cohort-2 rows, extras included
  std::vector<GaussComponent> cohort1;
  std::vector<GaussComponent> cohort2;
  std::vector<Rect> extra_rects;
  std::int64_t extra_count = 0;

  void validate() const;

  static SimSetting s1();
  static SimSetting s2();
  static SimSetting s3();
  static SimSetting s4();
  // f1 = f2 = N(0,1): every leaf null.
  static SimSetting pure_null(std::int64_t n1, std::int64_t n2);
  static SimSetting by_name(const std::string& name);

  int default_bins_per_dim() const;
  int default_max_layers(std::int64_t m_leaves) const;
};

// Layer-count sizing rule: the largest L with m / 2^(L-1) >= 1000 idealized
// halving, i.e. 1000 <= m^(L) < 2000 when m is large (L = 1 below that).
int default_layer_count(std::int64_t m_leaves);

// Deterministic generator: Philox streams keyed by (seed, stream) with
// stream = rep*8 + {1: cohort-1 rows, 2: cohort-2 mixture rows, 3: cohort-2
// extra rows}. generate_cohorts is rep 0.
MarkerMatrix generate_cohorts(const SimSetting& setting, std::uint64_t seed);
MarkerMatrix generate_cohorts_rep(const SimSetting& setting, std::uint64_t seed,
                                  std::uint64_t rep);

struct LeafTruth {
  std::vector<double> theta;      // per ordinal leaf, Gaussian mass integrated exactly
  std::vector<bool> alternative;  // theta > theta0
  double theta0 = 0.0;
  std::int64_t alternative_count() const;
};

// Exact per-leaf cohort-proportion ground truth: 1D Gaussian mass via CDF
// differences, 2D via adaptive Gauss-Legendre quadrature (relative tolerance
// 1e-8), uniform patches via exact rectangle intersection. Boundary leaves
// already extend to +/-infinity.
LeafTruth leaf_truth(const SimSetting& setting, const LeafBinning& binning);

struct LayerMetrics {
  int layer = 0;
  double fdp = 0.0;
  std::int64_t false_negatives = 0;
  std::int64_t discoveries = 0;
};

struct Metrics {
  double fdp = 0.0;
  std::int64_t false_negatives = 0;
  std::int64_t discoveries = 0;
  std::vector<LayerMetrics> per_layer;  // cumulative, one row per stop layer 1..L
};

// Realized error counts against the truth flags. Per-layer rows truncate the
// run at each layer; rejections are cumulative so discoveries are
// nondecreasing and false negatives nonincreasing in the stop layer.
Metrics compute_metrics(const TeamResult& result, const std::vector<bool>& alternative);

struct ReplicationConfig {
  double alpha = 0.05;
  int bins_per_dim = 0;  // 0 = setting default
  int max_layers = 0;    // 0 = layer-count rule from the leaf total
  StoppingRule extra_stop;  // optional min-rejections / ratio clauses
  int threads = 1;
};

struct ReplicationRow {
  int rep = 0;
  int layer = 0;
  double fdp = 0.0;
  std::int64_t false_negatives = 0;
  std::int64_t discoveries = 0;
  double wall_ms = 0.0;
};

struct ReplicationSummaryRow {
  int layer = 0;
  double fdp_mean = 0.0, fdp_sd = 0.0;
  double fn_mean = 0.0, fn_sd = 0.0;
  double disc_mean = 0.0, disc_sd = 0.0;
  double wall_ms_mean = 0.0;
};

struct ReplicationTable {
  std::vector<ReplicationRow> rows;        // reps x layers, rep-major
  std::vector<ReplicationSummaryRow> summary;  // one row per layer
};

// generate -> partition (sequential) -> run_team -> leaf_truth -> metrics,
// one independent substream per replication, reduced in replication order.
ReplicationTable run_replications(const SimSetting& setting, int reps,
                                  const ReplicationConfig& config, std::uint64_t seed);

void write_replication_rows(const ReplicationTable& table, const std::string& path);
void write_replication_summary(const ReplicationTable& table, const std::string& path);

// Mass of a Gaussian component over an axis-aligned box (1D or 2D per the
// component's dim). Exposed for the truth oracle's tests.
double gaussian_box_mass(const GaussComponent& comp, int dim, double xlo, double xhi,
                         double ylo, double yhi);

}  // namespace team

#endif  // TEAM_SIM_HPP
