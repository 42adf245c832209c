#include "team/sim.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "team/errors.hpp"
#include "team/rng.hpp"

namespace team {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Cholesky2 {
  double l11, l21, l22;
};

Cholesky2 cholesky2(const double cov[2][2]) {
  const double a = cov[0][0], b = cov[0][1], c = cov[1][1];
  if (!(a > 0.0)) throw ConfigError("covariance is not positive definite");
  const double l11 = std::sqrt(a);
  const double l21 = b / l11;
  const double rest = c - l21 * l21;
  if (!(rest > 0.0)) throw ConfigError("covariance is not positive definite");
  return {l11, l21, std::sqrt(rest)};
}

int pick_component(const std::vector<GaussComponent>& comps, double u) {
  double acc = 0.0;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    acc += comps[i].weight;
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(comps.size()) - 1;
}

void draw_mixture_rows(const std::vector<GaussComponent>& comps, int dim, std::int64_t count,
                       Philox& gen, std::vector<double>& out) {
  std::vector<Cholesky2> chol;
  if (dim == 2) {
    chol.reserve(comps.size());
    for (const auto& c : comps) chol.push_back(cholesky2(c.cov));
  }
  for (std::int64_t i = 0; i < count; ++i) {
    const int c = pick_component(comps, gen.next_double());
    const auto& comp = comps[static_cast<std::size_t>(c)];
    if (dim == 1) {
      const double sigma = std::sqrt(comp.cov[0][0]);
      out.push_back(comp.mean[0] + sigma * gen.next_normal());
    } else {
      const double z1 = gen.next_normal();
      const double z2 = gen.next_normal();
      const auto& L = chol[static_cast<std::size_t>(c)];
      out.push_back(comp.mean[0] + L.l11 * z1);
      out.push_back(comp.mean[1] + L.l21 * z1 + L.l22 * z2);
    }
  }
}

}  // namespace

void SimSetting::validate() const {
  if (dim != 1 && dim != 2) throw ConfigError("SimSetting: dim must be 1 or 2");
  if (n1 <= 0 || n2 <= 0) throw ConfigError("SimSetting: cohort sizes must be positive");
  if (extra_count < 0 || extra_count > n2)
    throw ConfigError("SimSetting: extra_count must lie in [0, n2]");
  if (extra_count > 0) {
    if (dim != 2) throw ConfigError("SimSetting: uniform patches need dim = 2");
    if (extra_rects.empty()) throw ConfigError("SimSetting: extra_count without rectangles");
    for (const auto& r : extra_rects)
      if (!(r.xhi > r.xlo) || !(r.yhi > r.ylo))
        throw ConfigError("SimSetting: degenerate rectangle");
  }
  for (const auto* cohort : {&cohort1, &cohort2}) {
    if (cohort->empty()) throw ConfigError("SimSetting: empty mixture");
    double total = 0.0;
    for (const auto& comp : *cohort) {
      if (!(comp.weight >= 0.0)) throw ConfigError("SimSetting: negative mixture weight");
      total += comp.weight;
      if (!(comp.cov[0][0] > 0.0)) throw ConfigError("SimSetting: invalid covariance");
      if (dim == 2) {
        if (comp.cov[0][1] != comp.cov[1][0]) throw ConfigError("SimSetting: asymmetric covariance");
        cholesky2(comp.cov);
      }
    }
    if (std::fabs(total - 1.0) > 1e-9)
      throw ConfigError("SimSetting: mixture weights must sum to 1");
  }
}

namespace {

GaussComponent gauss1(double weight, double mean, double sd) {
  GaussComponent c;
  c.weight = weight;
  c.mean[0] = mean;
  c.cov[0][0] = sd * sd;
  return c;
}

GaussComponent gauss2(double weight, double mx, double my, double sxx, double sxy, double syy) {
  GaussComponent c;
  c.weight = weight;
  c.mean[0] = mx;
  c.mean[1] = my;
  c.cov[0][0] = sxx;
  c.cov[0][1] = sxy;
  c.cov[1][0] = sxy;
  c.cov[1][1] = syy;
  return c;
}

SimSetting one_dim_pair(const std::string& name, double mean1, double sd1, double mean2,
                        double sd2) {
  SimSetting s;
  s.name = name;
  s.dim = 1;
  s.n1 = s.n2 = 1474560;
  s.cohort1 = {gauss1(0.97, 0.4, 0.04), gauss1(0.03, mean1, sd1)};
  s.cohort2 = {gauss1(0.97, 0.4, 0.04), gauss1(0.03, mean2, sd2)};
  return s;
}

}  // namespace

SimSetting SimSetting::s1() { return one_dim_pair("S1", 0.88, 0.01, 0.89, 0.01); }
SimSetting SimSetting::s2() { return one_dim_pair("S2", 0.8, 0.02, 0.8, 0.03); }
SimSetting SimSetting::s3() { return one_dim_pair("S3", 0.8, 0.04, 0.82, 0.05); }

SimSetting SimSetting::s4() {
  SimSetting s;
  s.name = "S4";
  s.dim = 2;
  s.n1 = 500000;
  s.n2 = 500000;  // 495,000 mixture rows + 5,000 uniform extras
  s.cohort1 = {gauss2(0.03, 9.0, 9.0, 2.1, 0.6, 0.9),
               gauss2(0.14, 3.4, 2.9, 0.71, 0.14, 2.12),
               gauss2(0.17, 8.7, -5.8, 2.08, 0.87, 1.39),
               gauss2(0.26, -0.4, 3.5, 2.8, 0.6, 1.2),
               gauss2(0.40, -6.0, -6.5, 1.34, -0.45, 3.13)};
  s.cohort2 = s.cohort1;
  s.extra_rects = {{6.0, 8.5, 9.0, 11.0}, {8.0, 10.0, 7.0, 8.0}, {10.0, 11.0, 9.0, 12.0}};
  s.extra_count = 5000;
  return s;
}

SimSetting SimSetting::pure_null(std::int64_t n1, std::int64_t n2) {
  SimSetting s;
  s.name = "pure_null";
  s.dim = 1;
  s.n1 = n1;
  s.n2 = n2;
  s.cohort1 = {gauss1(1.0, 0.0, 1.0)};
  s.cohort2 = s.cohort1;
  return s;
}

SimSetting SimSetting::by_name(const std::string& name) {
  if (name == "S1" || name == "s1") return s1();
  if (name == "S2" || name == "s2") return s2();
  if (name == "S3" || name == "s3") return s3();
  if (name == "S4" || name == "s4") return s4();
  throw ConfigError("unknown setting '" + name + "' (expected S1..S4)");
}

int SimSetting::default_bins_per_dim() const {
  if (name == "S1" || name == "S2" || name == "S3") return 16384;
  if (name == "S4") return 90;
  return team::default_bins_per_dim(n1 + n2, dim);
}

int default_layer_count(std::int64_t m_leaves) {
  // Idealized halving: pick L so 1000 <= m / 2^(L-1) < 2000 (rejections and
  // leftovers ignored, matching the published sizing arithmetic).
  int layers = 1;
  std::int64_t m = m_leaves;
  while (m >= 2000) {
    m /= 2;
    ++layers;
  }
  return layers;
}

int SimSetting::default_max_layers(std::int64_t m_leaves) const {
  return default_layer_count(m_leaves);
}

MarkerMatrix generate_cohorts_rep(const SimSetting& setting, std::uint64_t seed,
                                  std::uint64_t rep) {
  setting.validate();
  MarkerMatrix out;
  const std::int64_t mixture2 = setting.n2 - setting.extra_count;
  out.values.reserve(static_cast<std::size_t>((setting.n1 + setting.n2) * setting.dim));
  {
    Philox gen(seed, rep * 8 + 1);
    draw_mixture_rows(setting.cohort1, setting.dim, setting.n1, gen, out.values);
  }
  {
    Philox gen(seed, rep * 8 + 2);
    draw_mixture_rows(setting.cohort2, setting.dim, mixture2, gen, out.values);
  }
  if (setting.extra_count > 0) {
    Philox gen(seed, rep * 8 + 3);
    double total_area = 0.0;
    for (const auto& r : setting.extra_rects) total_area += r.area();
    for (std::int64_t i = 0; i < setting.extra_count; ++i) {
      double pick = gen.next_double() * total_area;
      std::size_t idx = 0;
      for (; idx + 1 < setting.extra_rects.size(); ++idx) {
        if (pick < setting.extra_rects[idx].area()) break;
        pick -= setting.extra_rects[idx].area();
      }
      const auto& r = setting.extra_rects[idx];
      out.values.push_back(r.xlo + (r.xhi - r.xlo) * gen.next_double());
      out.values.push_back(r.ylo + (r.yhi - r.ylo) * gen.next_double());
    }
  }
  out.cohort.assign(static_cast<std::size_t>(setting.n1), 1);
  out.cohort.insert(out.cohort.end(), static_cast<std::size_t>(setting.n2), 2);
  out.marker_names = (setting.dim == 1) ? std::vector<std::string>{"y1"}
                                        : std::vector<std::string>{"y1", "y2"};
  return out;
}

MarkerMatrix generate_cohorts(const SimSetting& setting, std::uint64_t seed) {
  return generate_cohorts_rep(setting, seed, 0);
}

namespace {

// 20-point Gauss-Legendre nodes/weights on [-1, 1], computed once by Newton
// iteration on the Legendre polynomial.
struct GaussLegendre {
  static constexpr int kOrder = 20;
  double node[kOrder];
  double weight[kOrder];
  GaussLegendre() {
    const int n = kOrder;
    constexpr double kPi = 3.14159265358979323846;
    for (int i = 0; i < (n + 1) / 2; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double pp = 0.0;
      for (int iter = 0; iter < 100; ++iter) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        pp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / pp;
        x -= dx;
        if (std::fabs(dx) < 1e-15) break;
      }
      node[i] = -x;
      node[n - 1 - i] = x;
      weight[i] = weight[n - 1 - i] = 2.0 / ((1.0 - x * x) * pp * pp);
    }
  }
};

const GaussLegendre& gl20() {
  static const GaussLegendre table;
  return table;
}

double phi_interval(double lo, double hi, double mean, double sd) {
  const double a = (lo == -kInf) ? 0.0 : normal_cdf((lo - mean) / sd);
  const double b = (hi == kInf) ? 1.0 : normal_cdf((hi - mean) / sd);
  return std::max(0.0, b - a);
}

// P(X in [xlo,xhi), Y in [ylo,yhi)) for a correlated bivariate normal:
// integrate over x the exact conditional-in-y mass, with adaptive interval
// doubling until the relative change drops below 1e-8.
double bivariate_mass(const GaussComponent& comp, double xlo, double xhi, double ylo,
                      double yhi) {
  const double mx = comp.mean[0], my = comp.mean[1];
  const double sx = std::sqrt(comp.cov[0][0]);
  const double sy = std::sqrt(comp.cov[1][1]);
  const double rho = comp.cov[0][1] / (sx * sy);
  if (std::fabs(rho) < 1e-15) {
    return phi_interval(xlo, xhi, mx, sx) * phi_interval(ylo, yhi, my, sy);
  }
  // Clamp the x-range to +/-12 sd; the truncated tail is below 1e-30.
  const double a = std::max(xlo, mx - 12.0 * sx);
  const double b = std::min(xhi, mx + 12.0 * sx);
  if (!(b > a)) return 0.0;
  const double cond_sd = sy * std::sqrt(1.0 - rho * rho);
  const auto integrand = [&](double x) {
    const double z = (x - mx) / sx;
    const double fx = std::exp(-0.5 * z * z) / (sx * 2.5066282746310005);
    const double cond_mean = my + rho * sy * z;
    return fx * phi_interval(ylo, yhi, cond_mean, cond_sd);
  };
  const auto& gl = gl20();
  double prev = 0.0;
  for (int pieces = 1; pieces <= 64; pieces *= 2) {
    double total = 0.0;
    const double h = (b - a) / pieces;
    for (int piece = 0; piece < pieces; ++piece) {
      const double mid = a + (piece + 0.5) * h;
      double sum = 0.0;
      for (int i = 0; i < GaussLegendre::kOrder; ++i)
        sum += gl.weight[i] * integrand(mid + 0.5 * h * gl.node[i]);
      total += 0.5 * h * sum;
    }
    if (pieces > 1 && std::fabs(total - prev) <= 1e-8 * std::max(std::fabs(total), 1e-300))
      return total;
    prev = total;
  }
  return prev;
}

double rect_overlap(const Rect& r, double xlo, double xhi, double ylo, double yhi) {
  const double w = std::min(r.xhi, xhi) - std::max(r.xlo, xlo);
  const double h = std::min(r.yhi, yhi) - std::max(r.ylo, ylo);
  if (w <= 0.0 || h <= 0.0) return 0.0;
  return w * h;
}

}  // namespace

double gaussian_box_mass(const GaussComponent& comp, int dim, double xlo, double xhi,
                         double ylo, double yhi) {
  if (dim == 1) return phi_interval(xlo, xhi, comp.mean[0], std::sqrt(comp.cov[0][0]));
  return bivariate_mass(comp, xlo, xhi, ylo, yhi);
}

LeafTruth leaf_truth(const SimSetting& setting, const LeafBinning& binning) {
  setting.validate();
  const auto& part = *binning.partition;
  const std::size_t m = binning.m();
  LeafTruth truth;
  truth.theta.assign(m, 0.0);
  truth.alternative.assign(m, false);
  const double n2_total = static_cast<double>(setting.n2);
  truth.theta0 = n2_total / static_cast<double>(setting.n1 + setting.n2);
  const double mixture2 = static_cast<double>(setting.n2 - setting.extra_count);
  double total_area = 0.0;
  for (const auto& r : setting.extra_rects) total_area += r.area();

  for (std::size_t i = 0; i < m; ++i) {
    const auto& region = part.region(i);
    const double xlo = region.lo[0], xhi = region.hi[0];
    const double ylo = (setting.dim == 2) ? region.lo[1] : 0.0;
    const double yhi = (setting.dim == 2) ? region.hi[1] : 0.0;
    double mass1 = 0.0, mass2 = 0.0;
    for (const auto& comp : setting.cohort1)
      mass1 += comp.weight * gaussian_box_mass(comp, setting.dim, xlo, xhi, ylo, yhi);
    for (const auto& comp : setting.cohort2)
      mass2 += comp.weight * gaussian_box_mass(comp, setting.dim, xlo, xhi, ylo, yhi);
    double expected1 = static_cast<double>(setting.n1) * mass1;
    double expected2 = mixture2 * mass2;
    if (setting.extra_count > 0) {
      double overlap = 0.0;
      for (const auto& r : setting.extra_rects) overlap += rect_overlap(r, xlo, xhi, ylo, yhi);
      expected2 += static_cast<double>(setting.extra_count) * overlap / total_area;
    }
    const double denom = expected1 + expected2;
    truth.theta[i] = (denom > 0.0) ? expected2 / denom : truth.theta0;
    truth.alternative[i] = truth.theta[i] > truth.theta0;
  }
  return truth;
}

std::int64_t LeafTruth::alternative_count() const {
  std::int64_t count = 0;
  for (bool alt : alternative) count += alt;
  return count;
}

Metrics compute_metrics(const TeamResult& result, const std::vector<bool>& alternative) {
  if (result.rejection_layer.size() != alternative.size())
    throw ConfigError("compute_metrics: result and truth cover different leaf counts");
  Metrics metrics;
  const int stop = result.stop_layer;
  metrics.per_layer.reserve(static_cast<std::size_t>(stop));
  for (int layer = 1; layer <= stop; ++layer) {
    std::int64_t R = 0, V = 0, FN = 0;
    for (std::size_t i = 0; i < alternative.size(); ++i) {
      const int rl = result.rejection_layer[i];
      const bool rej = rl > 0 && rl <= layer;
      if (rej) {
        ++R;
        if (!alternative[i]) ++V;
      } else if (alternative[i]) {
        ++FN;
      }
    }
    LayerMetrics lm;
    lm.layer = layer;
    lm.discoveries = R;
    lm.false_negatives = FN;
    lm.fdp = static_cast<double>(V) / static_cast<double>(std::max<std::int64_t>(R, 1));
    metrics.per_layer.push_back(lm);
  }
  const auto& last = metrics.per_layer.back();
  metrics.fdp = last.fdp;
  metrics.false_negatives = last.false_negatives;
  metrics.discoveries = last.discoveries;
  return metrics;
}

ReplicationTable run_replications(const SimSetting& setting, int reps,
                                  const ReplicationConfig& config, std::uint64_t seed) {
  if (reps < 1) throw ConfigError("run_replications: reps must be >= 1");
  setting.validate();
  const int bins = (config.bins_per_dim > 0) ? config.bins_per_dim : setting.default_bins_per_dim();
  double m_leaves = 1.0;
  for (int d = 0; d < setting.dim; ++d) m_leaves *= bins;
  const int max_layers = (config.max_layers > 0)
                             ? config.max_layers
                             : setting.default_max_layers(static_cast<std::int64_t>(m_leaves));

  std::vector<Metrics> metrics(static_cast<std::size_t>(reps));
  std::vector<double> wall(static_cast<std::size_t>(reps), 0.0);

  auto run_one = [&](int rep) {
    const auto t0 = std::chrono::steady_clock::now();
    const MarkerMatrix data =
        generate_cohorts_rep(setting, seed, static_cast<std::uint64_t>(rep));
    PartitionSpec spec;
    spec.scheme = Scheme::kSequential;
    spec.bins_per_dim = bins;
    const LeafBinning binning = build_partition(data, spec);
    TeamConfig team_config;
    team_config.alpha = config.alpha;
    team_config.stop = config.extra_stop;
    team_config.stop.max_layers = max_layers;
    const TeamResult result = run_team(binning, team_config);
    const LeafTruth truth = leaf_truth(setting, binning);
    metrics[static_cast<std::size_t>(rep)] = compute_metrics(result, truth.alternative);
    const auto t1 = std::chrono::steady_clock::now();
    wall[static_cast<std::size_t>(rep)] =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
  };

  const int threads = std::max(1, config.threads);
  if (threads == 1) {
    for (int rep = 0; rep < reps; ++rep) run_one(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&]() {
        for (int rep = next.fetch_add(1); rep < reps; rep = next.fetch_add(1)) run_one(rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  // Reduce in replication order. A run that stopped before max_layers keeps
  // its final counts for the later stop-layer rows.
  ReplicationTable table;
  for (int rep = 0; rep < reps; ++rep) {
    const auto& per_layer = metrics[static_cast<std::size_t>(rep)].per_layer;
    for (int layer = 1; layer <= max_layers; ++layer) {
      const auto& lm = per_layer[static_cast<std::size_t>(
          std::min<std::size_t>(per_layer.size(), static_cast<std::size_t>(layer)) - 1)];
      ReplicationRow row;
      row.rep = rep;
      row.layer = layer;
      row.fdp = lm.fdp;
      row.false_negatives = lm.false_negatives;
      row.discoveries = lm.discoveries;
      row.wall_ms = wall[static_cast<std::size_t>(rep)];
      table.rows.push_back(row);
    }
  }
  for (int layer = 1; layer <= max_layers; ++layer) {
    ReplicationSummaryRow s;
    s.layer = layer;
    double n = 0.0;
    double fdp_m = 0.0, fn_m = 0.0, disc_m = 0.0, wall_m = 0.0;
    for (const auto& row : table.rows) {
      if (row.layer != layer) continue;
      ++n;
      fdp_m += row.fdp;
      fn_m += static_cast<double>(row.false_negatives);
      disc_m += static_cast<double>(row.discoveries);
      wall_m += row.wall_ms;
    }
    fdp_m /= n;
    fn_m /= n;
    disc_m /= n;
    wall_m /= n;
    double fdp_ss = 0.0, fn_ss = 0.0, disc_ss = 0.0;
    for (const auto& row : table.rows) {
      if (row.layer != layer) continue;
      fdp_ss += (row.fdp - fdp_m) * (row.fdp - fdp_m);
      fn_ss += (static_cast<double>(row.false_negatives) - fn_m) *
               (static_cast<double>(row.false_negatives) - fn_m);
      disc_ss += (static_cast<double>(row.discoveries) - disc_m) *
                 (static_cast<double>(row.discoveries) - disc_m);
    }
    const double denom = std::max(1.0, n - 1.0);
    s.fdp_mean = fdp_m;
    s.fdp_sd = std::sqrt(fdp_ss / denom);
    s.fn_mean = fn_m;
    s.fn_sd = std::sqrt(fn_ss / denom);
    s.disc_mean = disc_m;
    s.disc_sd = std::sqrt(disc_ss / denom);
    s.wall_ms_mean = wall_m;
    table.summary.push_back(s);
  }
  return table;
}

void write_replication_rows(const ReplicationTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << "rep,layer,fdp,false_negatives,discoveries,wall_ms\n";
  char buf[64];
  for (const auto& row : table.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.17g,%lld,%lld,%.6g", row.rep + 1, row.layer,
                  row.fdp, static_cast<long long>(row.false_negatives),
                  static_cast<long long>(row.discoveries), row.wall_ms);
    out << buf << '\n';
  }
  if (!out) throw DataError("failed writing: " + path);
}

void write_replication_summary(const ReplicationTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  out << "layer,fdp_mean,fdp_sd,fn_mean,fn_sd,discoveries_mean,discoveries_sd,wall_ms_mean\n";
  char buf[160];
  for (const auto& s : table.summary) {
    std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.6g", s.layer,
                  s.fdp_mean, s.fdp_sd, s.fn_mean, s.fn_sd, s.disc_mean, s.disc_sd,
                  s.wall_ms_mean);
    out << buf << '\n';
  }
  if (!out) throw DataError("failed writing: " + path);
}

}  // namespace team
