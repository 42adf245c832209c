#include "team/partition.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

#include "team/errors.hpp"

namespace team {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Left-block size of cut k of m_tilde on n points: ceil(k*n/m_tilde).
std::int64_t cut_position(std::int64_t n, int m_tilde, int k) {
  return (static_cast<std::int64_t>(k) * n + m_tilde - 1) / m_tilde;
}

// Number of cuts (ascending, possibly +inf-padded) that are <= v. With the
// half-open [lo, hi) convention a point equal to a cut value falls in the
// upper cell.
int bin_of_value(const double* cuts, int n_cuts, double v) {
  int lo = 0, hi = n_cuts;
  while (lo < hi) {
    const int mid = (lo + hi) / 2;
    if (cuts[mid] <= v)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

}  // namespace

bool LeafRegion::contains(std::span<const double> x) const {
  for (std::size_t d = 0; d < lo.size(); ++d) {
    if (!(x[d] >= lo[d])) return false;
    if (!(x[d] < hi[d]) && hi[d] != kInf) return false;
  }
  return true;
}

std::vector<int> order_dimensions(const MarkerMatrix& matrix) {
  const std::size_t p = matrix.cols();
  const std::size_t n = matrix.rows();
  std::vector<double> var(p, 0.0);
  for (std::size_t c = 0; c < p; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += matrix.at(r, c);
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = matrix.at(r, c) - mean;
      ss += d * d;
    }
    var[c] = (n > 1) ? ss / static_cast<double>(n - 1) : 0.0;
  }
  std::vector<int> order(p);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return var[a] > var[b]; });
  return order;
}

std::size_t Partition::leaf_of_point(std::span<const double> x) const {
  if (scheme_ == Scheme::kSequential) {
    const int mt = bins_per_dim_;
    std::size_t cell = 0;
    for (std::size_t d = 0; d < dim_order_.size(); ++d) {
      const double* cuts = cuts_[d].data() + cell * static_cast<std::size_t>(mt - 1);
      cell = cell * static_cast<std::size_t>(mt) +
             static_cast<std::size_t>(bin_of_value(cuts, mt - 1, x[static_cast<std::size_t>(dim_order_[d])]));
    }
    return ordinal_of_cell_[cell];
  }
  std::int32_t node = 0;
  while (nodes_[static_cast<std::size_t>(node)].dim >= 0) {
    const auto& nd = nodes_[static_cast<std::size_t>(node)];
    node = (x[static_cast<std::size_t>(nd.dim)] < nd.cut) ? nd.left : nd.right;
  }
  return nodes_[static_cast<std::size_t>(node)].leaf;
}

namespace {

std::vector<int> resolve_dim_order(const MarkerMatrix& matrix, const PartitionSpec& spec) {
  if (spec.dim_order.empty()) return order_dimensions(matrix);
  if (spec.dim_order.size() != matrix.cols())
    throw ConfigError("dim_order must list every column exactly once");
  std::vector<bool> seen(matrix.cols(), false);
  for (int d : spec.dim_order) {
    if (d < 0 || d >= static_cast<int>(matrix.cols()) || seen[static_cast<std::size_t>(d)])
      throw ConfigError("dim_order must be a permutation of the columns");
    seen[static_cast<std::size_t>(d)] = true;
  }
  return spec.dim_order;
}

// Serpentine rank of the lexicographic digit string: dimension d+1 is
// traversed in alternating direction so consecutive ordinals stay adjacent.
std::uint32_t serpentine_rank(const std::vector<int>& digits, int m_tilde) {
  std::uint64_t rank = 0;
  bool flip = false;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    const int pos = flip ? (m_tilde - 1 - digits[i]) : digits[i];
    rank = rank * static_cast<std::uint64_t>(m_tilde) + static_cast<std::uint64_t>(pos);
    if (digits[i] % 2 == 1) flip = !flip;
  }
  return static_cast<std::uint32_t>(rank);
}

}  // namespace

Partition build_sequential_partition_geometry(const MarkerMatrix& matrix,
                                              const PartitionSpec& spec) {
  const int mt = spec.bins_per_dim;
  if (spec.scheme != Scheme::kSequential)
    throw ConfigError("sequential geometry requested with a non-sequential spec");
  if (mt < 2) throw ConfigError("sequential partition needs bins_per_dim >= 2");
  const std::size_t p = matrix.cols();
  const std::size_t n_rows = matrix.rows();
  double m_check = 1.0;
  for (std::size_t d = 0; d < p; ++d) m_check *= mt;
  if (m_check > 1e8) throw ConfigError("partition would create too many leaves");
  const std::size_t m = static_cast<std::size_t>(m_check);
  if (n_rows < m) throw ConfigError("too few rows: need at least bins_per_dim^p");

  Partition part;
  part.scheme_ = Scheme::kSequential;
  part.bins_per_dim_ = mt;
  part.dim_order_ = resolve_dim_order(matrix, spec);

  // Refine cell ids one dimension at a time; each level sorts the values of
  // every current cell and records its conditional quantile cuts.
  std::vector<std::uint32_t> cell(n_rows, 0);
  part.cuts_.resize(p);
  std::size_t n_cells = 1;
  std::vector<std::vector<double>> bucket;
  for (std::size_t d = 0; d < p; ++d) {
    const int col = part.dim_order_[d];
    bucket.assign(n_cells, {});
    for (std::size_t r = 0; r < n_rows; ++r)
      bucket[cell[r]].push_back(matrix.at(r, static_cast<std::size_t>(col)));
    auto& cuts = part.cuts_[d];
    cuts.assign(n_cells * static_cast<std::size_t>(mt - 1), kInf);
    for (std::size_t c = 0; c < n_cells; ++c) {
      auto& vals = bucket[c];
      std::sort(vals.begin(), vals.end());
      const std::int64_t nc = static_cast<std::int64_t>(vals.size());
      for (int k = 1; k < mt; ++k) {
        const std::int64_t pos = cut_position(nc, mt, k);
        if (pos < nc) cuts[c * static_cast<std::size_t>(mt - 1) + static_cast<std::size_t>(k - 1)] =
            vals[static_cast<std::size_t>(pos)];
      }
    }
    for (std::size_t r = 0; r < n_rows; ++r) {
      const double* c_cuts = cuts.data() + cell[r] * static_cast<std::size_t>(mt - 1);
      cell[r] = cell[r] * static_cast<std::uint32_t>(mt) +
                static_cast<std::uint32_t>(bin_of_value(c_cuts, mt - 1,
                                                        matrix.at(r, static_cast<std::size_t>(col))));
    }
    n_cells *= static_cast<std::size_t>(mt);
  }

  // Ordinal numbering.
  part.ordinal_of_cell_.assign(m, 0);
  std::vector<int> digits(p, 0);
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t rest = c;
    for (std::size_t d = p; d-- > 0;) {
      digits[d] = static_cast<int>(rest % static_cast<std::size_t>(mt));
      rest /= static_cast<std::size_t>(mt);
    }
    part.ordinal_of_cell_[c] = (spec.leaf_order == LeafOrder::kSerpentine)
                                   ? serpentine_rank(digits, mt)
                                   : static_cast<std::uint32_t>(c);
  }

  // Regions, by walking each cell's digit path through the cut tables.
  part.regions_.assign(m, LeafRegion{});
  for (std::size_t c = 0; c < m; ++c) {
    LeafRegion region;
    region.lo.assign(matrix.cols(), -kInf);
    region.hi.assign(matrix.cols(), kInf);
    std::size_t prefix = 0;
    std::size_t rest = c;
    std::size_t scale = m;
    for (std::size_t d = 0; d < p; ++d) {
      scale /= static_cast<std::size_t>(mt);
      const int digit = static_cast<int>(rest / scale);
      rest %= scale;
      const double* cuts = part.cuts_[d].data() + prefix * static_cast<std::size_t>(mt - 1);
      const std::size_t col = static_cast<std::size_t>(part.dim_order_[d]);
      if (digit > 0) region.lo[col] = cuts[digit - 1];
      if (digit < mt - 1) region.hi[col] = cuts[digit];
      prefix = prefix * static_cast<std::size_t>(mt) + static_cast<std::size_t>(digit);
    }
    part.regions_[part.ordinal_of_cell_[c]] = std::move(region);
  }
  return part;
}

Partition build_adaptive_partition_geometry(const MarkerMatrix& matrix,
                                            const PartitionSpec& spec) {
  if (spec.scheme != Scheme::kAdaptive)
    throw ConfigError("adaptive geometry requested with a non-adaptive spec");
  const int levels = spec.splits;
  if (levels < 1) throw ConfigError("adaptive partition needs splits >= 1");
  if (levels > 30) throw ConfigError("adaptive partition: too many splits");
  const std::size_t n_rows = matrix.rows();
  if (n_rows < (static_cast<std::size_t>(1) << levels))
    throw ConfigError("too few rows: need at least 2^splits");

  Partition part;
  part.scheme_ = Scheme::kAdaptive;
  part.dim_order_ = resolve_dim_order(matrix, spec);
  const std::size_t p = matrix.cols();

  std::vector<std::uint32_t> rows(n_rows);
  std::iota(rows.begin(), rows.end(), 0);
  std::uint32_t next_leaf = 0;
  std::vector<double> vals;

  // Recursive median splits over [begin, end) of the row-index array.
  auto split = [&](auto&& self, std::size_t begin, std::size_t end, int depth,
                   LeafRegion region) -> std::int32_t {
    const std::int32_t id = static_cast<std::int32_t>(part.nodes_.size());
    part.nodes_.emplace_back();
    if (depth == levels) {
      part.nodes_[static_cast<std::size_t>(id)].leaf = next_leaf++;
      part.regions_.push_back(std::move(region));
      return id;
    }
    // Split dimension: largest within-cell variance (recomputed) or the
    // fixed global order.
    int col;
    if (spec.global_dim_order) {
      col = part.dim_order_[static_cast<std::size_t>(depth) % p];
    } else {
      col = -1;
      double best = -1.0;
      for (int cand : part.dim_order_) {
        double mean = 0.0;
        for (std::size_t i = begin; i < end; ++i)
          mean += matrix.at(rows[i], static_cast<std::size_t>(cand));
        mean /= static_cast<double>(end - begin);
        double ss = 0.0;
        for (std::size_t i = begin; i < end; ++i) {
          const double dv = matrix.at(rows[i], static_cast<std::size_t>(cand)) - mean;
          ss += dv * dv;
        }
        if (ss > best) {
          best = ss;
          col = cand;
        }
      }
      if (!(best > 0.0))
        throw ConfigError("adaptive partition: cell is constant in every dimension");
    }
    vals.clear();
    for (std::size_t i = begin; i < end; ++i)
      vals.push_back(matrix.at(rows[i], static_cast<std::size_t>(col)));
    std::sort(vals.begin(), vals.end());
    const std::int64_t nc = static_cast<std::int64_t>(vals.size());
    double cut = vals[static_cast<std::size_t>(cut_position(nc, 2, 1))];
    if (cut == vals.front()) {
      // Duplicates swamp the lower half; move the cut up to the next distinct
      // value so both sides stay nonempty.
      auto it = std::upper_bound(vals.begin(), vals.end(), vals.front());
      if (it == vals.end())
        throw ConfigError("adaptive partition: cell is constant along the split dimension");
      cut = *it;
    }
    auto mid_it = std::stable_partition(
        rows.begin() + static_cast<std::ptrdiff_t>(begin),
        rows.begin() + static_cast<std::ptrdiff_t>(end),
        [&](std::uint32_t r) { return matrix.at(r, static_cast<std::size_t>(col)) < cut; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - rows.begin());
    LeafRegion left = region, right = std::move(region);
    left.hi[static_cast<std::size_t>(col)] = cut;
    right.lo[static_cast<std::size_t>(col)] = cut;
    const std::int32_t l = self(self, begin, mid, depth + 1, std::move(left));
    const std::int32_t r = self(self, mid, end, depth + 1, std::move(right));
    part.nodes_[static_cast<std::size_t>(id)].dim = col;
    part.nodes_[static_cast<std::size_t>(id)].cut = cut;
    part.nodes_[static_cast<std::size_t>(id)].left = l;
    part.nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  };
  LeafRegion root;
  root.lo.assign(p, -kInf);
  root.hi.assign(p, kInf);
  split(split, 0, n_rows, 0, std::move(root));
  return part;
}

LeafBinning assign_and_count(std::shared_ptr<const Partition> partition,
                             const MarkerMatrix& matrix) {
  LeafBinning binning;
  binning.partition = partition;
  const std::size_t m = partition->leaf_count();
  binning.n.assign(m, 0);
  binning.X.assign(m, 0);
  binning.Xtilde.assign(m, 0);
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    const std::size_t leaf = partition->leaf_of_point(matrix.row(r));
    ++binning.n[leaf];
    if (matrix.cohort[r] == 2) {
      ++binning.X[leaf];
      ++binning.N2;
    } else {
      ++binning.Xtilde[leaf];
      ++binning.N1;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    if (binning.n[i] != binning.X[i] + binning.Xtilde[i])
      throw std::logic_error("assign_and_count: per-leaf count identity violated");
  }
  return binning;
}

LeafBinning build_partition(const MarkerMatrix& matrix, const PartitionSpec& spec) {
  matrix.validate();
  auto geometry = std::make_shared<Partition>(
      spec.scheme == Scheme::kSequential ? build_sequential_partition_geometry(matrix, spec)
                                         : build_adaptive_partition_geometry(matrix, spec));
  return assign_and_count(std::move(geometry), matrix);
}

int default_bins_per_dim(std::int64_t n_rows, int dims) {
  if (n_rows <= 0 || dims <= 0) throw ConfigError("default_bins_per_dim: bad arguments");
  const double n_target = std::cbrt(2.0 * static_cast<double>(n_rows));
  const double per_dim = std::pow(static_cast<double>(n_rows) / n_target, 1.0 / dims);
  return std::max(2, static_cast<int>(std::lround(per_dim)));
}

void write_leaf_table(const LeafBinning& binning, const std::vector<std::string>& marker_names,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open file for writing: " + path);
  const auto& part = *binning.partition;
  const std::size_t p = part.region(0).lo.size();
  if (marker_names.size() != p)
    throw ConfigError("write_leaf_table: marker name count does not match dimensions");
  out << "leaf_id";
  for (std::size_t d = 0; d < p; ++d)
    out << ",lo_" << marker_names[d] << ",hi_" << marker_names[d];
  out << ",n,X,Xtilde\n";
  char buf[32];
  auto emit = [&](double v) {
    if (v == std::numeric_limits<double>::infinity())
      out << "inf";
    else if (v == -std::numeric_limits<double>::infinity())
      out << "-inf";
    else {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << buf;
    }
  };
  for (std::size_t i = 0; i < binning.m(); ++i) {
    out << (i + 1);
    const auto& region = part.region(i);
    for (std::size_t d = 0; d < p; ++d) {
      out << ',';
      emit(region.lo[d]);
      out << ',';
      emit(region.hi[d]);
    }
    out << ',' << binning.n[i] << ',' << binning.X[i] << ',' << binning.Xtilde[i] << '\n';
  }
  if (!out) throw DataError("failed writing: " + path);
}

}  // namespace team
