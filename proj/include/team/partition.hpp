#ifndef TEAM_PARTITION_HPP
#define TEAM_PARTITION_HPP

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "team/matrix.hpp"

namespace team {

enum class Scheme { kSequential, kAdaptive };
enum class LeafOrder { kSerpentine, kLexicographic };

struct PartitionSpec {
  Scheme scheme = Scheme::kSequential;
  // Sequential: bins per dimension (m_tilde >= 2), m = bins_per_dim^p leaves.
  int bins_per_dim = 0;
  // Adaptive: number of median-split levels (m_tilde >= 1), m = 2^splits leaves.
  int splits = 0;
  LeafOrder leaf_order = LeafOrder::kSerpentine;
  // Explicit split order over original column indices; empty = by descending
  // pooled variance.
  std::vector<int> dim_order;
  // Adaptive only: pick the split dimension from the fixed global order
  // instead of recomputing within-cell variances.
  bool global_dim_order = false;
};

// Axis-aligned box, half-open [lo, hi) per dimension with the outermost
// bounds open at +/-infinity; the final interval along each axis is
// effectively closed. Indexed by original column order.
struct LeafRegion {
  std::vector<double> lo, hi;
  bool contains(std::span<const double> x) const;
};

// Partition geometry plus the ordinal leaf numbering. Immutable once built.
class Partition {
 public:
  std::size_t leaf_count() const { return regions_.size(); }
  int dims() const { return static_cast<int>(dim_order_.size()); }
  Scheme scheme() const { return scheme_; }
  const std::vector<int>& dim_order() const { return dim_order_; }
  const LeafRegion& region(std::size_t ordinal) const { return regions_[ordinal]; }

  // Ordinal leaf index of a point (coordinates in original column order).
  // Total: every point maps to some leaf.
  std::size_t leaf_of_point(std::span<const double> x) const;

 private:
  friend Partition build_sequential_partition_geometry(const MarkerMatrix&, const PartitionSpec&);
  friend Partition build_adaptive_partition_geometry(const MarkerMatrix&, const PartitionSpec&);

  Scheme scheme_ = Scheme::kSequential;
  std::vector<int> dim_order_;
  std::vector<LeafRegion> regions_;  // by ordinal index

  // Sequential scheme: level d holds (m_tilde - 1) ascending cut values for
  // each of the m_tilde^d cells of the previous levels; a point's cell id is
  // refined digit by digit. ordinal_of_cell_ maps the lexicographic cell id
  // to the ordinal leaf index.
  int bins_per_dim_ = 0;
  std::vector<std::vector<double>> cuts_;
  std::vector<std::uint32_t> ordinal_of_cell_;

  // Adaptive scheme: binary split tree; leaves carry ordinal ids in
  // depth-first order.
  struct SplitNode {
    int dim = -1;           // original column; -1 marks a leaf
    double cut = 0.0;       // go right when x[dim] >= cut
    std::int32_t left = -1, right = -1;  // child node ids
    std::uint32_t leaf = 0;  // ordinal id when dim == -1
  };
  std::vector<SplitNode> nodes_;
};

// Partition geometry with per-leaf cohort tallies.
struct LeafBinning {
  std::shared_ptr<const Partition> partition;
  std::vector<std::int64_t> n;       // pooled count per ordinal leaf
  std::vector<std::int64_t> X;       // cohort-2 count
  std::vector<std::int64_t> Xtilde;  // cohort-1 count
  std::int64_t N1 = 0, N2 = 0;

  std::size_t m() const { return n.size(); }
  std::int64_t total() const { return N1 + N2; }
};

// Column indices sorted by descending pooled sample variance; ties broken by
// original column index.
std::vector<int> order_dimensions(const MarkerMatrix& matrix);

Partition build_sequential_partition_geometry(const MarkerMatrix& matrix,
                                              const PartitionSpec& spec);
Partition build_adaptive_partition_geometry(const MarkerMatrix& matrix, const PartitionSpec& spec);

// Tallies each row into its leaf and checks the count identities.
LeafBinning assign_and_count(std::shared_ptr<const Partition> partition,
                             const MarkerMatrix& matrix);

// Build geometry per spec.scheme, then count.
LeafBinning build_partition(const MarkerMatrix& matrix, const PartitionSpec& spec);

// Default per-dimension bin count from the target-leaf-occupancy rule
// n_target ~ (2N)^(1/3): m_tilde = round((N / n_target)^(1/p)), at least 2.
int default_bins_per_dim(std::int64_t n_rows, int dims);

// Leaf-table CSV: leaf_id, per-dim lo/hi bounds, n, X, Xtilde. Bound columns
// are named lo_<marker>/hi_<marker>. The run command (cli_ops) appends the
// per-leaf testing columns to the same layout.
void write_leaf_table(const LeafBinning& binning, const std::vector<std::string>& marker_names,
                      const std::string& path);

}  // namespace team

#endif  // TEAM_PARTITION_HPP
