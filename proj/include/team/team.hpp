#ifndef TEAM_TEAM_HPP
#define TEAM_TEAM_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "team/discrete_dist.hpp"
#include "team/partition.hpp"

namespace team {

// A tested unit on some layer: one leaf on layer 1, a union of 2^(l-1)
// consecutive surviving leaves above.
struct Node {
  std::vector<std::uint32_t> leaves;  // ordinal indices, strictly increasing
  std::int64_t n = 0;                 // pooled count
  std::int64_t x = 0;                 // cohort-2 count
  std::shared_ptr<LayeredNull> null;  // absent for empty leaves
  double pvalue = 1.0;
};

struct ThresholdResult {
  double c_hat = 0.0;
  double a_floor = 0.0;  // (m log m)^-1
  // Whether the defining sup was attained; when false c_hat == a_floor and
  // rejections at the floor still apply.
  bool sup_found = false;
};

// BH-like threshold search over one layer's p-value-like statistics. The sup
// is attained at a step corner k*alpha/m restricted to [a_floor, alpha];
// rejection everywhere uses p <= c_hat. Requires m >= 2 (the floor is
// undefined at m = 1) and 0 < alpha < 1.
ThresholdResult find_threshold(const std::vector<double>& pvalues, double alpha);

// Indices with pvalue <= c_hat.
std::vector<std::size_t> reject_nodes(const std::vector<Node>& nodes, double c_hat);

struct AggregationResult {
  std::vector<Node> nodes;  // paired parents, ordinal order
  // With an odd survivor count the last node is left out and never re-enters.
  std::optional<Node> leftover;
};

// Pair consecutive survivors (already in ordinal order) into parent nodes.
// Requires at least 2 survivors.
AggregationResult aggregate_pairs(std::vector<Node> surviving);

// Union of the rejected nodes' leaf sets.
std::vector<std::uint32_t> map_to_leaves(const std::vector<Node>& nodes,
                                         const std::vector<std::size_t>& rejected);

// Stopping configuration; any satisfied clause stops the run. All fields
// unset means "run until fewer than two parent nodes can be formed".
struct StoppingRule {
  int max_layers = 0;                 // 0 = unset
  std::int64_t min_rejections = -1;   // applies on layers >= 2
  double rejection_ratio = -1.0;      // applies on layers >= 2
};

// rejection_history holds the per-layer node rejection counts for layers
// 1..layer. The always-on "fewer than 2 nodes remain" stop lives in the run
// loop, where the survivor count is known.
bool should_stop(const std::vector<std::int64_t>& rejection_history, const StoppingRule& rule,
                 int layer);

struct TeamConfig {
  double alpha = 0.05;
  StoppingRule stop;
};

struct LayerRecord {
  int layer = 0;
  std::size_t m_layer = 0;
  double c_hat = 0.0;
  double a_floor = 0.0;
  bool sup_found = false;
  std::int64_t node_rejections = 0;
  std::int64_t mapped_leaves = 0;  // node_rejections * 2^(layer-1)
  std::int64_t leftover_leaves = 0;
};

struct TeamResult {
  // Per ordinal leaf: layer whose rejection covered it, 0 = never rejected.
  std::vector<int> rejection_layer;
  // Layer-1 p-value of each leaf (the statistic from its first test).
  std::vector<double> leaf_pvalue;
  std::vector<LayerRecord> layers;
  int stop_layer = 0;

  bool rejected(std::size_t leaf) const { return rejection_layer[leaf] > 0; }
  std::int64_t total_rejections() const;
};

// Test hook: when set, returns the p-value to use for (layer, node) instead
// of the conditional-null CCDF. The nulls are still built so that later
// layers stay well defined.
using PValueOverride = std::function<double(int layer, const Node& node)>;

TeamResult run_team(const LeafBinning& binning, const TeamConfig& config);
TeamResult run_team(const LeafBinning& binning, const TeamConfig& config,
                    const PValueOverride& override);

}  // namespace team

#endif  // TEAM_TEAM_HPP
