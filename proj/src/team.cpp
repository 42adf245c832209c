#include "team/team.hpp"

#include <algorithm>
#include <cmath>

#include "team/errors.hpp"

namespace team {

ThresholdResult find_threshold(const std::vector<double>& pvalues, double alpha) {
  const std::size_t m = pvalues.size();
  if (m < 2) throw ConfigError("find_threshold: needs at least 2 hypotheses");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("find_threshold: alpha must lie in (0,1)");
  ThresholdResult result;
  result.a_floor = 1.0 / (static_cast<double>(m) * std::log(static_cast<double>(m)));

  std::vector<double> sorted(pvalues);
  std::sort(sorted.begin(), sorted.end());
  // Largest step corner k*alpha/m inside [a_floor, alpha] with p_(k) below it.
  for (std::size_t k = m; k >= 1; --k) {
    const double corner = static_cast<double>(k) * alpha / static_cast<double>(m);
    if (corner < result.a_floor) break;
    if (sorted[k - 1] <= corner) {
      result.c_hat = corner;
      result.sup_found = true;
      return result;
    }
  }
  // Zero-rejection corner from the max(count, 1) clause: c = alpha/m is in
  // the feasible set whenever it clears the floor.
  const double corner0 = alpha / static_cast<double>(m);
  if (corner0 >= result.a_floor) {
    result.c_hat = corner0;
    result.sup_found = true;
    return result;
  }
  result.c_hat = result.a_floor;
  result.sup_found = false;
  return result;
}

std::vector<std::size_t> reject_nodes(const std::vector<Node>& nodes, double c_hat) {
  std::vector<std::size_t> rejected;
  for (std::size_t i = 0; i < nodes.size(); ++i)
    if (nodes[i].pvalue <= c_hat) rejected.push_back(i);
  return rejected;
}

AggregationResult aggregate_pairs(std::vector<Node> surviving) {
  if (surviving.size() < 2) throw ConfigError("aggregate_pairs: fewer than 2 survivors");
  AggregationResult result;
  const std::size_t pairs = surviving.size() / 2;
  result.nodes.reserve(pairs);
  for (std::size_t i = 0; i < pairs; ++i) {
    Node& a = surviving[2 * i];
    Node& b = surviving[2 * i + 1];
    Node parent;
    parent.leaves.reserve(a.leaves.size() + b.leaves.size());
    parent.leaves.insert(parent.leaves.end(), a.leaves.begin(), a.leaves.end());
    parent.leaves.insert(parent.leaves.end(), b.leaves.begin(), b.leaves.end());
    std::sort(parent.leaves.begin(), parent.leaves.end());
    parent.n = a.n + b.n;
    parent.x = a.x + b.x;
    result.nodes.push_back(std::move(parent));
  }
  if (surviving.size() % 2 == 1) result.leftover = std::move(surviving.back());
  return result;
}

std::vector<std::uint32_t> map_to_leaves(const std::vector<Node>& nodes,
                                         const std::vector<std::size_t>& rejected) {
  std::vector<std::uint32_t> leaves;
  for (std::size_t idx : rejected)
    leaves.insert(leaves.end(), nodes[idx].leaves.begin(), nodes[idx].leaves.end());
  std::sort(leaves.begin(), leaves.end());
  return leaves;
}

bool should_stop(const std::vector<std::int64_t>& rejection_history, const StoppingRule& rule,
                 int layer) {
  if (rule.max_layers > 0 && layer >= rule.max_layers) return true;
  if (layer >= 2 && static_cast<std::size_t>(layer) <= rejection_history.size()) {
    const std::int64_t current = rejection_history[static_cast<std::size_t>(layer) - 1];
    if (rule.min_rejections >= 0 && current < rule.min_rejections) return true;
    if (rule.rejection_ratio > 0.0) {
      const std::int64_t prev = rejection_history[static_cast<std::size_t>(layer) - 2];
      const double ratio =
          static_cast<double>(current) / static_cast<double>(std::max<std::int64_t>(prev, 1));
      if (ratio < rule.rejection_ratio) return true;
    }
  }
  return false;
}

std::int64_t TeamResult::total_rejections() const {
  std::int64_t total = 0;
  for (int layer : rejection_layer) total += (layer > 0);
  return total;
}

TeamResult run_team(const LeafBinning& binning, const TeamConfig& config) {
  return run_team(binning, config, PValueOverride());
}

TeamResult run_team(const LeafBinning& binning, const TeamConfig& config,
                    const PValueOverride& override) {
  const std::size_t m = binning.m();
  if (m < 2) throw ConfigError("run_team: needs at least 2 leaves");
  if (binning.N1 <= 0 || binning.N2 <= 0) throw ConfigError("run_team: a cohort is empty");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw ConfigError("run_team: alpha must lie in (0,1)");

  const double theta0 =
      static_cast<double>(binning.N2) / static_cast<double>(binning.N1 + binning.N2);
  NullCache cache(theta0);

  TeamResult result;
  result.rejection_layer.assign(m, 0);
  result.leaf_pvalue.assign(m, 1.0);

  // Layer 1: every leaf is a node. Empty leaves get p = 1, are never
  // rejected, and never aggregate upward.
  std::vector<Node> nodes;
  nodes.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    Node node;
    node.leaves = {static_cast<std::uint32_t>(i)};
    node.n = binning.n[i];
    node.x = binning.X[i];
    if (node.n > 0) node.null = cache.leaf_null(node.n);
    nodes.push_back(std::move(node));
  }

  std::vector<std::int64_t> rejection_history;
  double c_hat_prev = 0.0;
  int layer = 1;
  while (true) {
    for (auto& node : nodes) {
      if (node.null) node.pvalue = node.null->dist.ccdf(static_cast<int>(node.x));
      if (override) {
        const double forced = override(layer, node);
        if (!std::isnan(forced)) node.pvalue = forced;
      }
      if (layer == 1) result.leaf_pvalue[node.leaves[0]] = node.pvalue;
    }

    std::vector<double> pvalues;
    pvalues.reserve(nodes.size());
    for (const auto& node : nodes) pvalues.push_back(node.pvalue);
    const ThresholdResult th = find_threshold(pvalues, config.alpha);

    const auto rejected = reject_nodes(nodes, th.c_hat);
    for (std::uint32_t leaf : map_to_leaves(nodes, rejected))
      result.rejection_layer[leaf] = layer;

    LayerRecord record;
    record.layer = layer;
    record.m_layer = nodes.size();
    record.c_hat = th.c_hat;
    record.a_floor = th.a_floor;
    record.sup_found = th.sup_found;
    record.node_rejections = static_cast<std::int64_t>(rejected.size());
    record.mapped_leaves = static_cast<std::int64_t>(rejected.size()) << (layer - 1);
    result.layers.push_back(record);
    rejection_history.push_back(record.node_rejections);

    if (should_stop(rejection_history, config.stop, layer)) break;

    std::vector<Node> surviving;
    surviving.reserve(nodes.size());
    {
      std::size_t next_rejected = 0;
      for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (next_rejected < rejected.size() && rejected[next_rejected] == i) {
          ++next_rejected;
          continue;
        }
        if (layer == 1 && nodes[i].n == 0) continue;
        surviving.push_back(std::move(nodes[i]));
      }
    }
    // A next layer needs at least two parent nodes (the floor is undefined
    // below m = 2).
    if (surviving.size() / 2 < 2) break;

    // Pairing is positional, so parent i's children sat at 2i and 2i+1.
    std::vector<std::shared_ptr<LayeredNull>> child_nulls;
    child_nulls.reserve(surviving.size());
    for (const auto& node : surviving) child_nulls.push_back(node.null);

    AggregationResult agg = aggregate_pairs(std::move(surviving));
    if (agg.leftover)
      result.layers.back().leftover_leaves =
          static_cast<std::int64_t>(agg.leftover->leaves.size());
    nodes = std::move(agg.nodes);
    c_hat_prev = th.c_hat;
    for (std::size_t i = 0; i < nodes.size(); ++i)
      nodes[i].null = cache.parent_null(child_nulls[2 * i], child_nulls[2 * i + 1], c_hat_prev);
    ++layer;
  }

  result.stop_layer = layer;
  return result;
}

}  // namespace team
