#include "htefs/adjustment.hpp"

#include "htefs/structure_fit.hpp"

namespace htefs {

AdjustmentResult oracle_adjustment(const CausalGraph& graph, AdjustmentMode mode) {
  const auto nodes = graph.feature_nodes();
  std::vector<bool> pick(graph.size(), false);
  AdjustmentResult res;
  switch (mode) {
    case AdjustmentMode::Parents:
      for (NodeId p : graph.dag.parents(graph.t_node)) pick[p] = true;
      break;
    case AdjustmentMode::Valid: {
      const auto de = graph.dag.descendant_mask(graph.t_node);
      for (NodeId v : nodes) pick[v] = !de[v];
      break;
    }
    case AdjustmentMode::OSet:
      for (NodeId v : optimal_adjustment_set(graph.dag, graph.t_node, graph.y_node, &res.empty_causal_path))
        pick[v] = true;
      break;
  }
  for (std::size_t c = 0; c < nodes.size(); ++c)
    if (pick[nodes[c]]) res.columns.push_back(c);
  return res;
}

}  // namespace htefs
