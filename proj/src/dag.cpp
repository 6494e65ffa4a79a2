#include "htefs/dag.hpp"

#include <algorithm>

namespace htefs {

std::size_t Dag::edge_count() const {
  return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
}

std::vector<NodeId> Dag::parents(NodeId v) const {
  std::vector<NodeId> out;
  for (NodeId u = 0; u < n_; ++u)
    if (has_edge(u, v)) out.push_back(u);
  return out;
}

std::vector<NodeId> Dag::children(NodeId v) const {
  std::vector<NodeId> out;
  for (NodeId u = 0; u < n_; ++u)
    if (has_edge(v, u)) out.push_back(u);
  return out;
}

std::vector<bool> Dag::descendant_mask(NodeId v) const {
  std::vector<bool> seen(n_, false);
  std::vector<NodeId> stack{v};
  seen[v] = true;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId w = 0; w < n_; ++w)
      if (has_edge(u, w) && !seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  return seen;
}

std::vector<bool> Dag::ancestor_mask(NodeId v) const {
  std::vector<bool> seen(n_, false);
  std::vector<NodeId> stack{v};
  seen[v] = true;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId w = 0; w < n_; ++w)
      if (has_edge(w, u) && !seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  return seen;
}

std::vector<NodeId> Dag::descendants(NodeId v) const {
  auto mask = descendant_mask(v);
  std::vector<NodeId> out;
  for (NodeId u = 0; u < n_; ++u)
    if (mask[u]) out.push_back(u);
  return out;
}

bool Dag::has_directed_path(NodeId from, NodeId to) const { return descendant_mask(from)[to]; }

std::vector<bool> Dag::reachable_avoiding(NodeId from, NodeId blocked) const {
  std::vector<bool> seen(n_, false);
  std::vector<NodeId> stack{from};
  seen[from] = true;
  while (!stack.empty()) {
    NodeId u = stack.back();
    stack.pop_back();
    for (NodeId w = 0; w < n_; ++w)
      if (w != blocked && has_edge(u, w) && !seen[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  return seen;
}

bool Dag::d_separated(NodeId a, NodeId b, std::span<const NodeId> z) const {
  if (a == b) return false;
  std::vector<bool> in_z(n_, false);
  for (NodeId v : z) in_z[v] = true;
  if (in_z[a] || in_z[b]) return true;
  // Ancestors of z, z included.
  std::vector<bool> anc_z(n_, false);
  std::vector<NodeId> stack(z.begin(), z.end());
  for (NodeId v : z) anc_z[v] = true;
  while (!stack.empty()) {
    const NodeId v = stack.back();
    stack.pop_back();
    for (NodeId u = 0; u < n_; ++u)
      if (has_edge(u, v) && !anc_z[u]) {
        anc_z[u] = true;
        stack.push_back(u);
      }
  }
  // Reachability over (node, arrived-from-child) states.
  std::vector<bool> seen_up(n_, false), seen_down(n_, false);
  std::vector<std::pair<NodeId, bool>> frontier{{a, true}};
  seen_up[a] = true;
  while (!frontier.empty()) {
    const auto [v, up] = frontier.back();
    frontier.pop_back();
    if (v == b) return false;
    const bool to_parents = up ? !in_z[v] : anc_z[v];
    const bool to_children = !in_z[v];
    for (NodeId w = 0; w < n_; ++w) {
      if (to_parents && has_edge(w, v) && !seen_up[w]) {
        seen_up[w] = true;
        frontier.emplace_back(w, true);
      }
      if (to_children && has_edge(v, w) && !seen_down[w]) {
        seen_down[w] = true;
        frontier.emplace_back(w, false);
      }
    }
  }
  return true;
}

}  // namespace htefs
