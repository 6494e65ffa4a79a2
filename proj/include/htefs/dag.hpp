#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace htefs {

using NodeId = std::size_t;

// Directed graph over nodes 0..size()-1 stored as a dense adjacency matrix.
// Acyclicity is the caller's responsibility; would_create_cycle() lets
// callers check before inserting.
class Dag {
 public:
  Dag() = default;
  explicit Dag(std::size_t n) : n_(n), adj_(n * n, 0) {}

  std::size_t size() const noexcept { return n_; }

  bool has_edge(NodeId from, NodeId to) const { return adj_[from * n_ + to] != 0; }
  void add_edge(NodeId from, NodeId to) { adj_[from * n_ + to] = 1; }
  void remove_edge(NodeId from, NodeId to) { adj_[from * n_ + to] = 0; }
  bool adjacent(NodeId a, NodeId b) const { return has_edge(a, b) || has_edge(b, a); }

  std::size_t edge_count() const;

  std::vector<NodeId> parents(NodeId v) const;
  std::vector<NodeId> children(NodeId v) const;

  // Both include v itself.
  std::vector<bool> descendant_mask(NodeId v) const;
  std::vector<bool> ancestor_mask(NodeId v) const;
  std::vector<NodeId> descendants(NodeId v) const;

  bool has_directed_path(NodeId from, NodeId to) const;
  bool would_create_cycle(NodeId from, NodeId to) const { return has_directed_path(to, from); }

  // Nodes reachable from `from` along directed edges without entering
  // `blocked` (the start node itself is never blocked). Includes `from`.
  std::vector<bool> reachable_avoiding(NodeId from, NodeId blocked) const;

  // d-separation of a and b given z, via the moralized ancestral graph.
  bool d_separated(NodeId a, NodeId b, std::span<const NodeId> z) const;

  std::span<const std::uint8_t> adjacency() const noexcept { return adj_; }

  friend bool operator==(const Dag&, const Dag&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::uint8_t> adj_;
};

}  // namespace htefs
