#include "htefs/structure_fit.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "htefs/error.hpp"

namespace htefs {

namespace {

// Calls fn on each size-l subset of pool (in lexicographic order) until it
// returns true.
bool any_subset(const ColumnSet& pool, std::size_t l,
                const std::function<bool(const std::vector<std::size_t>&)>& fn) {
  if (l > pool.size()) return false;
  std::vector<std::size_t> idx(l);
  for (std::size_t k = 0; k < l; ++k) idx[k] = k;
  std::vector<std::size_t> subset(l);
  while (true) {
    for (std::size_t k = 0; k < l; ++k) subset[k] = pool[idx[k]];
    if (fn(subset)) return true;
    std::size_t k = l;
    while (k > 0 && idx[k - 1] == pool.size() - l + k - 1) --k;
    if (k == 0) return false;
    ++idx[k - 1];
    for (std::size_t q = k; q < l; ++q) idx[q] = idx[q - 1] + 1;
  }
}

bool contains(const ColumnSet& s, std::size_t v) { return std::find(s.begin(), s.end(), v) != s.end(); }

}  // namespace

ColumnSet pc_simple(const CiTest& ci, std::size_t target, const ColumnSet& candidates, std::size_t max_cond) {
  ColumnSet survivors;
  for (std::size_t c : candidates) {
    if (c == target) throw Error(ErrorCode::InvalidArgument, "target must not be a candidate");
    if (!ci.test(target, c, {}).independent) survivors.push_back(c);
  }
  for (std::size_t l = 1; l <= max_cond && survivors.size() > l; ++l) {
    const ColumnSet prev = survivors;
    survivors.clear();
    for (std::size_t c : prev) {
      ColumnSet others;
      for (std::size_t o : prev)
        if (o != c) others.push_back(o);
      const bool drop = any_subset(others, l, [&](const std::vector<std::size_t>& s) {
        return ci.test(target, c, s).independent;
      });
      if (!drop) survivors.push_back(c);
    }
  }
  std::sort(survivors.begin(), survivors.end());
  return survivors;
}

ColumnSet discover_colliders(const CiTest& ci, std::size_t target, const ColumnSet& pc) {
  std::vector<bool> mark(pc.size(), false);
  const std::size_t cond[1] = {target};
  for (std::size_t a = 0; a < pc.size(); ++a)
    for (std::size_t b = a + 1; b < pc.size(); ++b)
      if (ci.test(pc[a], pc[b], {}).independent && !ci.test(pc[a], pc[b], cond).independent)
        mark[a] = mark[b] = true;
  ColumnSet out;
  for (std::size_t a = 0; a < pc.size(); ++a)
    if (mark[a]) out.push_back(pc[a]);
  std::sort(out.begin(), out.end());
  return out;
}

PairStatus classify_pc_pairs(const CiTest& ci, std::size_t target, const ColumnSet& pc, const ColumnSet& pool,
                             std::size_t max_cond) {
  PairStatus out;
  std::vector<bool> mark(pc.size(), false);
  for (std::size_t a = 0; a < pc.size(); ++a)
    for (std::size_t b = a + 1; b < pc.size(); ++b) {
      ColumnSet others{target};
      for (std::size_t v : pool)
        if (v != pc[a] && v != pc[b] && v != target) others.push_back(v);
      std::sort(others.begin(), others.end());
      // Conservative rule: decide only when every separating set agrees on
      // whether it contains the target.
      bool with_target = false, without_target = false;
      for (std::size_t l = 0; l <= max_cond + 1 && !(with_target && without_target); ++l)
        any_subset(others, l, [&](const std::vector<std::size_t>& s) {
          if (!ci.test(pc[a], pc[b], s).independent) return false;
          if (contains(s, target)) {
            with_target = true;
          } else {
            without_target = true;
            // S u {target} may lie beyond the enumerated sizes.
            auto plus = s;
            plus.push_back(target);
            if (ci.test(pc[a], pc[b], plus).independent) with_target = true;
          }
          return with_target && without_target;
        });
      if (with_target && !without_target) out.non_colliders.emplace_back(pc[a], pc[b]);
      if (without_target && !with_target) mark[a] = mark[b] = true;
    }
  for (std::size_t a = 0; a < pc.size(); ++a)
    if (mark[a]) out.colliders.push_back(pc[a]);
  return out;
}

bool PartialGraph::has_path(std::size_t from, std::size_t to) const {
  return descendants(from).contains(to);
}

std::set<std::size_t> PartialGraph::descendants(std::size_t v) const {
  std::set<std::size_t> seen{v};
  std::vector<std::size_t> stack{v};
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (auto it = directed_edges.lower_bound({u, 0}); it != directed_edges.end() && it->first == u; ++it)
      if (seen.insert(it->second).second) stack.push_back(it->second);
  }
  return seen;
}

bool PartialGraph::add_edge(std::size_t from, std::size_t to) {
  if (from == to) return false;
  if (has_edge(from, to)) return true;
  if (has_path(to, from)) return false;
  directed_edges.insert({from, to});
  nodes.insert(from);
  nodes.insert(to);
  return true;
}

Dag PartialGraph::to_dag() const {
  Dag dag(num_variables);
  for (const auto& [a, b] : directed_edges) dag.add_edge(a, b);
  return dag;
}

nlohmann::json to_json(const PartialGraph& g) {
  auto name = [&](std::size_t v) -> nlohmann::json {
    if (v < g.labels.size()) return g.labels[v];
    return v;
  };
  nlohmann::json nodes = nlohmann::json::array(), directed = nlohmann::json::array(),
                 undirected = nlohmann::json::array(), discovered = nlohmann::json::array();
  for (std::size_t v : g.nodes) nodes.push_back(name(v));
  for (const auto& [a, b] : g.directed_edges) directed.push_back({name(a), name(b)});
  for (const auto& [a, b] : g.undirected_edges) undirected.push_back({name(a), name(b)});
  for (std::size_t v : g.discovered) discovered.push_back(name(v));
  return {{"nodes", nodes}, {"directed_edges", directed}, {"undirected_edges", undirected},
          {"discovered", discovered}};
}

LocalStructure local_structure(const CiTest& ci, const EdgeOrienter& orienter, std::size_t target,
                               const ColumnSet& candidates, std::size_t max_cond, const PartialGraph* known) {
  LocalStructure ls;
  ls.pc = pc_simple(ci, target, candidates, max_cond);
  const auto pairs = classify_pc_pairs(ci, target, ls.pc, candidates, max_cond);
  ls.collider_parents = pairs.colliders;

  struct Choice {
    bool into_target;
    bool fixed;
    double margin;
  };
  std::map<std::size_t, Choice> choice;
  for (std::size_t v : ls.pc) {
    if (known && known->has_edge(v, target)) {
      choice[v] = {true, true, 0.0};
    } else if (known && known->has_edge(target, v)) {
      choice[v] = {false, true, 0.0};
    } else if (contains(ls.collider_parents, v)) {
      choice[v] = {true, true, 0.0};
    } else {
      const auto r = orienter.orient(v, target);
      bool into_target = r.direction == EdgeDirection::IToJ;
      bool fixed = false;
      // Keep the known structure acyclic: flip an orientation that would close a cycle.
      if (known) {
        if (into_target && known->has_path(target, v)) into_target = false, fixed = true;
        else if (!into_target && known->has_path(v, target)) into_target = true, fixed = true;
      }
      if (r.low_confidence) ls.low_confidence.push_back(v);
      // Signed evidence for v -> target; a low-confidence default can point
      // into the target while the fit slightly favors the reverse.
      choice[v] = {into_target, fixed, r.error_j_to_i - r.error_i_to_j};
    }
  }
  // A non-collider pair cannot both point into the target.
  for (bool changed = true; changed;) {
    changed = false;
    for (const auto& [a, b] : pairs.non_colliders) {
      Choice& ca = choice[a];
      Choice& cb = choice[b];
      if (!ca.into_target || !cb.into_target || (ca.fixed && cb.fixed)) continue;
      const bool flip_a = cb.fixed || (!ca.fixed && ca.margin <= cb.margin);
      std::size_t v = flip_a ? a : b;
      if (known && known->has_path(v, target)) continue;
      choice[v].into_target = false;
      choice[v].fixed = true;
      changed = true;
    }
  }
  for (std::size_t v : ls.pc) (choice[v].into_target ? ls.parents : ls.children).push_back(v);
  return ls;
}

namespace {

void record(PartialGraph& g, std::size_t target, const LocalStructure& ls, std::vector<std::string>& flags) {
  g.nodes.insert(target);
  auto add = [&](std::size_t a, std::size_t b) {
    if (!g.add_edge(a, b)) {
      g.undirected_edges.insert({std::min(a, b), std::max(a, b)});
      if (std::find(flags.begin(), flags.end(), "cycle_conflict") == flags.end())
        flags.push_back("cycle_conflict");
    }
  };
  for (std::size_t p : ls.parents) add(p, target);
  for (std::size_t c : ls.children) add(target, c);
  for (std::size_t v : ls.low_confidence) g.undirected_edges.insert({std::min(v, target), std::max(v, target)});
}

}  // namespace

StructureFitResult structure_fit(const CiTest& ci, const EdgeOrienter& orienter, std::size_t t_col,
                                 std::size_t y_col, const ColumnSet& candidates,
                                 const StructureFitConfig& config) {
  config.ci.validate();
  if (t_col == y_col || contains(candidates, t_col) || contains(candidates, y_col))
    throw Error(ErrorCode::InvalidArgument, "t and y must be distinct and not candidates");
  ColumnSet vars = candidates;
  vars.push_back(t_col);
  vars.push_back(y_col);
  auto others = [&](std::size_t target) {
    ColumnSet out;
    for (std::size_t v : vars)
      if (v != target) out.push_back(v);
    return out;
  };

  StructureFitResult res;
  PartialGraph& g = res.graph;
  g.num_variables = ci.num_variables();
  const std::size_t max_cond = config.ci.max_cond;

  // dn starts as ch(Y); Y itself is settled once its local structure is in.
  const auto ls_y = local_structure(ci, orienter, y_col, others(y_col), max_cond, nullptr);
  record(g, y_col, ls_y, res.flags);
  g.discovered.insert(ls_y.children.begin(), ls_y.children.end());
  g.discovered.insert(y_col);

  const auto ls_t = local_structure(ci, orienter, t_col, others(t_col), max_cond, &g);
  record(g, t_col, ls_t, res.flags);
  g.discovered.insert(t_col);
  std::set<std::size_t> queued;
  for (std::size_t c : ls_t.children) {
    g.frontier.push_back(c);
    queued.insert(c);
  }
  if (ls_t.pc.empty()) res.flags.push_back("t_disconnected");

  while (!g.frontier.empty()) {
    const std::size_t z = g.frontier.front();
    g.frontier.pop_front();
    if (g.discovered.contains(z)) continue;
    const auto ls = local_structure(ci, orienter, z, others(z), max_cond, &g);
    record(g, z, ls, res.flags);
    g.discovered.insert(z);
    for (std::size_t c : ls.children)
      if (!g.discovered.contains(c) && queued.insert(c).second) g.frontier.push_back(c);
  }

  const auto de_t = g.descendants(t_col);
  for (std::size_t c : candidates) (de_t.contains(c) ? res.forbidden : res.selected).push_back(c);

  if (config.rule == PostDiscoveryRule::OSet) {
    bool empty = false;
    const auto oset = optimal_adjustment_set(g.to_dag(), t_col, y_col, &empty);
    if (empty) {
      res.flags.push_back("empty_causal_path");
    } else {
      ColumnSet keep;
      for (std::size_t c : candidates)
        if (std::find(oset.begin(), oset.end(), c) != oset.end()) keep.push_back(c);
      res.selected = std::move(keep);
    }
  }
  return res;
}

StructureFitResult structure_fit_features(const Matrix& x, std::span<const double> t, std::span<const double> y,
                                          const ColumnSet& candidates, const StructureFitConfig& config) {
  if (t.size() != x.rows() || y.size() != x.rows())
    throw Error(ErrorCode::LengthMismatch, "x, t and y lengths differ");
  const std::size_t k = candidates.size();
  Matrix data(x.rows(), k + 2);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < k; ++c) data(i, c) = x(i, candidates[c]);
    data(i, k) = t[i];
    data(i, k + 1) = y[i];
  }
  const FisherZTest ci(data, config.ci.alpha);
  const DataOrienter orienter(data);
  ColumnSet local(k);
  for (std::size_t c = 0; c < k; ++c) local[c] = c;
  auto res = structure_fit(ci, orienter, k, k + 1, local, config);
  for (auto& c : res.selected) c = candidates[c];
  for (auto& c : res.forbidden) c = candidates[c];
  for (std::size_t c = 0; c < k; ++c) res.graph.labels.push_back("x" + std::to_string(candidates[c]));
  res.graph.labels.push_back("t");
  res.graph.labels.push_back("y");
  return res;
}

std::vector<NodeId> optimal_adjustment_set(const Dag& dag, NodeId t, NodeId y, bool* empty_causal_path) {
  const auto de_t = dag.descendant_mask(t);
  if (empty_causal_path) *empty_causal_path = !de_t[y] || t == y;
  if (!de_t[y] || t == y) return {};
  const auto an_y = dag.ancestor_mask(y);
  const std::size_t d = dag.size();
  std::vector<bool> forb(d, false), cn(d, false);
  for (NodeId v = 0; v < d; ++v)
    if (v != t && de_t[v] && an_y[v]) cn[v] = true;
  forb[t] = true;
  for (NodeId v = 0; v < d; ++v) {
    if (!cn[v]) continue;
    const auto de = dag.descendant_mask(v);
    for (NodeId u = 0; u < d; ++u)
      if (de[u]) forb[u] = true;
  }
  std::vector<NodeId> out;
  for (NodeId v = 0; v < d; ++v) {
    if (forb[v]) continue;
    bool parent_of_cn = false;
    for (NodeId c = 0; c < d && !parent_of_cn; ++c) parent_of_cn = cn[c] && dag.has_edge(v, c);
    if (parent_of_cn) out.push_back(v);
  }
  return out;
}

}  // namespace htefs
