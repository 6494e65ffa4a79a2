#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "htefs/error.hpp"
#include "htefs/scm.hpp"

namespace htefs {

void ScmSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (d < 3) fail("d must be at least 3");
  if (!(p_e >= 0.0 && p_e <= 1.0)) fail("p_e must lie in [0, 1]");
  if (!(sigma >= 0.0 && sigma < 1.0)) fail("sigma must lie in [0, 1)");
  if (!(rho > 0.0 && rho <= 1.0)) fail("rho must lie in (0, 1]");
  if (m + 2 > d) fail("m + 2 must not exceed d");
  if (n < 2) fail("n must be at least 2");
}

std::vector<NodeId> CausalGraph::feature_nodes() const {
  std::vector<NodeId> out;
  for (NodeId v = 0; v < size(); ++v)
    if (v != t_node && v != y_node) out.push_back(v);
  return out;
}

Dataset Dataset::subset_rows(std::span<const std::size_t> rows) const {
  Dataset out;
  out.x = x.select_rows(rows);
  out.t = gather(t, rows);
  out.y = gather(y, rows);
  out.tau = tau.empty() ? std::vector<double>{} : gather(tau, rows);
  out.feature_nodes = feature_nodes;
  out.post_treatment_mask = post_treatment_mask;
  return out;
}

CausalGraph sample_graph(const ScmSpec& spec, Rng& rng) {
  const std::size_t d = spec.d;
  CausalGraph g;
  g.order.resize(d);
  for (NodeId v = 0; v < d; ++v) g.order[v] = v;
  rng.shuffle(g.order);
  g.dag = Dag(d);
  g.coef.assign(d * d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    for (std::size_t b = a + 1; b < d; ++b) {
      if (!rng.bernoulli(spec.p_e)) continue;
      const NodeId from = g.order[a];
      const NodeId to = g.order[b];
      double c = 0.0;
      while (c == 0.0) c = rng.uniform(-1.0, 1.0);
      g.dag.add_edge(from, to);
      g.coef[from * d + to] = c;
    }
  }
  return g;
}

bool has_backdoor_path(const Dag& dag, NodeId t, NodeId y) {
  const auto anc_t = dag.ancestor_mask(t);
  for (NodeId z = 0; z < dag.size(); ++z) {
    if (z == t || z == y || !anc_t[z]) continue;
    if (dag.reachable_avoiding(z, t)[y]) return true;
  }
  return false;
}

namespace {

// Depth-first over children in ascending id, so the first complete path is
// the lexicographically smallest.
bool chain_dfs(const Dag& dag, NodeId u, NodeId y, std::size_t hops_left,
               std::vector<NodeId>& path) {
  if (hops_left == 0) return u == y;
  for (NodeId w : dag.children(u)) {
    if (hops_left > 1 && w == y) continue;
    if (hops_left > 1) path.push_back(w);
    if (chain_dfs(dag, w, y, hops_left - 1, path)) return true;
    if (hops_left > 1) path.pop_back();
  }
  return false;
}

void collect_endpoints(const Dag& dag, NodeId u, std::size_t hops_left, std::vector<bool>& hit) {
  for (NodeId w : dag.children(u)) {
    if (hops_left == 1)
      hit[w] = true;
    else
      collect_endpoints(dag, w, hops_left - 1, hit);
  }
}

}  // namespace

std::optional<std::vector<NodeId>> mediator_chain(const Dag& dag, NodeId t, NodeId y, std::size_t m) {
  std::vector<NodeId> path;
  if (chain_dfs(dag, t, y, m + 1, path)) return path;
  return std::nullopt;
}

std::vector<std::pair<NodeId, NodeId>> candidate_role_pairs(const Dag& dag, const ScmSpec& spec) {
  std::vector<std::pair<NodeId, NodeId>> out;
  const std::size_t d = dag.size();
  for (NodeId t = 0; t < d; ++t) {
    std::vector<bool> hit(d, false);
    collect_endpoints(dag, t, spec.m + 1, hit);
    for (NodeId y = 0; y < d; ++y) {
      if (!hit[y] || y == t) continue;
      if (has_backdoor_path(dag, t, y) == spec.gamma) out.emplace_back(t, y);
    }
  }
  return out;
}

std::optional<CausalGraph> select_roles(CausalGraph graph, const ScmSpec& spec, Rng& rng) {
  const auto pairs = candidate_role_pairs(graph.dag, spec);
  if (pairs.empty()) return std::nullopt;
  const auto [t, y] = pairs[rng.index(pairs.size())];
  graph.t_node = t;
  graph.y_node = y;
  graph.mediators = *mediator_chain(graph.dag, t, y, spec.m);

  const auto de_t = graph.dag.descendant_mask(t);
  auto attach = [&](NodeId node, NodeId chain_parent) {
    std::vector<NodeId> eligible;
    for (NodeId p : graph.dag.parents(node))
      if (!de_t[p]) eligible.push_back(p);
    rng.shuffle(eligible);
    const std::size_t k = std::min(spec.p_h, eligible.size());
    std::vector<NodeId> picked(eligible.begin(), eligible.begin() + static_cast<long>(k));
    std::sort(picked.begin(), picked.end());
    for (NodeId p : picked) graph.hte_parents.push_back({node, chain_parent, p});
    return k;
  };
  if (spec.m_p) {
    NodeId prev = t;
    for (NodeId med : graph.mediators) {
      attach(med, prev);
      prev = med;
    }
  }
  graph.effective_p_h = attach(y, graph.mediators.empty() ? t : graph.mediators.back());
  return graph;
}

CausalGraph sample_or_retry(const ScmSpec& spec, Rng& rng) {
  for (std::size_t attempt = 1; attempt <= kMaxGraphAttempts; ++attempt) {
    auto g = select_roles(sample_graph(spec, rng), spec, rng);
    if (g) {
      g->attempts = attempt;
      return *std::move(g);
    }
  }
  throw Error(ErrorCode::InfeasibleSpec,
              "no graph satisfied the confounding and chain requirements after " +
                  std::to_string(kMaxGraphAttempts) + " attempts");
}

Matrix sample_noise(const ScmSpec& spec, Rng& rng) {
  const std::size_t d = spec.d;
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Constant(static_cast<long>(d), static_cast<long>(d), spec.sigma);
  sigma.diagonal().setOnes();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double rcond = hi > 0.0 ? lo / hi : 0.0;
  if (!(rcond >= kMinNoiseRcond)) {
    std::ostringstream msg;
    msg << "noise covariance with sigma=" << spec.sigma << " and d=" << d
        << " is ill-conditioned (min eigenvalue " << lo << ", reciprocal condition " << rcond
        << " < " << kMinNoiseRcond << ")";
    throw Error(ErrorCode::NotPositiveDefinite, msg.str());
  }
  const Eigen::MatrixXd root = eig.operatorSqrt();

  Matrix out(spec.n, d);
  std::vector<double> z(d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    for (auto& v : z) v = rng.normal();
    auto row = out.row(i);
    for (std::size_t a = 0; a < d; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < d; ++b) s += root(static_cast<long>(a), static_cast<long>(b)) * z[b];
      row[a] = s;
    }
  }
  return out;
}

namespace {
double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Matrix simulate_nodes(const CausalGraph& graph, const ScmSpec& spec, const Matrix& noise,
                      TreatmentArm arm, std::span<const double> uniforms) {
  const std::size_t d = graph.size();
  const std::size_t n = noise.rows();
  if (noise.cols() != d) throw Error(ErrorCode::DimensionMismatch, "noise width differs from node count");
  if (arm == TreatmentArm::Factual && uniforms.size() != n)
    throw Error(ErrorCode::LengthMismatch, "factual pass needs one uniform per unit");

  std::vector<std::vector<NodeId>> pa(d);
  std::vector<std::vector<const HteInteraction*>> inter(d);
  for (NodeId v = 0; v < d; ++v) pa[v] = graph.dag.parents(v);
  for (const auto& h : graph.hte_parents) inter[h.node].push_back(&h);

  Matrix out(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    auto val = out.row(i);
    auto eps = noise.row(i);
    for (NodeId v : graph.order) {
      double s;
      if (pa[v].empty()) {
        s = eps[v];
      } else {
        s = 0.0;
        for (NodeId p : pa[v]) s += graph.weight(p, v) * val[p];
        for (const auto* h : inter[v]) s += val[h->chain_parent] * val[h->modifier];
        s += spec.rho * eps[v];
      }
      if (v == graph.t_node) {
        switch (arm) {
          case TreatmentArm::Factual: s = uniforms[i] < logistic(s) ? 1.0 : 0.0; break;
          case TreatmentArm::Treated: s = 1.0; break;
          case TreatmentArm::Control: s = 0.0; break;
        }
      }
      val[v] = s;
    }
  }
  return out;
}

std::vector<double> true_ite(const CausalGraph& graph, const ScmSpec& spec, const Matrix& noise) {
  const Matrix one = simulate_nodes(graph, spec, noise, TreatmentArm::Treated);
  const Matrix zero = simulate_nodes(graph, spec, noise, TreatmentArm::Control);
  std::vector<double> tau(noise.rows());
  for (std::size_t i = 0; i < tau.size(); ++i) tau[i] = one(i, graph.y_node) - zero(i, graph.y_node);
  return tau;
}

std::vector<bool> post_treatment_mask(const CausalGraph& graph) {
  const auto de = graph.dag.descendant_mask(graph.t_node);
  std::vector<bool> mask;
  for (NodeId v : graph.feature_nodes()) mask.push_back(de[v]);
  return mask;
}

Dataset generate(const CausalGraph& graph, const ScmSpec& spec, Rng& rng) {
  if (!graph.has_roles()) throw Error(ErrorCode::InvalidArgument, "graph has no treatment/outcome roles");
  const Matrix noise = sample_noise(spec, rng);
  std::vector<double> u(spec.n);
  for (auto& v : u) v = rng.uniform();
  const Matrix values = simulate_nodes(graph, spec, noise, TreatmentArm::Factual, u);

  Dataset data;
  data.feature_nodes = graph.feature_nodes();
  data.x = values.select_columns(data.feature_nodes);
  data.t = values.column(graph.t_node);
  data.y = values.column(graph.y_node);
  data.tau = true_ite(graph, spec, noise);
  data.post_treatment_mask = post_treatment_mask(graph);

  const auto treated = std::count(data.t.begin(), data.t.end(), 1.0);
  if (treated == 0 || static_cast<std::size_t>(treated) == data.t.size())
    throw Error(ErrorCode::DegenerateArms, "generated treatment has a single class");
  return data;
}

Scm simulate(const ScmSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Scm scm;
  scm.spec = spec;
  scm.graph = sample_or_retry(spec, rng);
  scm.data = generate(scm.graph, spec, rng);
  return scm;
}

}  // namespace htefs
