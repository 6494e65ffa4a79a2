#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "../fig1_fixtures.hpp"
#include "htefs/error.hpp"
#include "htefs/scm.hpp"

using namespace htefs;
using htefs::testing::make_graph;

namespace {

double variance(const std::vector<double>& v) {
  const double mu = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mu) * (x - mu);
  return ss / static_cast<double>(v.size() - 1);
}

ScmSpec small_spec(std::size_t d, std::size_t n = 500) {
  ScmSpec s;
  s.d = d;
  s.n = n;
  s.p_h = 0;
  s.rho = 1.0;
  return s;
}

}  // namespace

TEST(SampleGraph, EmptyAndCompleteExtremes) {
  Rng rng(1);
  ScmSpec s = small_spec(5);
  s.p_e = 0.0;
  auto g = sample_graph(s, rng);
  EXPECT_EQ(g.dag.edge_count(), 0u);
  for (double c : g.coef) EXPECT_EQ(c, 0.0);

  s.d = 3;
  s.p_e = 1.0;
  g = sample_graph(s, rng);
  EXPECT_EQ(g.dag.edge_count(), 3u);
}

TEST(SampleGraph, MeanEdgeCount) {
  Rng rng(7);
  ScmSpec s = small_spec(10);
  s.p_e = 0.3;
  double total = 0.0;
  const int reps = 10000;
  for (int r = 0; r < reps; ++r) total += static_cast<double>(sample_graph(s, rng).dag.edge_count());
  EXPECT_NEAR(total / reps, 13.5, 0.5);
}

TEST(SampleGraph, AcyclicUnderOrderAndCoefficientSupport) {
  Rng rng(11);
  ScmSpec s = small_spec(12);
  s.p_e = 0.5;
  for (int r = 0; r < 200; ++r) {
    const auto g = sample_graph(s, rng);
    std::vector<std::size_t> pos(s.d);
    for (std::size_t k = 0; k < s.d; ++k) pos[g.order[k]] = k;
    for (NodeId u = 0; u < s.d; ++u)
      for (NodeId v = 0; v < s.d; ++v) {
        if (g.dag.has_edge(u, v)) EXPECT_LT(pos[u], pos[v]);
        EXPECT_EQ(g.dag.has_edge(u, v), g.weight(u, v) != 0.0);
        if (g.dag.has_edge(u, v)) {
          EXPECT_GT(g.weight(u, v), -1.0);
          EXPECT_LT(g.weight(u, v), 1.0);
        }
      }
  }
}

TEST(Backdoor, FigureGraphsAndChain) {
  const auto a = htefs::testing::fig1a();
  EXPECT_TRUE(has_backdoor_path(a.graph.dag, a.node("T"), a.node("Y")));
  const auto c = htefs::testing::fig1c();
  EXPECT_TRUE(has_backdoor_path(c.graph.dag, c.node("T"), c.node("Y")));
  const auto chain = make_graph({"T", "M", "Y"}, {{"T", "M"}, {"M", "Y"}});
  EXPECT_FALSE(has_backdoor_path(chain.graph.dag, 0, 2));
}

TEST(SelectRoles, ChainOnlyGraph) {
  auto chain = make_graph({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
  chain.graph.t_node = chain.graph.y_node = kNoNode;
  ScmSpec s = small_spec(3);
  s.gamma = false;
  s.m = 1;
  Rng rng(3);
  auto g = select_roles(chain.graph, s, rng);
  ASSERT_TRUE(g.has_value());
  EXPECT_EQ(g->t_node, chain.node("A"));
  EXPECT_EQ(g->y_node, chain.node("C"));
  EXPECT_EQ(g->mediators, std::vector<NodeId>{chain.node("B")});

  s.gamma = true;
  EXPECT_FALSE(select_roles(chain.graph, s, rng).has_value());
}

TEST(SelectRoles, MultivariableGraphQualifies) {
  const auto c = htefs::testing::fig1c();
  ScmSpec s = small_spec(10);
  s.gamma = true;
  s.m = 1;
  const auto pairs = candidate_role_pairs(c.graph.dag, s);
  const std::pair<NodeId, NodeId> ty{c.node("T"), c.node("Y")};
  EXPECT_NE(std::find(pairs.begin(), pairs.end(), ty), pairs.end());
  EXPECT_EQ(mediator_chain(c.graph.dag, ty.first, ty.second, 1), std::vector<NodeId>{c.node("D")});
}

TEST(SelectRoles, LexicographicallySmallestChain) {
  const auto g = make_graph({"T", "P", "Q", "Y"}, {{"T", "Q"}, {"T", "P"}, {"P", "Y"}, {"Q", "Y"}});
  EXPECT_EQ(mediator_chain(g.graph.dag, g.node("T"), g.node("Y"), 1), std::vector<NodeId>{g.node("P")});
  EXPECT_FALSE(mediator_chain(g.graph.dag, g.node("T"), g.node("Y"), 2).has_value());
}

TEST(SampleOrRetry, InfeasibleAndFeasibilityRate) {
  ScmSpec s = small_spec(10);
  s.p_e = 0.0;
  s.gamma = true;
  Rng rng(5);
  EXPECT_THROW(
      {
        try {
          sample_or_retry(s, rng);
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::InfeasibleSpec);
          throw;
        }
      },
      Error);

  s.p_e = 0.3;
  s.m = 1;
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng r(seed);
    try {
      const auto g = sample_or_retry(s, r);
      EXPECT_GE(g.attempts, 1u);
      ++ok;
    } catch (const Error&) {
    }
  }
  EXPECT_GE(ok, 90);
}

TEST(SampleNoise, IndependentAndCorrelated) {
  ScmSpec s = small_spec(3, 10000);
  Rng rng(9);
  auto e = sample_noise(s, rng);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = a + 1; b < 3; ++b) {
      double sab = 0, saa = 0, sbb = 0;
      for (std::size_t i = 0; i < s.n; ++i) {
        sab += e(i, a) * e(i, b);
        saa += e(i, a) * e(i, a);
        sbb += e(i, b) * e(i, b);
      }
      EXPECT_LT(std::abs(sab / std::sqrt(saa * sbb)), 0.05);
    }

  s = small_spec(5, 50000);
  s.sigma = 0.4;
  e = sample_noise(s, rng);
  for (std::size_t a = 0; a < 5; ++a)
    for (std::size_t b = a + 1; b < 5; ++b) {
      double ma = 0, mb = 0, sab = 0;
      for (std::size_t i = 0; i < s.n; ++i) {
        ma += e(i, a);
        mb += e(i, b);
      }
      ma /= static_cast<double>(s.n);
      mb /= static_cast<double>(s.n);
      for (std::size_t i = 0; i < s.n; ++i) sab += (e(i, a) - ma) * (e(i, b) - mb);
      EXPECT_NEAR(sab / static_cast<double>(s.n - 1), 0.4, 0.02);
    }
}

TEST(SampleNoise, IllConditionedCovarianceRejected) {
  Rng rng(1);
  ScmSpec s = small_spec(50, 10);
  s.sigma = 0.999;
  EXPECT_THROW(sample_noise(s, rng), Error);
  s.d = 2;
  s.sigma = 1.0;
  try {
    sample_noise(s, rng);
    FAIL() << "singular covariance accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
    EXPECT_NE(std::string(e.what()).find("condition"), std::string::npos);
  }
}

TEST(Generate, ConstantDirectEffect) {
  auto g = make_graph({"X", "T", "Y"}, {{"X", "T"}, {"X", "Y"}, {"T", "Y"}});
  g.graph.coef[g.node("T") * 3 + g.node("Y")] = 0.6;
  ScmSpec s = small_spec(3, 300);
  Rng rng(2);
  const auto data = generate(g.graph, s, rng);
  for (double tau : data.tau) EXPECT_NEAR(tau, 0.6, 1e-12);
}

TEST(Generate, ChainPlusDirectPathProduct) {
  auto g = make_graph({"X", "T", "D", "Y"}, {{"X", "T"}, {"X", "Y"}, {"T", "D"}, {"D", "Y"}, {"T", "Y"}});
  auto& c = g.graph.coef;
  c[g.node("T") * 4 + g.node("D")] = 0.8;
  c[g.node("D") * 4 + g.node("Y")] = 0.25;
  c[g.node("T") * 4 + g.node("Y")] = 0.5;
  ScmSpec s = small_spec(4, 200);
  Rng rng(4);
  const auto data = generate(g.graph, s, rng);
  for (double tau : data.tau) EXPECT_NEAR(tau, 0.7, 1e-12);
}

TEST(Generate, InteractionMakesEffectsHeterogeneous) {
  // X -> T, X -> Y, T -> M -> Y with the bilinear term M * X on Y.
  auto g = htefs::testing::fig1b();
  const NodeId x = g.node("X"), t = g.node("T"), m = g.node("M"), y = g.node("Y");
  auto& c = g.graph.coef;
  c[t * 4 + m] = 0.9;
  c[m * 4 + y] = 0.4;
  g.graph.hte_parents = {{y, m, x}};
  ScmSpec s = small_spec(4, 400);
  Rng rng(8);
  const auto noise = sample_noise(s, rng);
  const auto tau = true_ite(g.graph, s, noise);
  // Y(1) - Y(0) = 0.9 * (0.4 + X), with X a source node so X = noise.
  for (std::size_t i = 0; i < s.n; ++i) EXPECT_NEAR(tau[i], 0.9 * (0.4 + noise(i, x)), 1e-12);
  EXPECT_GT(variance(tau), 0.1);
}

TEST(TrueIte, ZeroWithoutCausalPath) {
  auto g = make_graph({"T", "X", "Y"}, {{"X", "T"}, {"X", "Y"}});
  ScmSpec s = small_spec(3, 100);
  Rng rng(1);
  const auto noise = sample_noise(s, rng);
  for (double v : true_ite(g.graph, s, noise)) EXPECT_EQ(v, 0.0);
}

TEST(Simulate, DeterministicForSameSeed) {
  ScmSpec s;
  s.d = 10;
  s.n = 300;
  s.seed = 42;
  const auto a = simulate(s);
  const auto b = simulate(s);
  EXPECT_EQ(a.graph, b.graph);
  EXPECT_EQ(a.data.x, b.data.x);
  EXPECT_EQ(a.data.t, b.data.t);
  EXPECT_EQ(a.data.y, b.data.y);
  EXPECT_EQ(a.data.tau, b.data.tau);
}

TEST(Simulate, PropertiesHoldAcrossSeeds) {
  int checked = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    ScmSpec s;
    s.d = 8;
    s.n = 200;
    s.seed = seed;
    s.gamma = seed % 2 == 0;
    s.m = seed % 3;
    s.m_p = seed % 4 == 0;
    Scm scm;
    try {
      scm = simulate(s);
    } catch (const Error&) {
      continue;
    }
    ++checked;
    const auto& g = scm.graph;
    EXPECT_EQ(has_backdoor_path(g.dag, g.t_node, g.y_node), s.gamma);
    EXPECT_EQ(g.mediators.size(), s.m);
    // post-treatment mask from reachability
    const auto de = g.dag.descendant_mask(g.t_node);
    const auto nodes = g.feature_nodes();
    ASSERT_EQ(scm.data.post_treatment_mask.size(), nodes.size());
    for (std::size_t c = 0; c < nodes.size(); ++c) EXPECT_EQ(scm.data.post_treatment_mask[c], de[nodes[c]]);
    for (double v : scm.data.x.data()) EXPECT_TRUE(std::isfinite(v));
    for (double v : scm.data.tau) EXPECT_TRUE(std::isfinite(v));
  }
  EXPECT_GT(checked, 30);
}

TEST(Simulate, CounterfactualConsistency) {
  ScmSpec s;
  s.d = 10;
  s.n = 500;
  s.seed = 17;
  s.m_p = true;
  Rng rng(s.seed);
  const auto g = sample_or_retry(s, rng);
  const auto noise = sample_noise(s, rng);
  std::vector<double> u(s.n);
  for (auto& v : u) v = rng.uniform();
  const auto fact = simulate_nodes(g, s, noise, TreatmentArm::Factual, u);
  const auto one = simulate_nodes(g, s, noise, TreatmentArm::Treated);
  const auto zero = simulate_nodes(g, s, noise, TreatmentArm::Control);
  for (std::size_t i = 0; i < s.n; ++i) {
    const auto& arm = fact(i, g.t_node) == 1.0 ? one : zero;
    for (NodeId v = 0; v < s.d; ++v) EXPECT_EQ(fact(i, v), arm(i, v));
  }
}

TEST(Simulate, NoHeterogeneityWithoutInteractions) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ScmSpec s;
    s.d = 10;
    s.n = 300;
    s.p_h = 0;
    s.m_p = false;
    s.seed = seed;
    const auto scm = simulate(s);
    EXPECT_LT(variance(scm.data.tau), 1e-12);
  }
}

TEST(Simulate, RecordsEffectiveModifierCount) {
  ScmSpec s;
  s.d = 10;
  s.p_h = 2;
  s.n = 100;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    s.seed = seed;
    const auto scm = simulate(s);
    EXPECT_LE(scm.graph.effective_p_h, 2u);
    std::size_t on_y = 0;
    for (const auto& h : scm.graph.hte_parents)
      if (h.node == scm.graph.y_node) ++on_y;
    EXPECT_EQ(on_y, scm.graph.effective_p_h);
  }
}

TEST(ScmSpecValidate, RejectsOutOfDomain) {
  ScmSpec s;
  s.d = 2;
  EXPECT_THROW(s.validate(), Error);
  s = ScmSpec{};
  s.sigma = 1.0;
  EXPECT_THROW(s.validate(), Error);
  s = ScmSpec{};
  s.m = 9;
  EXPECT_THROW(s.validate(), Error);
  s = ScmSpec{};
  s.rho = 0.0;
  EXPECT_THROW(s.validate(), Error);
  EXPECT_NO_THROW(ScmSpec{}.validate());
}

namespace {

// Reference: separation in the moralized ancestral graph of {a, b} u z.
bool moral_separated(const Dag& g, NodeId a, NodeId b, const std::vector<NodeId>& z) {
  const std::size_t n = g.size();
  std::vector<bool> keep(n, false), blocked(n, false);
  for (NodeId v : {a, b}) {
    const auto m = g.ancestor_mask(v);
    for (NodeId u = 0; u < n; ++u) keep[u] = keep[u] || m[u];
  }
  for (NodeId v : z) {
    const auto m = g.ancestor_mask(v);
    for (NodeId u = 0; u < n; ++u) keep[u] = keep[u] || m[u];
    blocked[v] = true;
  }
  std::vector<std::vector<bool>> und(n, std::vector<bool>(n, false));
  for (NodeId u = 0; u < n; ++u) {
    if (!keep[u]) continue;
    const auto pa = g.parents(u);
    for (NodeId p : pa) und[p][u] = und[u][p] = true;
    for (NodeId p : pa)
      for (NodeId q : pa)
        if (p != q) und[p][q] = true;
  }
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{a};
  seen[a] = true;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    if (u == b) return false;
    for (NodeId w = 0; w < n; ++w)
      if (und[u][w] && !seen[w] && !blocked[w]) {
        seen[w] = true;
        stack.push_back(w);
      }
  }
  return true;
}

}  // namespace

TEST(Dag, DSeparationMatchesMoralGraphReference) {
  Rng rng(31);
  for (int rep = 0; rep < 300; ++rep) {
    const std::size_t n = 4 + rng.index(8);
    Dag g(n);
    for (NodeId u = 0; u < n; ++u)
      for (NodeId v = u + 1; v < n; ++v)
        if (rng.bernoulli(0.35)) g.add_edge(u, v);
    for (int q = 0; q < 20; ++q) {
      const NodeId a = rng.index(n), b = rng.index(n);
      if (a == b) continue;
      std::vector<NodeId> z;
      for (NodeId v = 0; v < n; ++v)
        if (v != a && v != b && rng.bernoulli(0.3)) z.push_back(v);
      EXPECT_EQ(g.d_separated(a, b, z), moral_separated(g, a, b, z));
    }
  }
}
