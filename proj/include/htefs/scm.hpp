#pragma once

// Random linear-Gaussian structural causal models with a binary treatment,
// a mediator chain, and bilinear effect-modification terms, plus the
// observational datasets and counterfactual ITEs they induce.

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "htefs/dag.hpp"
#include "htefs/matrix.hpp"
#include "htefs/rng.hpp"

namespace htefs {

struct ScmSpec {
  std::size_t d = 10;      // node count
  double p_e = 0.3;        // edge probability
  double sigma = 0.0;      // off-diagonal noise covariance
  double rho = 1.0;        // noise multiplier at non-source nodes
  bool gamma = true;       // require a backdoor path between T and Y
  std::size_t m = 1;       // mediator chain length
  std::size_t p_h = 1;     // effect-modifying parents per chain node
  bool m_p = false;        // mediators also carry effect modification
  std::size_t n = 2000;    // sample size
  std::uint64_t seed = 0;

  // Throws Error(InvalidArgument) on a spec outside its domain.
  void validate() const;

  friend bool operator==(const ScmSpec&, const ScmSpec&) = default;
};

// Bilinear term `value(chain_parent) * value(modifier)` added to `node`.
struct HteInteraction {
  NodeId node;
  NodeId chain_parent;
  NodeId modifier;

  friend bool operator==(const HteInteraction&, const HteInteraction&) = default;
};

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct CausalGraph {
  std::vector<NodeId> order;  // causal order; edges only go forward in it
  Dag dag;
  std::vector<double> coef;   // d*d row-major, nonzero exactly where dag has an edge
  NodeId t_node = kNoNode;
  NodeId y_node = kNoNode;
  std::vector<NodeId> mediators;  // intermediate nodes of the designated T->Y chain
  std::vector<HteInteraction> hte_parents;
  std::size_t effective_p_h = 0;  // modifiers actually attached to y_node
  std::size_t attempts = 0;       // sampling attempts used by sample_or_retry

  std::size_t size() const noexcept { return dag.size(); }
  double weight(NodeId from, NodeId to) const { return coef[from * size() + to]; }
  bool has_roles() const noexcept { return t_node != kNoNode && y_node != kNoNode; }

  // Nodes other than t_node and y_node, ascending; one feature column each.
  std::vector<NodeId> feature_nodes() const;

  friend bool operator==(const CausalGraph&, const CausalGraph&) = default;
};

struct Dataset {
  Matrix x;
  std::vector<double> t;  // 0/1
  std::vector<double> y;
  std::vector<double> tau;
  std::vector<NodeId> feature_nodes;
  std::vector<bool> post_treatment_mask;

  std::size_t n() const noexcept { return t.size(); }
  std::size_t num_features() const noexcept { return x.cols(); }

  Dataset subset_rows(std::span<const std::size_t> rows) const;
};

// Observational pass plus the counterfactual arms that share its noise.
struct Scm {
  ScmSpec spec;
  CausalGraph graph;
  Dataset data;
};

CausalGraph sample_graph(const ScmSpec& spec, Rng& rng);

// True iff some z outside {t, y} reaches t and reaches y without passing
// through t (an open backdoor path under an empty conditioning set).
bool has_backdoor_path(const Dag& dag, NodeId t, NodeId y);

// Ordered (t, y) pairs joined by a directed path with exactly m
// intermediate nodes and whose backdoor status matches gamma.
std::vector<std::pair<NodeId, NodeId>> candidate_role_pairs(const Dag& dag, const ScmSpec& spec);

// Lexicographically smallest t -> ... -> y path with exactly m intermediate
// nodes; returns the intermediates, or nullopt when none exists.
std::optional<std::vector<NodeId>> mediator_chain(const Dag& dag, NodeId t, NodeId y, std::size_t m);

// nullopt when no (t, y) pair satisfies the spec's confounding and chain
// length requirements.
std::optional<CausalGraph> select_roles(CausalGraph graph, const ScmSpec& spec, Rng& rng);

inline constexpr std::size_t kMaxGraphAttempts = 100;

// Throws Error(InfeasibleSpec) after kMaxGraphAttempts failures.
CausalGraph sample_or_retry(const ScmSpec& spec, Rng& rng);

// n x d standard noise with unit variances and off-diagonal covariance
// spec.sigma. Throws Error(NotPositiveDefinite) for an ill-conditioned
// covariance.
Matrix sample_noise(const ScmSpec& spec, Rng& rng);

// Reciprocal condition number below which the noise covariance is rejected.
inline constexpr double kMinNoiseRcond = 1e-4;

enum class TreatmentArm { Factual, Treated, Control };

// Node values for every unit (n x d). In the factual arm T_i is
// 1{uniforms[i] < logistic(latent_t)}; the other arms force T.
Matrix simulate_nodes(const CausalGraph& graph, const ScmSpec& spec, const Matrix& noise,
                      TreatmentArm arm, std::span<const double> uniforms = {});

std::vector<double> true_ite(const CausalGraph& graph, const ScmSpec& spec, const Matrix& noise);

Dataset generate(const CausalGraph& graph, const ScmSpec& spec, Rng& rng);

// Full pipeline: rng seeded from spec.seed, graph sampling, data generation.
Scm simulate(const ScmSpec& spec);

// Feature-column post-treatment mask for `graph`.
std::vector<bool> post_treatment_mask(const CausalGraph& graph);

}  // namespace htefs
