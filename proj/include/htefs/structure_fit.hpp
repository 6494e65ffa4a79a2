#pragma once

// Local causal discovery from the treatment toward the outcome:
// conditional-independence tests, PC-set discovery, collider-based parent
// identification, pairwise orientation, and the breadth-first partial
// structure builder that yields the forbidden (post-treatment) set.

#include <deque>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "htefs/dag.hpp"
#include "htefs/matrix.hpp"

namespace htefs {

struct CiTestConfig {
  double alpha = 0.05;
  std::size_t max_cond = 3;

  void validate() const;
};

struct CiResult {
  double p_value = 1.0;
  bool independent = true;
  bool singular = false;  // conditioning block was numerically singular
};

// Conditional-independence test over variables 0..num_variables()-1.
class CiTest {
 public:
  virtual ~CiTest() = default;
  virtual std::size_t num_variables() const = 0;
  virtual CiResult test(std::size_t i, std::size_t j, std::span<const std::size_t> cond) const = 0;
};

// Fisher-z test on partial correlations. The correlation matrix of the
// columns is computed once; each test inverts the small block it needs.
class FisherZTest final : public CiTest {
 public:
  FisherZTest(const Matrix& data, double alpha);

  std::size_t num_variables() const override { return corr_.rows(); }
  CiResult test(std::size_t i, std::size_t j, std::span<const std::size_t> cond) const override;

  // Throws Error(SingularSystem) when the block is numerically singular.
  double partial_correlation(std::size_t i, std::size_t j, std::span<const std::size_t> cond) const;

  const Matrix& correlation() const noexcept { return corr_; }

 private:
  Matrix corr_;
  std::size_t n_;
  double alpha_;
};

// One-shot Fisher-z test. Requires data.rows() > |cond| + 3.
CiResult fisher_z(const Matrix& data, std::size_t i, std::size_t j,
                  std::span<const std::size_t> cond, const CiTestConfig& config);

// Answers by d-separation in a known graph. Variable k is node column_nodes[k].
class DSeparationOracle final : public CiTest {
 public:
  DSeparationOracle(Dag dag, std::vector<NodeId> column_nodes);

  std::size_t num_variables() const override { return column_nodes_.size(); }
  CiResult test(std::size_t i, std::size_t j, std::span<const std::size_t> cond) const override;

 private:
  Dag dag_;
  std::vector<NodeId> column_nodes_;
};

enum class EdgeDirection { IToJ, JToI };

struct OrientationResult {
  EdgeDirection direction = EdgeDirection::IToJ;
  bool low_confidence = false;
  // Fit error of each causal hypothesis; lower wins.
  double error_i_to_j = 0.0;
  double error_j_to_i = 0.0;
};

inline constexpr double kReciTieTolerance = 1e-6;
inline constexpr double kReciLambda = 1e-6;
// Log-likelihood margin (nats) a binary->continuous hypothesis must win by.
inline constexpr double kMixedPairMargin = 1.0;

// Regression-error orientation: both columns standardized, each regressed
// on a cubic polynomial of the other; the direction with the smaller mean
// squared residual wins. Ties (within kReciTieTolerance) point from the
// lower to the higher column index and are flagged low-confidence, so the
// answer does not depend on argument order. Throws Error(ConstantColumn).
OrientationResult orient_reci(const Matrix& data, std::size_t i, std::size_t j);

// Orientation for a binary column b and a continuous column c. Compares
// the Gaussian log-likelihood of b -> c (c | b homoscedastic normal) with
// c -> b (c normal, b | c logistic). b -> c is chosen only when it wins by
// more than kMixedPairMargin nats.
OrientationResult orient_mixed_pair(const Matrix& data, std::size_t binary, std::size_t continuous);

class EdgeOrienter {
 public:
  virtual ~EdgeOrienter() = default;
  virtual OrientationResult orient(std::size_t i, std::size_t j) const = 0;
};

// Data-driven orientation: orient_mixed_pair when exactly one column is
// binary, orient_reci otherwise.
class DataOrienter final : public EdgeOrienter {
 public:
  explicit DataOrienter(const Matrix& data);
  OrientationResult orient(std::size_t i, std::size_t j) const override;

 private:
  const Matrix& data_;
  std::vector<bool> binary_;
};

// Reads directions off a known graph (for oracle runs).
class TrueDirectionOrienter final : public EdgeOrienter {
 public:
  TrueDirectionOrienter(Dag dag, std::vector<NodeId> column_nodes);
  OrientationResult orient(std::size_t i, std::size_t j) const override;

 private:
  Dag dag_;
  std::vector<NodeId> column_nodes_;
};

// PC-simple: level 0 drops marginally independent candidates; level l
// drops a survivor independent of the target given any size-l subset of
// the other survivors from level l-1.
ColumnSet pc_simple(const CiTest& ci, std::size_t target, const ColumnSet& candidates,
                    std::size_t max_cond);

// Members a, b of pc that are marginally independent but dependent given
// the target; both are parents of the target. Ascending.
ColumnSet discover_colliders(const CiTest& ci, std::size_t target, const ColumnSet& pc);

// Pairwise status of PC members a, b around the target. Separating sets
// are searched over subsets of `pool` plus the target with
// |S| <= max_cond + 1. A pair whose separating sets all exclude the target
// is a collider (then S u {target} was tested and found dependent); a pair
// whose separating sets all contain the target is a non-collider (at most
// one of the two is a parent). Mixed evidence and adjacent pairs are
// neither.
struct PairStatus {
  ColumnSet colliders;  // ascending
  std::vector<std::pair<std::size_t, std::size_t>> non_colliders;
};
PairStatus classify_pc_pairs(const CiTest& ci, std::size_t target, const ColumnSet& pc,
                             const ColumnSet& pool, std::size_t max_cond);

// Partially discovered structure around the T -> Y paths.
struct PartialGraph {
  std::size_t num_variables = 0;
  std::set<std::size_t> nodes;
  std::set<std::pair<std::size_t, std::size_t>> directed_edges;
  std::set<std::pair<std::size_t, std::size_t>> undirected_edges;  // low-confidence pairs
  std::set<std::size_t> discovered;
  std::deque<std::size_t> frontier;
  std::vector<std::string> labels;  // optional variable names for serialization

  bool has_edge(std::size_t from, std::size_t to) const {
    return directed_edges.contains({from, to});
  }
  bool has_path(std::size_t from, std::size_t to) const;
  // Includes v.
  std::set<std::size_t> descendants(std::size_t v) const;
  // Inserts from -> to unless it would close a cycle; returns success.
  bool add_edge(std::size_t from, std::size_t to);
  Dag to_dag() const;
};

nlohmann::json to_json(const PartialGraph& graph);

struct LocalStructure {
  ColumnSet pc;
  ColumnSet collider_parents;
  ColumnSet parents;
  ColumnSet children;
  ColumnSet low_confidence;  // members whose orientation was a near tie
};

// pc_simple, then classify_pc_pairs; collider members are parents and every
// other PC member is oriented by `orienter`. Edges already present in
// `known` are reused, and an orientation that would close a cycle in
// `known` is flipped. When two members of a non-collider pair both end up
// as parents, the one with the weaker orientation margin becomes a child.
LocalStructure local_structure(const CiTest& ci, const EdgeOrienter& orienter, std::size_t target,
                               const ColumnSet& candidates, std::size_t max_cond,
                               const PartialGraph* known = nullptr);

enum class PostDiscoveryRule { RemoveDescendants, OSet };

struct StructureFitConfig {
  CiTestConfig ci;
  PostDiscoveryRule rule = PostDiscoveryRule::RemoveDescendants;
};

struct StructureFitResult {
  ColumnSet selected;   // candidates kept
  ColumnSet forbidden;  // candidates removed
  PartialGraph graph;
  std::vector<std::string> flags;
};

// Variables are CI-test columns; t_col and y_col must not be candidates.
StructureFitResult structure_fit(const CiTest& ci, const EdgeOrienter& orienter, std::size_t t_col,
                                 std::size_t y_col, const ColumnSet& candidates,
                                 const StructureFitConfig& config = {});

// Data-driven run over feature columns `candidates` of x plus t and y.
// Result columns are feature indices; graph variables are the candidates
// in order followed by t and y.
StructureFitResult structure_fit_features(const Matrix& x, std::span<const double> t,
                                          std::span<const double> y, const ColumnSet& candidates,
                                          const StructureFitConfig& config = {});

// Henckel-style optimal adjustment set on a DAG: pa(cn) \ (de(cn) u {t}),
// cn = nodes other than t on directed t -> y paths. Sets *empty_causal_path
// when y is not a descendant of t.
std::vector<NodeId> optimal_adjustment_set(const Dag& dag, NodeId t, NodeId y,
                                           bool* empty_causal_path = nullptr);

}  // namespace htefs
