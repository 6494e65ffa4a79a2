#pragma once

// Greedy metric-guided feature selection (forward and backward).

#include <functional>
#include <limits>
#include <optional>
#include <string>

#include <json.hpp>

#include "htefs/fit_metrics.hpp"
#include "htefs/matrix.hpp"

namespace htefs {

// Lower is better. May throw; a throwing candidate scores +inf.
using SubsetScorer = std::function<double(const ColumnSet&)>;

enum class Direction { Forward, Backward };

struct SelectionStep {
  std::optional<std::size_t> candidate;  // empty for the full-set baseline
  double score = std::numeric_limits<double>::infinity();
  bool accepted = false;
};

struct SelectionTrace {
  std::vector<SelectionStep> steps;
  ColumnSet final_set;  // forward: in acceptance order; backward: ascending
  ColumnSet removed;    // backward only, in removal order
  double final_score = std::numeric_limits<double>::infinity();
  std::string metric;
  Direction direction = Direction::Forward;
  std::size_t evaluations = 0;
};

struct SelectionOptions {
  double rel_tol = 1e-6;
};

// True when `candidate` beats `best` by more than rel_tol (relative).
bool improves(double candidate, double best, double rel_tol);

// Throws Error(AllCandidatesFailed) if every single-column score is +inf.
SelectionTrace forward_select(const ColumnSet& candidates, const SubsetScorer& scorer,
                              const SelectionOptions& options = {});

// Requires at least two candidates.
SelectionTrace backward_select(const ColumnSet& candidates, const SubsetScorer& scorer,
                               const SelectionOptions& options = {});

struct HteFitConfig {
  Direction direction = Direction::Forward;
  MetricKind metric = MetricKind::TauRisk;
  MetricOptions metric_options;  // estimator kind, lambdas, inner split seed
  SelectionOptions selection;
};

// Runs selection over all columns of x with a MetricEvaluator scorer.
SelectionTrace hte_fit(const Matrix& x, std::span<const double> t, std::span<const double> y,
                       const HteFitConfig& config);

nlohmann::json to_json(const SelectionTrace& trace);

}  // namespace htefs
