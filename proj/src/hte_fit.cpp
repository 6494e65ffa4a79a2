#include "htefs/hte_fit.hpp"

#include <algorithm>
#include <cmath>

#include "htefs/error.hpp"

namespace htefs {

bool improves(double candidate, double best, double rel_tol) {
  if (!std::isfinite(candidate)) return false;
  if (!std::isfinite(best)) return true;
  return candidate < best - rel_tol * std::abs(best);
}

namespace {

double safe_score(const SubsetScorer& scorer, const ColumnSet& set, std::size_t& evaluations) {
  ++evaluations;
  try {
    const double s = scorer(set);
    return std::isnan(s) ? std::numeric_limits<double>::infinity() : s;
  } catch (const std::exception& e) {
    log_warning(std::string("candidate subset failed to score: ") + e.what());
    return std::numeric_limits<double>::infinity();
  }
}

// Lower score wins; equal scores go to the lower column index.
bool better(double s, std::size_t c, double best_s, std::size_t best_c) {
  return s < best_s || (s == best_s && c < best_c);
}

}  // namespace

SelectionTrace forward_select(const ColumnSet& candidates, const SubsetScorer& scorer,
                              const SelectionOptions& options) {
  if (candidates.empty()) throw Error(ErrorCode::InvalidArgument, "forward selection needs a candidate");
  SelectionTrace trace;
  trace.direction = Direction::Forward;

  ColumnSet remaining = candidates;
  double best = std::numeric_limits<double>::infinity();
  bool first = true;
  while (!remaining.empty()) {
    std::size_t step_begin = trace.steps.size();
    double round_best = std::numeric_limits<double>::infinity();
    std::size_t round_col = static_cast<std::size_t>(-1);
    std::size_t round_idx = 0;
    for (std::size_t r = 0; r < remaining.size(); ++r) {
      ColumnSet set = trace.final_set;
      set.push_back(remaining[r]);
      const double s = safe_score(scorer, set, trace.evaluations);
      trace.steps.push_back({remaining[r], s, false});
      if (std::isfinite(s) && better(s, remaining[r], round_best, round_col)) {
        round_best = s;
        round_col = remaining[r];
        round_idx = r;
      }
    }
    if (first && !std::isfinite(round_best))
      throw Error(ErrorCode::AllCandidatesFailed, "every single-column candidate failed to score");
    if (!first && !improves(round_best, best, options.rel_tol)) break;
    trace.steps[step_begin + round_idx].accepted = true;
    trace.final_set.push_back(round_col);
    best = round_best;
    remaining.erase(remaining.begin() + static_cast<long>(round_idx));
    first = false;
  }
  trace.final_score = best;
  return trace;
}

SelectionTrace backward_select(const ColumnSet& candidates, const SubsetScorer& scorer,
                               const SelectionOptions& options) {
  if (candidates.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "backward selection needs at least two candidates");
  SelectionTrace trace;
  trace.direction = Direction::Backward;

  ColumnSet current = candidates;
  std::sort(current.begin(), current.end());
  double best = safe_score(scorer, current, trace.evaluations);
  trace.steps.push_back({std::nullopt, best, true});

  // First-improvement removal; the scan restarts after every removal.
  bool changed = true;
  while (changed && current.size() > 1) {
    changed = false;
    for (std::size_t r = 0; r < current.size(); ++r) {
      ColumnSet set = current;
      set.erase(set.begin() + static_cast<long>(r));
      const double s = safe_score(scorer, set, trace.evaluations);
      const bool ok = improves(s, best, options.rel_tol);
      trace.steps.push_back({current[r], s, ok});
      if (ok) {
        trace.removed.push_back(current[r]);
        current = std::move(set);
        best = s;
        changed = true;
        break;
      }
    }
  }
  if (!std::isfinite(best) && trace.removed.empty())
    throw Error(ErrorCode::AllCandidatesFailed, "no candidate subset could be scored");
  trace.final_set = current;
  trace.final_score = best;
  return trace;
}

SelectionTrace hte_fit(const Matrix& x, std::span<const double> t, std::span<const double> y,
                       const HteFitConfig& config) {
  const MetricEvaluator evaluator(x, t, y, config.metric, config.metric_options);
  const SubsetScorer scorer = [&](const ColumnSet& cols) { return evaluator.score(cols); };
  ColumnSet all(x.cols());
  for (std::size_t c = 0; c < all.size(); ++c) all[c] = c;
  SelectionTrace trace = config.direction == Direction::Backward && all.size() >= 2
                             ? backward_select(all, scorer, config.selection)
                             : forward_select(all, scorer, config.selection);
  trace.metric = std::string(to_string(config.metric));
  return trace;
}

nlohmann::json to_json(const SelectionTrace& trace) {
  nlohmann::json steps = nlohmann::json::array();
  for (const auto& s : trace.steps) {
    nlohmann::json j{{"score", std::isfinite(s.score) ? nlohmann::json(s.score) : nlohmann::json(nullptr)},
                     {"accepted", s.accepted}};
    j["candidate"] = s.candidate ? nlohmann::json(*s.candidate) : nlohmann::json(nullptr);
    steps.push_back(std::move(j));
  }
  return {{"direction", trace.direction == Direction::Forward ? "forward" : "backward"},
          {"metric", trace.metric},
          {"steps", steps},
          {"final_set", trace.final_set},
          {"removed", trace.removed},
          {"final_score", std::isfinite(trace.final_score) ? nlohmann::json(trace.final_score)
                                                          : nlohmann::json(nullptr)},
          {"evaluations", trace.evaluations}};
}

}  // namespace htefs
