#pragma once

// End-to-end pipeline: combined selection (HTE-Fit followed by
// Structure-Fit), the replicate experiment runner, result persistence and
// aggregation.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "htefs/estimators.hpp"
#include "htefs/fit_metrics.hpp"
#include "htefs/hte_fit.hpp"
#include "htefs/scm.hpp"
#include "htefs/structure_fit.hpp"

namespace htefs {

enum class SelectorKind {
  None,
  HteFitF,
  HteFitB,
  StructureFit,
  HteFS,
  OracleParents,
  OracleValid,
  OracleOSet,
};

std::string_view to_string(SelectorKind kind);
SelectorKind selector_from_string(std::string_view name);
bool uses_metric(SelectorKind kind);
bool needs_graph(SelectorKind kind);

struct MethodSpec {
  SelectorKind selector = SelectorKind::None;
  EstimatorKind estimator = EstimatorKind::T;
  MetricKind metric = MetricKind::TauRisk;

  // "<selector>+<estimator>" with "(<metric>)" appended for metric-guided selectors.
  std::string id() const;
};

// ScmSpec fields, each a scalar or an array. Array fields named in `grid`
// are crossed into cells; other array fields are drawn uniformly per
// replicate.
struct ScmGrid {
  nlohmann::json fields = nlohmann::json::object();
  std::vector<std::string> grid;

  std::vector<nlohmann::json> cells() const;
  ScmSpec draw(const nlohmann::json& cell, Rng& rng) const;
};

struct ExperimentConfig {
  ScmGrid scm;
  std::size_t replicates = 1;  // per grid cell
  std::vector<MethodSpec> methods;
  double split_ratio = 0.8;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  bool record_timing = false;  // wall_millis stays empty otherwise so reruns are byte-identical
  StructureFitConfig structure;
  Direction hte_fs_direction = Direction::Forward;
  EstimatorOptions estimator_options;
  std::string results_path;
  std::string traces_path;

  // Throws Error(InvalidArgument).
  void validate() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ExperimentConfig& config);

struct BenchmarkRow {
  std::size_t scm_id = 0;
  std::string method;
  SelectorKind selector = SelectorKind::None;
  EstimatorKind estimator = EstimatorKind::T;
  std::optional<MetricKind> metric;
  ColumnSet selected;
  double mse = 0.0;  // NaN for failed cells
  double tau_risk = 0.0;
  InclusionError inclusion_error;
  double rank = 0.0;
  std::optional<double> wall_millis;
  std::vector<std::string> flags;

  bool failed() const;
};

struct HteFsConfig {
  HteFitConfig hte_fit;
  StructureFitConfig structure;
};

struct HteFsResult {
  ColumnSet selected;
  SelectionTrace hte_fit;
  StructureFitResult structure;
  bool fallback = false;  // discovery removed everything; HTE-Fit output kept
};

// X^(g) minus forbidden columns, or X^(g) itself when nothing would remain.
ColumnSet combine_stages(const ColumnSet& hte_fit_set, const ColumnSet& forbidden, bool* fallback);

HteFsResult hte_fs(const Matrix& x, std::span<const double> t, std::span<const double> y,
                   const HteFsConfig& config);

struct SelectorContext {
  std::uint64_t seed = 0;
  StructureFitConfig structure;
  EstimatorOptions estimator_options;
  Direction hte_fs_direction = Direction::Forward;
};

struct Selection {
  ColumnSet columns;
  nlohmann::json trace = nlohmann::json::object();
  std::vector<std::string> flags;
};

// Selects columns using only `train`. `graph` is required by oracle selectors.
Selection run_selector(const MethodSpec& method, const Dataset& train, const CausalGraph* graph,
                       const SelectorContext& context);

struct ReplicateResult {
  std::vector<BenchmarkRow> rows;
  nlohmann::json traces = nlohmann::json::array();
};

// Runs every configured method on one SCM: selection and fitting see only
// the training rows; MSE and tau-risk are computed on the test rows.
ReplicateResult evaluate_replicate(const Scm& scm, std::size_t scm_id, const RowSplit& split,
                                   const ExperimentConfig& config, std::uint64_t stream_seed);

// Fills the rank of every row by MSE within its SCM.
void assign_ranks(std::vector<BenchmarkRow>& rows);

struct ExperimentResult {
  std::vector<BenchmarkRow> rows;
  nlohmann::json traces = nlohmann::json::array();
};

ExperimentResult run_experiment(const ExperimentConfig& config);

inline constexpr std::string_view kResultsHeader =
    "scm_id,method,selector,estimator,metric,n_selected,selected,mse,tau_risk,inclusion_error,"
    "rank,wall_millis,flags";

void write_results_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows);
std::vector<BenchmarkRow> read_results_csv(std::istream& in);

struct MethodSummary {
  std::string method;
  double mean_rank = 0.0;
  double sd_rank = 0.0;
  std::size_t scms = 0;
  double mean_mse = 0.0;
  double mean_inclusion_error = 0.0;  // over rows with a defined value
  std::size_t inclusion_error_count = 0;
  std::size_t failures = 0;
};

struct ReportSummary {
  std::vector<MethodSummary> methods;
  double random_inclusion_reference = 0.5;
};

ReportSummary report(const std::vector<BenchmarkRow>& rows);
std::string format_report(const ReportSummary& summary);
nlohmann::json to_json(const ReportSummary& summary);

}  // namespace htefs
