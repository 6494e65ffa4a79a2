// Command-line front end: simulate, select, benchmark, report.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "htefs/error.hpp"
#include "htefs/harness.hpp"
#include "htefs/scm_io.hpp"

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

// Marks errors caused by user input rather than by the computation.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("'" + path + "' is not valid JSON: " + e.what());
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  return out;
}

bool is_config_error(htefs::ErrorCode code) {
  using htefs::ErrorCode;
  return code == ErrorCode::InvalidArgument || code == ErrorCode::ParseError;
}

struct SimulateArgs {
  std::string spec_path, csv_path, graph_path;
  std::optional<std::size_t> d, m, p_h, n;
  std::optional<double> p_e, sigma, rho;
  std::optional<bool> gamma, m_p;
  std::uint64_t seed = 0;
};

int run_simulate(const SimulateArgs& a) {
  htefs::ScmSpec spec;
  if (!a.spec_path.empty()) spec = htefs::spec_from_json(read_json_file(a.spec_path));
  if (a.d) spec.d = *a.d;
  if (a.m) spec.m = *a.m;
  if (a.p_h) spec.p_h = *a.p_h;
  if (a.n) spec.n = *a.n;
  if (a.p_e) spec.p_e = *a.p_e;
  if (a.sigma) spec.sigma = *a.sigma;
  if (a.rho) spec.rho = *a.rho;
  if (a.gamma) spec.gamma = *a.gamma;
  if (a.m_p) spec.m_p = *a.m_p;
  spec.seed = a.seed;
  spec.validate();

  const auto scm = htefs::simulate(spec);
  if (a.csv_path.empty()) {
    htefs::write_dataset_csv(std::cout, scm.data);
  } else {
    auto out = open_out(a.csv_path);
    htefs::write_dataset_csv(out, scm.data);
  }
  if (!a.graph_path.empty()) {
    auto out = open_out(a.graph_path);
    out << htefs::to_json(scm.graph, spec).dump(2) << '\n';
  }
  return 0;
}

struct SelectArgs {
  std::string data_path, graph_path;
  std::string selector = "HteFS", estimator = "T", metric = "tau_risk", direction = "forward";
  double alpha = 0.05;
  std::size_t max_cond = 3;
  std::uint64_t seed = 0;
};

int run_select(const SelectArgs& a) {
  htefs::MethodSpec method;
  method.selector = htefs::selector_from_string(a.selector);
  method.estimator = htefs::estimator_from_string(a.estimator);
  method.metric = htefs::metric_from_string(a.metric);

  std::ifstream in(a.data_path);
  if (!in) throw ConfigError("cannot open '" + a.data_path + "'");
  htefs::Dataset data = htefs::read_dataset_csv(in);
  std::optional<htefs::CausalGraph> graph;
  if (!a.graph_path.empty()) {
    graph = htefs::graph_from_json(read_json_file(a.graph_path));
    htefs::attach_graph(data, *graph);
  }
  if (htefs::needs_graph(method.selector) && !graph)
    throw ConfigError("selector " + a.selector + " needs --graph");

  htefs::SelectorContext ctx;
  ctx.seed = a.seed;
  ctx.structure.ci.alpha = a.alpha;
  ctx.structure.ci.max_cond = a.max_cond;
  ctx.structure.ci.validate();
  if (a.direction == "backward") ctx.hte_fs_direction = htefs::Direction::Backward;
  else if (a.direction != "forward") throw ConfigError("--direction must be forward or backward");

  const auto sel = htefs::run_selector(method, data, graph ? &*graph : nullptr, ctx);
  nlohmann::json out{{"method", method.id()}, {"selected", sel.columns}, {"flags", sel.flags},
                     {"trace", sel.trace}};
  if (graph) {
    const auto ie = htefs::inclusion_error(sel.columns, data.post_treatment_mask);
    out["inclusion_error"] = ie.defined ? nlohmann::json(ie.value) : nlohmann::json(nullptr);
  }
  std::cout << out.dump(2) << '\n';
  return 0;
}

struct BenchmarkArgs {
  std::string config_path, results_path, traces_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  bool quiet = false;
};

int run_benchmark(const BenchmarkArgs& a) {
  auto config = htefs::experiment_config_from_json(read_json_file(a.config_path));
  if (a.seed) config.master_seed = *a.seed;
  if (a.threads) config.threads = *a.threads;
  if (!a.results_path.empty()) config.results_path = a.results_path;
  if (!a.traces_path.empty()) config.traces_path = a.traces_path;
  config.validate();

  htefs::set_warnings_muted(a.quiet);
  const auto result = htefs::run_experiment(config);
  if (config.results_path.empty()) {
    htefs::write_results_csv(std::cout, result.rows);
  } else {
    auto out = open_out(config.results_path);
    htefs::write_results_csv(out, result.rows);
  }
  if (!config.traces_path.empty()) {
    auto out = open_out(config.traces_path);
    out << result.traces.dump() << '\n';
  }
  if (!config.results_path.empty()) std::cerr << htefs::format_report(htefs::report(result.rows));
  return 0;
}

int run_report(const std::string& path, bool as_json) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  const auto summary = htefs::report(htefs::read_results_csv(in));
  if (as_json) std::cout << htefs::to_json(summary).dump(2) << '\n';
  else std::cout << htefs::format_report(summary);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal feature selection for heterogeneous treatment effect estimation"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Sample an SCM and write its dataset and graph");
  simulate->add_option("--spec", sim.spec_path, "ScmSpec JSON file");
  simulate->add_option("--seed", sim.seed, "RNG seed")->required();
  simulate->add_option("--out", sim.csv_path, "Dataset CSV (stdout if omitted)");
  simulate->add_option("--graph", sim.graph_path, "Graph JSON sidecar");
  simulate->add_option("--d", sim.d);
  simulate->add_option("--p-e", sim.p_e);
  simulate->add_option("--sigma", sim.sigma);
  simulate->add_option("--rho", sim.rho);
  simulate->add_option("--gamma", sim.gamma);
  simulate->add_option("--m", sim.m);
  simulate->add_option("--p-h", sim.p_h);
  simulate->add_option("--m-p", sim.m_p);
  simulate->add_option("--n", sim.n);

  SelectArgs sel;
  auto* select = app.add_subcommand("select", "Run one selector on a dataset");
  select->add_option("--data", sel.data_path, "Dataset CSV")->required();
  select->add_option("--graph", sel.graph_path, "Graph JSON (needed by oracle selectors)");
  select->add_option("--selector", sel.selector)->capture_default_str();
  select->add_option("--estimator", sel.estimator)->capture_default_str();
  select->add_option("--metric", sel.metric)->capture_default_str();
  select->add_option("--direction", sel.direction, "HTE-Fit direction inside HteFS")->capture_default_str();
  select->add_option("--alpha", sel.alpha)->capture_default_str();
  select->add_option("--max-cond", sel.max_cond)->capture_default_str();
  select->add_option("--seed", sel.seed, "Seed for the inner metric split")->required();

  BenchmarkArgs bench;
  auto* benchmark = app.add_subcommand("benchmark", "Run an experiment configuration");
  benchmark->add_option("--config", bench.config_path, "ExperimentConfig JSON")->required();
  benchmark->add_option("--seed", bench.seed, "Master seed (overrides the config)");
  benchmark->add_option("--threads", bench.threads);
  benchmark->add_option("--out", bench.results_path, "Results CSV (stdout if omitted)");
  benchmark->add_option("--traces", bench.traces_path, "Selection traces JSON");
  benchmark->add_flag("--quiet", bench.quiet, "Mute warnings");

  std::string report_path;
  bool report_json = false;
  auto* rep = app.add_subcommand("report", "Aggregate a results CSV");
  rep->add_option("--results", report_path, "Results CSV")->required();
  rep->add_flag("--json", report_json);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*select) return run_select(sel);
    if (*benchmark) return run_benchmark(bench);
    if (*rep) return run_report(report_path, report_json);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const htefs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return is_config_error(e.code()) ? kConfigError : kRuntimeError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
  return 0;
}
