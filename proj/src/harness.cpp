#include "htefs/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "htefs/adjustment.hpp"
#include "htefs/error.hpp"
#include "htefs/scm_io.hpp"

namespace htefs {

using nlohmann::json;

std::string_view to_string(SelectorKind kind) {
  switch (kind) {
    case SelectorKind::None: return "None";
    case SelectorKind::HteFitF: return "HteFitF";
    case SelectorKind::HteFitB: return "HteFitB";
    case SelectorKind::StructureFit: return "StructureFit";
    case SelectorKind::HteFS: return "HteFS";
    case SelectorKind::OracleParents: return "OracleParents";
    case SelectorKind::OracleValid: return "OracleValid";
    case SelectorKind::OracleOSet: return "OracleOSet";
  }
  return "?";
}

SelectorKind selector_from_string(std::string_view name) {
  for (auto k : {SelectorKind::None, SelectorKind::HteFitF, SelectorKind::HteFitB, SelectorKind::StructureFit,
                 SelectorKind::HteFS, SelectorKind::OracleParents, SelectorKind::OracleValid,
                 SelectorKind::OracleOSet})
    if (to_string(k) == name) return k;
  throw Error(ErrorCode::InvalidArgument, "unknown selector '" + std::string(name) + "'");
}

bool uses_metric(SelectorKind kind) {
  return kind == SelectorKind::HteFitF || kind == SelectorKind::HteFitB || kind == SelectorKind::HteFS;
}

bool needs_graph(SelectorKind kind) {
  return kind == SelectorKind::OracleParents || kind == SelectorKind::OracleValid ||
         kind == SelectorKind::OracleOSet;
}

std::string MethodSpec::id() const {
  std::string s(to_string(selector));
  if (uses_metric(selector)) s += "(" + std::string(to_string(metric)) + ")";
  return s + "+" + std::string(to_string(estimator));
}

bool BenchmarkRow::failed() const { return std::isnan(mse); }

// ---- config ----------------------------------------------------------------

std::vector<json> ScmGrid::cells() const {
  std::vector<json> out{json::object()};
  for (const auto& key : grid) {
    const json& values = fields.at(key);
    std::vector<json> next;
    for (const auto& cell : out)
      for (const auto& v : values) {
        json c = cell;
        c[key] = v;
        next.push_back(std::move(c));
      }
    out = std::move(next);
  }
  return out;
}

ScmSpec ScmGrid::draw(const json& cell, Rng& rng) const {
  json picked = json::object();
  for (const auto& [key, value] : fields.items()) {
    if (cell.contains(key)) picked[key] = cell.at(key);
    else if (value.is_array()) picked[key] = value.at(rng.index(value.size()));
    else picked[key] = value;
  }
  return spec_from_json(picked);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
  if (methods.empty()) fail("at least one method is required");
  if (replicates < 1) fail("replicates must be at least 1");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) fail("split_ratio must lie in (0, 1)");
  if (threads < 1) fail("threads must be at least 1");
  if (!scm.fields.is_object()) fail("scm must be an object");
  for (const auto& [key, value] : scm.fields.items())
    if (value.is_array() && value.empty()) fail("scm field '" + key + "' has no values");
  for (const auto& key : scm.grid) {
    if (!scm.fields.contains(key)) fail("grid field '" + key + "' is not in scm");
    if (!scm.fields.at(key).is_array()) fail("grid field '" + key + "' must be a list");
  }
  // Every combination must at least parse.
  json probe = json::object();
  for (const auto& [key, value] : scm.fields.items()) probe[key] = value.is_array() ? value.front() : value;
  spec_from_json(probe);
  structure.ci.validate();
}

namespace {

PostDiscoveryRule rule_from_string(const std::string& s) {
  if (s == "remove_descendants") return PostDiscoveryRule::RemoveDescendants;
  if (s == "oset") return PostDiscoveryRule::OSet;
  throw Error(ErrorCode::InvalidArgument, "unknown post-discovery rule '" + s + "'");
}

Direction direction_from_string(const std::string& s) {
  if (s == "forward") return Direction::Forward;
  if (s == "backward") return Direction::Backward;
  throw Error(ErrorCode::InvalidArgument, "unknown direction '" + s + "'");
}

}  // namespace

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorCode::ParseError, "config must be a JSON object");
    static const std::set<std::string> known{"scm",     "grid",          "replicates",        "methods",
                                             "split_ratio", "master_seed", "threads",         "record_timing",
                                             "structure",   "hte_fs_direction", "estimator_options",
                                             "results_path", "traces_path"};
    for (const auto& [key, value] : j.items())
      if (!known.contains(key)) throw Error(ErrorCode::ParseError, "unknown config field '" + key + "'");
    c.scm.fields = j.value("scm", json::object());
    c.scm.grid = j.value("grid", std::vector<std::string>{});
    c.replicates = j.value("replicates", std::size_t{1});
    for (const auto& m : j.at("methods")) {
      MethodSpec spec;
      spec.selector = selector_from_string(m.at("selector").get<std::string>());
      spec.estimator = estimator_from_string(m.value("estimator", std::string("T")));
      spec.metric = metric_from_string(m.value("metric", std::string("tau_risk")));
      c.methods.push_back(spec);
    }
    c.split_ratio = j.value("split_ratio", 0.8);
    c.master_seed = j.value("master_seed", std::uint64_t{0});
    c.threads = j.value("threads", std::size_t{1});
    c.record_timing = j.value("record_timing", false);
    if (j.contains("structure")) {
      const auto& s = j.at("structure");
      c.structure.ci.alpha = s.value("alpha", 0.05);
      c.structure.ci.max_cond = s.value("max_cond", std::size_t{3});
      c.structure.rule = rule_from_string(s.value("rule", std::string("remove_descendants")));
    }
    c.hte_fs_direction = direction_from_string(j.value("hte_fs_direction", std::string("forward")));
    if (j.contains("estimator_options")) {
      const auto& e = j.at("estimator_options");
      c.estimator_options.outcome_lambda = e.value("outcome_lambda", kOutcomeLambda);
      c.estimator_options.propensity_lambda = e.value("propensity_lambda", kPropensityLambda);
    }
    c.results_path = j.value("results_path", std::string());
    c.traces_path = j.value("traces_path", std::string());
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

json to_json(const ExperimentConfig& c) {
  json methods = json::array();
  for (const auto& m : c.methods)
    methods.push_back({{"selector", to_string(m.selector)},
                       {"estimator", to_string(m.estimator)},
                       {"metric", to_string(m.metric)}});
  return {{"scm", c.scm.fields},
          {"grid", c.scm.grid},
          {"replicates", c.replicates},
          {"methods", methods},
          {"split_ratio", c.split_ratio},
          {"master_seed", c.master_seed},
          {"threads", c.threads},
          {"record_timing", c.record_timing},
          {"structure",
           {{"alpha", c.structure.ci.alpha},
            {"max_cond", c.structure.ci.max_cond},
            {"rule", c.structure.rule == PostDiscoveryRule::OSet ? "oset" : "remove_descendants"}}},
          {"hte_fs_direction", c.hte_fs_direction == Direction::Forward ? "forward" : "backward"},
          {"estimator_options",
           {{"outcome_lambda", c.estimator_options.outcome_lambda},
            {"propensity_lambda", c.estimator_options.propensity_lambda}}},
          {"results_path", c.results_path},
          {"traces_path", c.traces_path}};
}

// ---- selection -------------------------------------------------------------

ColumnSet combine_stages(const ColumnSet& hte_fit_set, const ColumnSet& forbidden, bool* fallback) {
  ColumnSet out;
  for (std::size_t c : hte_fit_set)
    if (std::find(forbidden.begin(), forbidden.end(), c) == forbidden.end()) out.push_back(c);
  const bool fb = out.empty() && !hte_fit_set.empty();
  if (fallback) *fallback = fb;
  return fb ? hte_fit_set : out;
}

HteFsResult hte_fs(const Matrix& x, std::span<const double> t, std::span<const double> y,
                   const HteFsConfig& config) {
  HteFsResult res;
  res.hte_fit = hte_fit(x, t, y, config.hte_fit);
  ColumnSet g = res.hte_fit.final_set;
  std::sort(g.begin(), g.end());
  res.structure = structure_fit_features(x, t, y, g, config.structure);
  res.selected = combine_stages(g, res.structure.forbidden, &res.fallback);
  return res;
}

namespace {

ColumnSet all_columns(std::size_t k) {
  ColumnSet c(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = i;
  return c;
}

HteFitConfig make_hte_fit_config(const MethodSpec& method, Direction direction, const SelectorContext& ctx) {
  HteFitConfig cfg;
  cfg.direction = direction;
  cfg.metric = method.metric;
  cfg.metric_options.seed = ctx.seed;
  cfg.metric_options.estimator = method.estimator;
  cfg.metric_options.estimator_options = ctx.estimator_options;
  return cfg;
}

}  // namespace

Selection run_selector(const MethodSpec& method, const Dataset& train, const CausalGraph* graph,
                       const SelectorContext& ctx) {
  Selection sel;
  const std::size_t k = train.num_features();
  if (needs_graph(method.selector) && !graph)
    throw Error(ErrorCode::InvalidArgument, "oracle selector needs the causal graph");
  switch (method.selector) {
    case SelectorKind::None:
      sel.columns = all_columns(k);
      break;
    case SelectorKind::HteFitF:
    case SelectorKind::HteFitB: {
      const auto dir = method.selector == SelectorKind::HteFitF ? Direction::Forward : Direction::Backward;
      const auto trace = hte_fit(train.x, train.t, train.y, make_hte_fit_config(method, dir, ctx));
      sel.columns = trace.final_set;
      sel.trace = to_json(trace);
      break;
    }
    case SelectorKind::StructureFit: {
      const auto r = structure_fit_features(train.x, train.t, train.y, all_columns(k), ctx.structure);
      sel.columns = r.selected;
      sel.flags = r.flags;
      sel.trace = {{"graph", to_json(r.graph)}, {"forbidden", r.forbidden}};
      break;
    }
    case SelectorKind::HteFS: {
      HteFsConfig cfg;
      cfg.hte_fit = make_hte_fit_config(method, ctx.hte_fs_direction, ctx);
      cfg.structure = ctx.structure;
      const auto r = hte_fs(train.x, train.t, train.y, cfg);
      sel.columns = r.selected;
      sel.flags = r.structure.flags;
      if (r.fallback) sel.flags.push_back("fallback_hte_fit");
      sel.trace = {{"hte_fit", to_json(r.hte_fit)},
                   {"graph", to_json(r.structure.graph)},
                   {"forbidden", r.structure.forbidden}};
      break;
    }
    case SelectorKind::OracleParents:
    case SelectorKind::OracleValid:
    case SelectorKind::OracleOSet: {
      const auto mode = method.selector == SelectorKind::OracleParents ? AdjustmentMode::Parents
                        : method.selector == SelectorKind::OracleValid ? AdjustmentMode::Valid
                                                                       : AdjustmentMode::OSet;
      const auto r = oracle_adjustment(*graph, mode);
      sel.columns = r.columns;
      if (r.empty_causal_path) sel.flags.push_back("empty_causal_path");
      break;
    }
  }
  std::sort(sel.columns.begin(), sel.columns.end());
  return sel;
}

// ---- experiment ------------------------------------------------------------

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string sanitize(std::string s) {
  std::replace(s.begin(), s.end(), ',', ' ');
  std::replace(s.begin(), s.end(), ';', ' ');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

BenchmarkRow base_row(std::size_t scm_id, const MethodSpec& m) {
  BenchmarkRow row;
  row.scm_id = scm_id;
  row.method = m.id();
  row.selector = m.selector;
  row.estimator = m.estimator;
  if (uses_metric(m.selector)) row.metric = m.metric;
  return row;
}

BenchmarkRow failed_row(std::size_t scm_id, const MethodSpec& m, const std::string& why) {
  BenchmarkRow row = base_row(scm_id, m);
  row.mse = kNaN;
  row.tau_risk = kNaN;
  row.flags.push_back("failed:" + sanitize(why));
  return row;
}

}  // namespace

ReplicateResult evaluate_replicate(const Scm& scm, std::size_t scm_id, const RowSplit& split,
                                   const ExperimentConfig& config, std::uint64_t stream_seed) {
  ReplicateResult out;
  const Dataset train = scm.data.subset_rows(split.first);
  const Dataset test = scm.data.subset_rows(split.second);

  SelectorContext ctx;
  ctx.seed = derive_seed(stream_seed, 2);
  ctx.structure = config.structure;
  ctx.estimator_options = config.estimator_options;
  ctx.hte_fs_direction = config.hte_fs_direction;

  // tau-risk on the test rows uses nuisances fit on the training rows.
  std::vector<double> m_hat, p_hat;
  std::string nuisance_error;
  try {
    m_hat = predict(fit_ridge(train.x, train.y, config.estimator_options.outcome_lambda), test.x);
    p_hat = predict(fit_logistic(train.x, train.t, config.estimator_options.propensity_lambda), test.x);
  } catch (const std::exception& e) {
    nuisance_error = e.what();
  }

  json methods = json::array();
  for (const auto& method : config.methods) {
    const auto start = std::chrono::steady_clock::now();
    try {
      Selection sel = run_selector(method, train, &scm.graph, ctx);
      const Matrix xtr = train.x.select_columns(sel.columns);
      const Matrix xte = test.x.select_columns(sel.columns);
      const auto est = fit_cate(method.estimator, xtr, train.t, train.y, config.estimator_options);
      const auto tau_hat = est.predict(xte);

      BenchmarkRow row = base_row(scm_id, method);
      row.selected = sel.columns;
      row.mse = mse_true(tau_hat, test.tau);
      row.tau_risk = nuisance_error.empty() ? tau_risk(tau_hat, test.y, test.t, m_hat, p_hat) : kNaN;
      row.inclusion_error = inclusion_error(sel.columns, scm.data.post_treatment_mask);
      row.flags = sel.flags;
      if (!nuisance_error.empty()) row.flags.push_back("tau_risk_unavailable");
      if (config.record_timing)
        row.wall_millis =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
      out.rows.push_back(std::move(row));
      methods.push_back({{"method", method.id()}, {"selected", sel.columns}, {"trace", sel.trace}});
    } catch (const std::exception& e) {
      out.rows.push_back(failed_row(scm_id, method, e.what()));
      methods.push_back({{"method", method.id()}, {"error", e.what()}});
    }
  }
  out.traces = json{{"scm_id", scm_id}, {"methods", methods}};
  return out;
}

void assign_ranks(std::vector<BenchmarkRow>& rows) {
  std::map<std::size_t, std::vector<std::size_t>> by_scm;
  for (std::size_t r = 0; r < rows.size(); ++r) by_scm[rows[r].scm_id].push_back(r);
  for (const auto& [id, idx] : by_scm) {
    std::vector<double> mse;
    for (std::size_t r : idx) mse.push_back(rows[r].mse);
    const auto ranks = fractional_ranks(mse);
    for (std::size_t q = 0; q < idx.size(); ++q) rows[idx[q]].rank = ranks[q];
  }
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto cells = config.scm.cells();
  const std::size_t total = cells.size() * config.replicates;
  std::vector<ReplicateResult> results(total);

  auto run_one = [&](std::size_t scm_id) {
    const auto& cell = cells[scm_id / config.replicates];
    const std::uint64_t stream = derive_seed(config.master_seed, scm_id);
    Rng rng(stream);
    ScmSpec spec;
    try {
      spec = config.scm.draw(cell, rng);
      spec.seed = rng.next_u64();
      const Scm scm = simulate(spec);
      const auto split = stratified_split(scm.data.t, config.split_ratio, derive_seed(stream, 1));
      results[scm_id] = evaluate_replicate(scm, scm_id, split, config, stream);
      results[scm_id].traces["spec"] = to_json(spec);
    } catch (const std::exception& e) {
      ReplicateResult r;
      for (const auto& m : config.methods) r.rows.push_back(failed_row(scm_id, m, std::string("scm ") + e.what()));
      r.traces = json{{"scm_id", scm_id}, {"error", e.what()}};
      results[scm_id] = std::move(r);
    }
  };

  const std::size_t workers = std::min(config.threads, std::max<std::size_t>(total, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < total; ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < total; i = next++) run_one(i);
      });
    for (auto& th : pool) th.join();
  }

  ExperimentResult out;
  for (auto& r : results) {
    std::move(r.rows.begin(), r.rows.end(), std::back_inserter(out.rows));
    out.traces.push_back(std::move(r.traces));
  }
  assign_ranks(out.rows);
  return out;
}

}  // namespace htefs
