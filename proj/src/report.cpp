#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>

#include "htefs/error.hpp"
#include "htefs/harness.hpp"
#include "htefs/scm_io.hpp"

namespace htefs {

namespace {

std::string join(const std::vector<std::string>& parts, char sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "results line " + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  std::size_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError, "results line " + std::to_string(line) + ": bad integer '" + s + "'");
  return v;
}

}  // namespace

void write_results_csv(std::ostream& out, const std::vector<BenchmarkRow>& rows) {
  out << kResultsHeader << '\n';
  for (const auto& r : rows) {
    std::vector<std::string> sel;
    for (std::size_t c : r.selected) sel.push_back(std::to_string(c));
    out << r.scm_id << ',' << r.method << ',' << to_string(r.selector) << ',' << to_string(r.estimator) << ','
        << (r.metric ? std::string(to_string(*r.metric)) : std::string()) << ',' << r.selected.size() << ','
        << join(sel, ' ') << ',' << format_double(r.mse) << ',' << format_double(r.tau_risk) << ','
        << (r.inclusion_error.defined ? format_double(r.inclusion_error.value) : std::string()) << ','
        << format_double(r.rank) << ',' << (r.wall_millis ? format_double(*r.wall_millis) : std::string())
        << ',' << join(r.flags, ';') << '\n';
  }
}

std::vector<BenchmarkRow> read_results_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "results: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw Error(ErrorCode::ParseError, "results: unexpected header");
  std::vector<BenchmarkRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 13) throw Error(ErrorCode::ParseError, "results line " + std::to_string(line_no) + ": expected 13 fields");
    BenchmarkRow r;
    r.scm_id = parse_index(f[0], line_no);
    r.method = f[1];
    r.selector = selector_from_string(f[2]);
    r.estimator = estimator_from_string(f[3]);
    if (!f[4].empty()) r.metric = metric_from_string(f[4]);
    if (!f[6].empty())
      for (const auto& c : split(f[6], ' ')) r.selected.push_back(parse_index(c, line_no));
    if (r.selected.size() != parse_index(f[5], line_no))
      throw Error(ErrorCode::ParseError, "results line " + std::to_string(line_no) + ": n_selected mismatch");
    r.mse = parse_number(f[7], line_no);
    r.tau_risk = parse_number(f[8], line_no);
    if (!f[9].empty()) r.inclusion_error = {parse_number(f[9], line_no), true};
    r.rank = parse_number(f[10], line_no);
    if (!f[11].empty()) r.wall_millis = parse_number(f[11], line_no);
    if (!f[12].empty()) r.flags = split(f[12], ';');
    rows.push_back(std::move(r));
  }
  return rows;
}

ReportSummary report(const std::vector<BenchmarkRow>& input) {
  std::vector<BenchmarkRow> rows = input;
  assign_ranks(rows);
  std::map<std::string, std::vector<const BenchmarkRow*>> by_method;
  for (const auto& r : rows) by_method[r.method].push_back(&r);

  ReportSummary summary;
  for (const auto& [name, list] : by_method) {
    MethodSummary m;
    m.method = name;
    m.scms = list.size();
    double rank_sum = 0.0, mse_sum = 0.0, ie_sum = 0.0;
    std::size_t mse_count = 0;
    for (const auto* r : list) {
      rank_sum += r->rank;
      if (r->failed()) {
        ++m.failures;
      } else {
        mse_sum += r->mse;
        ++mse_count;
        if (r->inclusion_error.defined) {
          ie_sum += r->inclusion_error.value;
          ++m.inclusion_error_count;
        }
      }
    }
    m.mean_rank = rank_sum / static_cast<double>(m.scms);
    if (m.scms > 1) {
      double ss = 0.0;
      for (const auto* r : list) ss += (r->rank - m.mean_rank) * (r->rank - m.mean_rank);
      m.sd_rank = std::sqrt(ss / static_cast<double>(m.scms - 1));
    }
    m.mean_mse = mse_count ? mse_sum / static_cast<double>(mse_count) : std::nan("");
    m.mean_inclusion_error = m.inclusion_error_count ? ie_sum / static_cast<double>(m.inclusion_error_count)
                                                     : std::nan("");
    summary.methods.push_back(std::move(m));
  }
  return summary;
}

std::string format_report(const ReportSummary& s) {
  std::ostringstream out;
  std::size_t width = 6;
  for (const auto& m : s.methods) width = std::max(width, m.method.size());
  out << std::left << std::setw(static_cast<int>(width)) << "method" << "  " << std::right << std::setw(16)
      << "rank (mean+-sd)" << std::setw(8) << "scms" << std::setw(12) << "mean mse" << std::setw(10) << "IE"
      << std::setw(8) << "IE n" << std::setw(8) << "failed" << '\n';
  out << std::fixed;
  for (const auto& m : s.methods) {
    std::ostringstream rank;
    rank << std::fixed << std::setprecision(2) << m.mean_rank << " +- " << m.sd_rank;
    out << std::left << std::setw(static_cast<int>(width)) << m.method << "  " << std::right << std::setw(16)
        << rank.str() << std::setw(8) << m.scms << std::setw(12) << std::setprecision(4) << m.mean_mse
        << std::setw(10) << std::setprecision(3) << m.mean_inclusion_error << std::setw(8)
        << m.inclusion_error_count << std::setw(8) << m.failures << '\n';
  }
  out << "random half-selection inclusion error reference: " << std::setprecision(2)
      << s.random_inclusion_reference << '\n';
  return out.str();
}

nlohmann::json to_json(const ReportSummary& s) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json methods = nlohmann::json::array();
  for (const auto& m : s.methods)
    methods.push_back({{"method", m.method},
                       {"mean_rank", m.mean_rank},
                       {"sd_rank", m.sd_rank},
                       {"scms", m.scms},
                       {"mean_mse", num(m.mean_mse)},
                       {"mean_inclusion_error", num(m.mean_inclusion_error)},
                       {"inclusion_error_count", m.inclusion_error_count},
                       {"failures", m.failures}});
  return {{"methods", methods}, {"random_inclusion_reference", s.random_inclusion_reference}};
}

}  // namespace htefs
