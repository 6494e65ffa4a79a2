#include "htefs/scm_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>

#include "htefs/error.hpp"

namespace htefs {

using nlohmann::json;

json to_json(const ScmSpec& s) {
  return json{{"d", s.d},     {"p_e", s.p_e}, {"sigma", s.sigma}, {"rho", s.rho}, {"gamma", s.gamma},
              {"m", s.m},     {"p_h", s.p_h}, {"m_p", s.m_p},     {"n", s.n},     {"seed", s.seed}};
}

ScmSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::ParseError, "spec must be a JSON object");
  ScmSpec s;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "d") s.d = value.get<std::size_t>();
      else if (key == "p_e") s.p_e = value.get<double>();
      else if (key == "sigma") s.sigma = value.get<double>();
      else if (key == "rho") s.rho = value.get<double>();
      else if (key == "gamma") s.gamma = value.get<bool>();
      else if (key == "m") s.m = value.get<std::size_t>();
      else if (key == "p_h") s.p_h = value.get<std::size_t>();
      else if (key == "m_p") s.m_p = value.get<bool>();
      else if (key == "n") s.n = value.get<std::size_t>();
      else if (key == "seed") s.seed = value.get<std::uint64_t>();
      else throw Error(ErrorCode::ParseError, "unknown spec field '" + key + "'");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("spec: ") + e.what());
  }
  return s;
}

json to_json(const CausalGraph& g, const ScmSpec& spec) {
  const std::size_t d = g.size();
  std::vector<int> adj(d * d);
  for (std::size_t k = 0; k < d * d; ++k) adj[k] = g.dag.adjacency()[k];
  json hte = json::array();
  for (const auto& h : g.hte_parents)
    hte.push_back({{"node", h.node}, {"chain_parent", h.chain_parent}, {"modifier", h.modifier}});
  return json{{"order", g.order},
              {"adj", adj},
              {"coef", g.coef},
              {"t_node", g.t_node},
              {"y_node", g.y_node},
              {"mediators", g.mediators},
              {"hte_parents", hte},
              {"effective_p_h", g.effective_p_h},
              {"attempts", g.attempts},
              {"spec", to_json(spec)}};
}

CausalGraph graph_from_json(const json& j) {
  try {
    CausalGraph g;
    g.order = j.at("order").get<std::vector<NodeId>>();
    const std::size_t d = g.order.size();
    const auto adj = j.at("adj").get<std::vector<int>>();
    g.coef = j.at("coef").get<std::vector<double>>();
    if (adj.size() != d * d || g.coef.size() != d * d)
      throw Error(ErrorCode::ParseError, "graph: adj/coef must have d*d entries");
    g.dag = Dag(d);
    for (std::size_t k = 0; k < d * d; ++k)
      if (adj[k]) g.dag.add_edge(k / d, k % d);
    g.t_node = j.at("t_node").get<NodeId>();
    g.y_node = j.at("y_node").get<NodeId>();
    if (g.t_node >= d || g.y_node >= d) throw Error(ErrorCode::ParseError, "graph: role out of range");
    g.mediators = j.at("mediators").get<std::vector<NodeId>>();
    for (const auto& h : j.at("hte_parents"))
      g.hte_parents.push_back({h.at("node").get<NodeId>(), h.at("chain_parent").get<NodeId>(),
                               h.at("modifier").get<NodeId>()});
    g.effective_p_h = j.value("effective_p_h", std::size_t{0});
    g.attempts = j.value("attempts", std::size_t{0});
    return g;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("graph: ") + e.what());
  }
}

std::string format_double(double value) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

void write_dataset_csv(std::ostream& out, const Dataset& data) {
  const std::size_t k = data.num_features();
  for (std::size_t c = 0; c < k; ++c) out << 'x' << c << ',';
  out << "t,y,tau\n";
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (double v : data.x.row(i)) out << format_double(v) << ',';
    out << format_double(data.t[i]) << ',' << format_double(data.y[i]) << ','
        << format_double(data.tau.empty() ? 0.0 : data.tau[i]) << '\n';
  }
}

namespace {

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

double parse_double(std::string_view s, std::size_t line_no) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

Dataset read_dataset_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, "dataset: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_commas(line);
  if (header.size() < 3 || header[header.size() - 3] != "t" || header[header.size() - 2] != "y" ||
      header.back() != "tau")
    throw Error(ErrorCode::ParseError, "dataset: header must end with t,y,tau");
  const std::size_t k = header.size() - 3;
  for (std::size_t c = 0; c < k; ++c)
    if (header[c] != "x" + std::to_string(c))
      throw Error(ErrorCode::ParseError, "dataset: unexpected column '" + std::string(header[c]) + "'");

  std::vector<double> xs;
  Dataset data;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_commas(line);
    if (cells.size() != k + 3)
      throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": wrong field count");
    for (std::size_t c = 0; c < k; ++c) xs.push_back(parse_double(cells[c], line_no));
    data.t.push_back(parse_double(cells[k], line_no));
    data.y.push_back(parse_double(cells[k + 1], line_no));
    data.tau.push_back(parse_double(cells[k + 2], line_no));
  }
  data.x = Matrix(data.t.size(), k);
  std::copy(xs.begin(), xs.end(), data.x.data().begin());
  for (std::size_t c = 0; c < k; ++c) data.feature_nodes.push_back(c);
  data.post_treatment_mask.assign(k, false);
  return data;
}

void attach_graph(Dataset& data, const CausalGraph& graph) {
  auto nodes = graph.feature_nodes();
  if (nodes.size() != data.num_features())
    throw Error(ErrorCode::DimensionMismatch, "graph feature count differs from dataset columns");
  data.feature_nodes = std::move(nodes);
  data.post_treatment_mask = post_treatment_mask(graph);
}

}  // namespace htefs
