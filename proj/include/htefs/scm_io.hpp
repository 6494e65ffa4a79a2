#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "htefs/scm.hpp"

namespace htefs {

nlohmann::json to_json(const ScmSpec& spec);
ScmSpec spec_from_json(const nlohmann::json& j);

// {order, adj, coef, t_node, y_node, mediators, hte_parents, spec}
nlohmann::json to_json(const CausalGraph& graph, const ScmSpec& spec);
CausalGraph graph_from_json(const nlohmann::json& j);

// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

// Header x0..x{k-1},t,y,tau; one row per unit.
void write_dataset_csv(std::ostream& out, const Dataset& data);

// Reads the CSV written by write_dataset_csv. feature_nodes defaults to
// 0..k-1 and post_treatment_mask to all false; attach_graph() fills both.
Dataset read_dataset_csv(std::istream& in);

void attach_graph(Dataset& data, const CausalGraph& graph);

}  // namespace htefs
