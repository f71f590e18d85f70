#pragma once

#include <string>
#include <vector>

#include "ecogrow/graphs.hpp"

namespace ecogrow {

// Writes nonzero upper-triangle entries as "src,dst,weight" rows (all six
// graph kinds are symmetric). Returns the file's FNV-1a checksum as hex.
std::string write_edge_list_csv(const WeightedGraph& graph,
                                const std::vector<std::string>& city_names,
                                const std::string& path);

// Writes the set's edge lists plus a manifest JSON naming kind, year,
// checksum and any year substitutions. Returns the manifest path.
std::string export_graph_set(const GraphSet& set, const std::vector<std::string>& city_names,
                             int reference_year, const std::string& dir);

}  // namespace ecogrow
