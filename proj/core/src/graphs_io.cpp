#include "ecogrow/graphs_io.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ecogrow/csv.hpp"
#include "ecogrow/errors.hpp"
#include "ecogrow/hashing.hpp"

namespace ecogrow {

std::string write_edge_list_csv(const WeightedGraph& graph,
                                const std::vector<std::string>& city_names,
                                const std::string& path) {
  {
    csv::Writer w(path);
    w.write_row({"src", "dst", "weight"});
    for (std::size_t i = 0; i < graph.n(); ++i) {
      for (std::size_t j = i + 1; j < graph.n(); ++j) {
        if (graph.weights(i, j) == 0.0) continue;
        w.write_row({city_names[i], city_names[j], csv::format_double(graph.weights(i, j))});
      }
    }
  }
  return to_hex(fnv1a64_file(path));
}

std::string export_graph_set(const GraphSet& set, const std::vector<std::string>& city_names,
                             int reference_year, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  nlohmann::ordered_json manifest;
  manifest["reference_year"] = reference_year;
  manifest["nodes"] = city_names.size();
  manifest["static"] = nlohmann::ordered_json::array();
  manifest["dynamic"] = nlohmann::ordered_json::array();

  auto describe = [&](const WeightedGraph& g, const std::string& file) {
    const std::string checksum = write_edge_list_csv(g, city_names, (fs::path(dir) / file).string());
    nlohmann::ordered_json entry;
    entry["kind"] = std::string(to_string(g.kind));
    entry["year"] = g.year;
    entry["file"] = file;
    entry["checksum"] = checksum;
    return entry;
  };

  for (const auto& g : set.statics) {
    const std::string file =
        std::string(to_string(g.kind)) + "_" + std::to_string(reference_year) + ".csv";
    manifest["static"].push_back(describe(g, file));
  }
  // Dynamic files are named by window position so fallback years cannot
  // collide on disk.
  const int first_year = reference_year - static_cast<int>(set.dynamics.size()) + 1;
  for (std::size_t i = 0; i < set.dynamics.size(); ++i) {
    const std::string file = "industry_dyn_" + std::to_string(first_year + static_cast<int>(i)) +
                             ".csv";
    manifest["dynamic"].push_back(describe(set.dynamics[i], file));
  }
  manifest["substitutions"] = nlohmann::ordered_json::array();
  for (const auto& sub : set.substitutions) {
    manifest["substitutions"].push_back({{"kind", std::string(to_string(sub.kind))},
                                         {"requested", sub.requested},
                                         {"used", sub.used}});
  }

  const std::string manifest_path = (fs::path(dir) / "manifest.json").string();
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw PipelineError("cannot write manifest: " + manifest_path);
  out << manifest.dump(2) << "\n";
  return manifest_path;
}

}  // namespace ecogrow
