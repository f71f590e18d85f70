#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ecogrow/matrix.hpp"
#include "ecogrow/panel.hpp"

namespace ecogrow {

enum class GraphKind {
  distance,
  flow_source,
  flow_destination,
  poi,
  industry,
  feature_cluster,
};

// Canonical ordering of the six static graphs; used for fusion weights,
// parameter naming and file layout alike.
inline constexpr GraphKind kStaticGraphOrder[6] = {
    GraphKind::distance,        GraphKind::flow_source, GraphKind::flow_destination,
    GraphKind::poi,             GraphKind::industry,    GraphKind::feature_cluster,
};

std::string_view to_string(GraphKind kind);
GraphKind graph_kind_from_string(std::string_view name);

struct WeightedGraph {
  GraphKind kind = GraphKind::distance;
  int year = 0;  // year of the table actually used (after any fallback)
  Matrix weights;

  std::size_t n() const { return weights.rows(); }
};

enum class FlowDirection { source, destination };
enum class TfidfTable { poi, industry };

struct YearSubstitution {
  GraphKind kind = GraphKind::distance;
  int requested = 0;
  int used = 0;
};

struct GraphConfig {
  std::size_t k_clusters = 8;
  double distance_epsilon_km = 1.0;
  std::uint64_t cluster_seed = 0;
  std::size_t kmeans_max_iter = 300;
};

struct GraphSet {
  std::vector<WeightedGraph> statics;   // in kStaticGraphOrder
  std::vector<WeightedGraph> dynamics;  // industry graphs, oldest year first
  std::vector<YearSubstitution> substitutions;

  const WeightedGraph& graph(GraphKind kind) const;
};

double haversine_km(double lat1, double lon1, double lat2, double lon2);

// w_ij = 1 / (distance_km + epsilon), max-normalized into (0, 1].
WeightedGraph build_distance(const CityPanel& panel, int year, double epsilon_km = 1.0);

// Cosine similarity between cities' outflow (source) or inflow (destination)
// distributions; self-flows are dropped first.
WeightedGraph build_flow_similarity(const CityPanel& panel, int year, FlowDirection direction);

// Cosine similarity between cities' tf-idf vectors over POI categories or
// industries. tf = count / city total; idf = ln((1+n)/(1+df)) + 1.
WeightedGraph build_tfidf_similarity(const CityPanel& panel, int year, TfidfTable table);

// Binary graph connecting cities assigned to the same k-means cluster of
// their z-scored explicit features.
WeightedGraph build_cluster_graph(const CityPanel& panel, int year, std::size_t k_clusters,
                                  std::uint64_t seed, std::size_t max_iter = 300);

// The six static graphs for the reference year plus the dynamic industry
// sequence over the window. Table years missing from a source fall back to
// the nearest available year (earlier wins ties); every substitution is
// recorded.
GraphSet build_graph_set(const CityPanel& panel, const YearWindow& window,
                         const GraphConfig& config);

struct KMeansResult {
  std::vector<std::size_t> assignment;
  Matrix centers;
  std::vector<double> inertia_per_iter;
};

// Lloyd's algorithm with k-means++ seeding; runs to an assignment fixpoint or
// max_iter. Deterministic for a fixed seed.
KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iter = 300);

}  // namespace ecogrow
