#include "ecogrow/graphs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ecogrow/errors.hpp"
#include "ecogrow/rng.hpp"

namespace ecogrow {
namespace {

constexpr double kEarthRadiusKm = 6371.0;

double cosine_01(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), 0.0, 1.0);
}

WeightedGraph cosine_graph(GraphKind kind, int year, const Matrix& vectors) {
  const std::size_t n = vectors.rows();
  WeightedGraph g{kind, year, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double w = cosine_01(vectors.row(i), vectors.row(j));
      g.weights(i, j) = w;
      g.weights(j, i) = w;
    }
  }
  return g;
}

Matrix tfidf_vectors(const Matrix& counts) {
  const std::size_t n = counts.rows();
  const std::size_t terms = counts.cols();
  std::vector<double> idf(terms);
  for (std::size_t t = 0; t < terms; ++t) {
    std::size_t df = 0;
    for (std::size_t c = 0; c < n; ++c) {
      if (counts(c, t) > 0.0) ++df;
    }
    idf[t] = std::log((1.0 + static_cast<double>(n)) / (1.0 + static_cast<double>(df))) + 1.0;
  }
  Matrix out(n, terms);
  for (std::size_t c = 0; c < n; ++c) {
    double total = 0.0;
    for (std::size_t t = 0; t < terms; ++t) total += counts(c, t);
    if (total == 0.0) continue;
    for (std::size_t t = 0; t < terms; ++t) out(c, t) = counts(c, t) / total * idf[t];
  }
  return out;
}

// Nearest year holding data for a table; earlier year wins a distance tie.
int nearest_year(const std::vector<int>& available, int requested) {
  int best = available.front();
  long long best_dist = std::llabs(static_cast<long long>(requested) - best);
  for (int y : available) {
    const long long d = std::llabs(static_cast<long long>(requested) - y);
    if (d < best_dist || (d == best_dist && y < best)) {
      best = y;
      best_dist = d;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(GraphKind kind) {
  switch (kind) {
    case GraphKind::distance: return "distance";
    case GraphKind::flow_source: return "flow_source";
    case GraphKind::flow_destination: return "flow_destination";
    case GraphKind::poi: return "poi";
    case GraphKind::industry: return "industry";
    case GraphKind::feature_cluster: return "feature_cluster";
  }
  return "unknown";
}

GraphKind graph_kind_from_string(std::string_view name) {
  for (GraphKind kind : kStaticGraphOrder) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown graph kind: " + std::string(name));
}

const WeightedGraph& GraphSet::graph(GraphKind kind) const {
  for (const auto& g : statics) {
    if (g.kind == kind) return g;
  }
  throw ValidationError("graph set has no static graph of kind " + std::string(to_string(kind)));
}

double haversine_km(double lat1, double lon1, double lat2, double lon2) {
  const double rad = std::numbers::pi / 180.0;
  const double dlat = (lat2 - lat1) * rad;
  const double dlon = (lon2 - lon1) * rad;
  const double a = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(lat1 * rad) * std::cos(lat2 * rad) * std::sin(dlon / 2) *
                       std::sin(dlon / 2);
  return 2.0 * kEarthRadiusKm * std::asin(std::min(1.0, std::sqrt(a)));
}

WeightedGraph build_distance(const CityPanel& panel, int year, double epsilon_km) {
  const std::size_t n = panel.n();
  for (std::size_t i = 0; i < n; ++i) {
    if (!panel.coords(i)) {
      throw ValidationError("city '" + panel.city_names()[i] + "' has no coordinates");
    }
  }
  WeightedGraph g{GraphKind::distance, year, Matrix(n, n)};
  double max_w = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lat_i, lon_i] = *panel.coords(i);
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto [lat_j, lon_j] = *panel.coords(j);
      const double w = 1.0 / (haversine_km(lat_i, lon_i, lat_j, lon_j) + epsilon_km);
      g.weights(i, j) = w;
      g.weights(j, i) = w;
      max_w = std::max(max_w, w);
    }
  }
  if (max_w > 0.0) {
    for (double& w : g.weights.data()) w /= max_w;
  }
  return g;
}

WeightedGraph build_flow_similarity(const CityPanel& panel, int year, FlowDirection direction) {
  const std::size_t n = panel.n();
  Matrix flows = panel.flow_matrix(year);
  for (std::size_t i = 0; i < n; ++i) flows(i, i) = 0.0;  // self-flows dropped
  Matrix vectors(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      vectors(i, j) = direction == FlowDirection::source ? flows(i, j) : flows(j, i);
    }
  }
  const GraphKind kind =
      direction == FlowDirection::source ? GraphKind::flow_source : GraphKind::flow_destination;
  return cosine_graph(kind, year, vectors);
}

WeightedGraph build_tfidf_similarity(const CityPanel& panel, int year, TfidfTable table) {
  const Matrix counts =
      table == TfidfTable::poi ? panel.poi_matrix(year) : panel.registration_matrix(year);
  const GraphKind kind = table == TfidfTable::poi ? GraphKind::poi : GraphKind::industry;
  return cosine_graph(kind, year, tfidf_vectors(counts));
}

WeightedGraph build_cluster_graph(const CityPanel& panel, int year, std::size_t k_clusters,
                                  std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = panel.n();
  if (k_clusters < 2 || k_clusters > n) {
    throw ValidationError("k_clusters must be in [2, " + std::to_string(n) + "], got " +
                          std::to_string(k_clusters));
  }
  const Matrix features = standardize_columns(panel.feature_matrix(year));
  const KMeansResult km = kmeans(features, k_clusters, seed, max_iter);
  WeightedGraph g{GraphKind::feature_cluster, year, Matrix(n, n)};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (km.assignment[i] == km.assignment[j]) {
        g.weights(i, j) = 1.0;
        g.weights(j, i) = 1.0;
      }
    }
  }
  return g;
}

GraphSet build_graph_set(const CityPanel& panel, const YearWindow& window,
                         const GraphConfig& config) {
  const int t = window.reference_year;
  if (window.history_len < 1) throw ValidationError("history_len must be >= 1");
  for (int y = window.first_year(); y <= t; ++y) {
    if (!panel.has_year(y)) {
      throw ValidationError("window year " + std::to_string(y) + " not present in panel");
    }
  }

  GraphSet set;
  auto resolve = [&](GraphKind kind, const std::vector<int>& available, int requested) {
    if (available.empty()) {
      throw ValidationError(std::string("no data for ") + std::string(to_string(kind)) +
                            " graph in any year");
    }
    const int used = std::find(available.begin(), available.end(), requested) != available.end()
                         ? requested
                         : nearest_year(available, requested);
    if (used != requested) set.substitutions.push_back({kind, requested, used});
    return used;
  };

  set.statics.push_back(build_distance(panel, t, config.distance_epsilon_km));
  {
    const int y = resolve(GraphKind::flow_source, panel.flow_years(), t);
    if (y != t) set.substitutions.push_back({GraphKind::flow_destination, t, y});
    set.statics.push_back(build_flow_similarity(panel, y, FlowDirection::source));
    set.statics.push_back(build_flow_similarity(panel, y, FlowDirection::destination));
  }
  {
    const int y = resolve(GraphKind::poi, panel.poi_years(), t);
    set.statics.push_back(build_tfidf_similarity(panel, y, TfidfTable::poi));
  }
  {
    const int y = resolve(GraphKind::industry, panel.registration_years(), t);
    set.statics.push_back(build_tfidf_similarity(panel, y, TfidfTable::industry));
  }
  set.statics.push_back(
      build_cluster_graph(panel, t, config.k_clusters, config.cluster_seed, config.kmeans_max_iter));

  for (int y = window.first_year(); y <= t; ++y) {
    const int used = resolve(GraphKind::industry, panel.registration_years(), y);
    set.dynamics.push_back(build_tfidf_similarity(panel, used, TfidfTable::industry));
  }
  return set;
}

KMeansResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, std::size_t max_iter) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  if (k == 0 || k > n) throw ValidationError("kmeans: k out of range");

  std::mt19937_64 rng(seed);
  auto sq_dist = [&](std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double d = a[i] - b[i];
      s += d * d;
    }
    return s;
  };

  // k-means++ seeding
  Matrix centers(k, dim);
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::size_t first = static_cast<std::size_t>(uniform_index(rng, n));
  std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], sq_dist(points.row(i), centers.row(c - 1)));
      total += min_dist[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = uniform_double(rng) * total;
      double cum = 0.0;
      chosen = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        cum += min_dist[i];
        if (cum >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = static_cast<std::size_t>(uniform_index(rng, n));
    }
    std::copy(points.row(chosen).begin(), points.row(chosen).end(), centers.row(c).begin());
  }

  KMeansResult result;
  result.assignment.assign(n, 0);
  std::vector<std::size_t> counts(k);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    // assignment step; ties go to the lower cluster index
    bool changed = iter == 0;
    double inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = sq_dist(points.row(i), centers.row(0));
      for (std::size_t c = 1; c < k; ++c) {
        const double d = sq_dist(points.row(i), centers.row(c));
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (result.assignment[i] != best) {
        result.assignment[i] = best;
        changed = true;
      }
      inertia += best_d;
    }
    result.inertia_per_iter.push_back(inertia);
    if (!changed) break;

    // update step; an emptied cluster keeps its previous center
    Matrix sums(k, dim);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = result.assignment[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums(c, d) += points(i, d);
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;
      for (std::size_t d = 0; d < dim; ++d) {
        centers(c, d) = sums(c, d) / static_cast<double>(counts[c]);
      }
    }
  }
  result.centers = std::move(centers);
  return result;
}

}  // namespace ecogrow
