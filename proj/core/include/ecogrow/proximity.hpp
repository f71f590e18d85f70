#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "ecogrow/matrix.hpp"
#include "ecogrow/panel.hpp"

namespace ecogrow {

// Revealed comparative advantage of each city in each industry, with its
// binarization at the RCA >= 1 rule.
struct RcaMatrix {
  Matrix values;  // n_cities x n_industries
  Matrix binary;  // 1 where values >= 1
  int window_start = 0;
  int window_end = 0;
};

struct ThresholdRule {
  enum class Kind { percentile, fixed };
  Kind kind = Kind::percentile;
  double value = 95.0;  // percentile in [0, 100], or a fixed phi cutoff

  static ThresholdRule percentile(double p) { return {Kind::percentile, p}; }
  static ThresholdRule fixed(double phi) { return {Kind::fixed, phi}; }
};

// Supervision graph: maximum spanning tree of the proximity matrix united
// with all pairs at or above the resolved threshold.
struct ProximityTarget {
  Matrix phi;                                             // symmetric, [0, 1], zero diagonal
  Matrix edges;                                           // binary adjacency
  std::vector<std::pair<std::size_t, std::size_t>> mst_edges;  // i < j
  double threshold = 0.0;                                 // resolved phi cutoff

  std::vector<std::pair<std::size_t, std::size_t>> edge_list() const;  // i < j
};

// Sums registrations over [t_start, t_end] and evaluates
// RCA = (E_ci / sum_i E_ci) / (sum_c E_ci / sum_ci E_ci), 0/0 cells -> 0.
RcaMatrix compute_rca(const CityPanel& panel, int t_start, int t_end);

// phi_ij = min(P(j|i), P(i|j)) where P(j|i) = |shared advantages| / |i's
// advantages|; cities without advantages get 0 everywhere; diagonal 0.
Matrix compute_proximity(const RcaMatrix& rca);

// Maximum spanning forest of the positive-phi graph (greedy descending with
// (min,max)-index tie order) united with {phi >= threshold}.
ProximityTarget build_target(const Matrix& phi, const ThresholdRule& rule);

// Resolved cutoff for a rule; percentile is nearest-rank over the strictly
// positive upper-triangle values (1.0 when there are none).
double resolve_threshold(const Matrix& phi, const ThresholdRule& rule);

// Edge-list CSV (src, dst, phi, is_mst) plus a JSON sidecar recording window,
// rule, resolved threshold and counts.
void export_proximity(const ProximityTarget& target, const std::vector<std::string>& city_names,
                      int window_start, int window_end, const ThresholdRule& rule,
                      const std::string& dir);

// Rebuilds a supervision view (phi only on exported edges) from export files.
ProximityTarget load_proximity(const CityPanel& panel, const std::string& dir);

}  // namespace ecogrow
