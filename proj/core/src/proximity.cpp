#include "ecogrow/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include <json.hpp>

#include "ecogrow/csv.hpp"
#include "ecogrow/errors.hpp"

namespace ecogrow {
namespace {

struct UnionFind {
  std::vector<std::size_t> parent;
  std::vector<std::size_t> size;

  explicit UnionFind(std::size_t n) : parent(n), size(n, 1) {
    std::iota(parent.begin(), parent.end(), std::size_t{0});
  }

  std::size_t find(std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (size[a] < size[b]) std::swap(a, b);
    parent[b] = a;
    size[a] += size[b];
    return true;
  }
};

}  // namespace

std::vector<std::pair<std::size_t, std::size_t>> ProximityTarget::edge_list() const {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t i = 0; i < edges.rows(); ++i) {
    for (std::size_t j = i + 1; j < edges.cols(); ++j) {
      if (edges(i, j) != 0.0) out.emplace_back(i, j);
    }
  }
  return out;
}

RcaMatrix compute_rca(const CityPanel& panel, int t_start, int t_end) {
  if (t_start > t_end) {
    throw ValidationError("empty RCA window: [" + std::to_string(t_start) + ", " +
                          std::to_string(t_end) + "]");
  }
  const std::size_t n = panel.n();
  const std::size_t industries = panel.industries().size();
  Matrix counts(n, industries);
  bool any = false;
  for (int year = t_start; year <= t_end; ++year) {
    if (!panel.has_registrations(year)) continue;
    any = true;
    const Matrix m = panel.registration_matrix(year);
    for (std::size_t c = 0; c < n; ++c) {
      for (std::size_t i = 0; i < industries; ++i) counts(c, i) += m(c, i);
    }
  }
  if (!any) {
    throw ValidationError("no registrations in window [" + std::to_string(t_start) + ", " +
                          std::to_string(t_end) + "]");
  }

  std::vector<double> city_total(n, 0.0);
  std::vector<double> industry_total(industries, 0.0);
  double grand_total = 0.0;
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < industries; ++i) {
      city_total[c] += counts(c, i);
      industry_total[i] += counts(c, i);
      grand_total += counts(c, i);
    }
  }

  RcaMatrix rca{Matrix(n, industries), Matrix(n, industries), t_start, t_end};
  for (std::size_t c = 0; c < n; ++c) {
    if (city_total[c] == 0.0) continue;  // all-zero row
    for (std::size_t i = 0; i < industries; ++i) {
      if (industry_total[i] == 0.0) continue;
      const double city_share = counts(c, i) / city_total[c];
      const double global_share = industry_total[i] / grand_total;
      rca.values(c, i) = city_share / global_share;
      if (rca.values(c, i) >= 1.0) rca.binary(c, i) = 1.0;
    }
  }
  return rca;
}

Matrix compute_proximity(const RcaMatrix& rca) {
  const std::size_t n = rca.binary.rows();
  const std::size_t industries = rca.binary.cols();
  std::vector<double> advantage_count(n, 0.0);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < industries; ++i) advantage_count[c] += rca.binary(c, i);
  }
  Matrix phi(n, n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      if (advantage_count[a] == 0.0 || advantage_count[b] == 0.0) continue;
      double shared = 0.0;
      for (std::size_t i = 0; i < industries; ++i) shared += rca.binary(a, i) * rca.binary(b, i);
      const double p_ab = shared / advantage_count[a];
      const double p_ba = shared / advantage_count[b];
      const double v = std::min(p_ab, p_ba);
      phi(a, b) = v;
      phi(b, a) = v;
    }
  }
  return phi;
}

double resolve_threshold(const Matrix& phi, const ThresholdRule& rule) {
  if (rule.kind == ThresholdRule::Kind::fixed) return rule.value;
  if (rule.value < 0.0 || rule.value > 100.0) {
    throw ValidationError("percentile must be in [0, 100], got " + std::to_string(rule.value));
  }
  std::vector<double> positives;
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    for (std::size_t j = i + 1; j < phi.cols(); ++j) {
      if (phi(i, j) > 0.0) positives.push_back(phi(i, j));
    }
  }
  if (positives.empty()) return 1.0;
  std::sort(positives.begin(), positives.end());
  // nearest-rank percentile
  const std::size_t m = positives.size();
  std::size_t rank = static_cast<std::size_t>(
      std::ceil(rule.value / 100.0 * static_cast<double>(m)));
  if (rank == 0) rank = 1;
  if (rank > m) rank = m;
  return positives[rank - 1];
}

ProximityTarget build_target(const Matrix& phi, const ThresholdRule& rule) {
  const std::size_t n = phi.rows();
  if (phi.cols() != n) throw ValidationError("phi must be square");
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (phi(i, j) != phi(j, i)) throw ValidationError("phi must be symmetric");
      if (!(phi(i, j) >= 0.0 && phi(i, j) <= 1.0)) {
        throw ValidationError("phi entries must lie in [0, 1]");
      }
    }
  }

  ProximityTarget target;
  target.phi = phi;
  target.edges = Matrix(n, n);
  target.threshold = resolve_threshold(phi, rule);

  struct Edge {
    double phi;
    std::size_t i, j;
  };
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (phi(i, j) > 0.0) edges.push_back({phi(i, j), i, j});
    }
  }
  // descending weight; ties by (min index, max index)
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.phi != b.phi) return a.phi > b.phi;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  UnionFind uf(n);
  for (const Edge& e : edges) {
    if (uf.unite(e.i, e.j)) target.mst_edges.emplace_back(e.i, e.j);
  }
  for (const auto& [i, j] : target.mst_edges) {
    target.edges(i, j) = 1.0;
    target.edges(j, i) = 1.0;
  }
  for (const Edge& e : edges) {
    if (e.phi >= target.threshold) {
      target.edges(e.i, e.j) = 1.0;
      target.edges(e.j, e.i) = 1.0;
    }
  }
  return target;
}

void export_proximity(const ProximityTarget& target, const std::vector<std::string>& city_names,
                      int window_start, int window_end, const ThresholdRule& rule,
                      const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::set<std::pair<std::size_t, std::size_t>> mst(target.mst_edges.begin(),
                                                    target.mst_edges.end());
  const std::string edges_path = (fs::path(dir) / "edges.csv").string();
  {
    csv::Writer w(edges_path);
    w.write_row({"src", "dst", "phi", "is_mst"});
    for (const auto& [i, j] : target.edge_list()) {
      w.write_row({city_names[i], city_names[j], csv::format_double(target.phi(i, j)),
                   mst.count({i, j}) ? "1" : "0"});
    }
  }

  nlohmann::ordered_json sidecar;
  sidecar["window"] = {{"start", window_start}, {"end", window_end}};
  sidecar["threshold_rule"] = {{"kind", rule.kind == ThresholdRule::Kind::percentile
                                            ? "percentile"
                                            : "fixed"},
                               {"value", rule.value}};
  sidecar["resolved_threshold"] = target.threshold;
  sidecar["edge_count"] = target.edge_list().size();
  sidecar["mst_edge_count"] = target.mst_edges.size();
  sidecar["edges_file"] = "edges.csv";

  const std::string sidecar_path = (fs::path(dir) / "proximity.json").string();
  std::ofstream out(sidecar_path, std::ios::binary);
  if (!out) throw PipelineError("cannot write proximity sidecar: " + sidecar_path);
  out << sidecar.dump(2) << "\n";
}

ProximityTarget load_proximity(const CityPanel& panel, const std::string& dir) {
  namespace fs = std::filesystem;
  const std::string edges_path = (fs::path(dir) / "edges.csv").string();
  const std::string sidecar_path = (fs::path(dir) / "proximity.json").string();
  if (!fs::exists(edges_path) || !fs::exists(sidecar_path)) {
    throw PipelineError("proximity artifact not found under '" + dir +
                        "'; run `ecogrow proximity` first");
  }

  ProximityTarget target;
  const std::size_t n = panel.n();
  target.phi = Matrix(n, n);
  target.edges = Matrix(n, n);

  const csv::Table table = csv::Table::read_file(edges_path);
  const std::size_t si = table.column("src");
  const std::size_t di = table.column("dst");
  const std::size_t pi = table.column("phi");
  const std::size_t mi = table.column("is_mst");
  for (const auto& row : table.rows()) {
    const auto a = panel.city_index(row.fields[si]);
    const auto b = panel.city_index(row.fields[di]);
    if (!a || !b) {
      throw ValidationError(edges_path + ":" + std::to_string(row.line) +
                            ": city not present in panel");
    }
    const double phi = csv::parse_double(row.fields[pi], edges_path, row.line, "phi");
    target.phi(*a, *b) = phi;
    target.phi(*b, *a) = phi;
    target.edges(*a, *b) = 1.0;
    target.edges(*b, *a) = 1.0;
    if (row.fields[mi] == "1") {
      target.mst_edges.emplace_back(std::min(*a, *b), std::max(*a, *b));
    }
  }

  std::ifstream in(sidecar_path, std::ios::binary);
  nlohmann::json sidecar = nlohmann::json::parse(in);
  target.threshold = sidecar.at("resolved_threshold").get<double>();
  return target;
}

}  // namespace ecogrow
