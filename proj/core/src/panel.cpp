#include "ecogrow/panel.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <set>

#include "ecogrow/csv.hpp"
#include "ecogrow/errors.hpp"

namespace ecogrow {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string loc(const std::string& file, std::size_t line) {
  return file + ":" + std::to_string(line);
}

double median_of(std::vector<double>& values) {
  if (values.empty()) return 0.0;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size();
  if (m % 2 == 1) return values[m / 2];
  return 0.5 * (values[m / 2 - 1] + values[m / 2]);
}

}  // namespace

// Accumulates rows from all tables, then freezes them into a CityPanel.
class PanelBuilder {
 public:
  PanelBuilder(const PanelPaths& paths, const PanelSchema& schema) : paths_(paths), schema_(schema) {}

  CityPanel build() {
    if (!paths_.features.empty()) features_ = csv::Table::read_file(paths_.features);
    if (!paths_.registrations.empty()) registrations_ = csv::Table::read_file(paths_.registrations);
    if (!paths_.poi.empty()) poi_ = csv::Table::read_file(paths_.poi);
    if (!paths_.flows.empty()) flows_ = csv::Table::read_file(paths_.flows);
    if (!paths_.coords.empty()) coords_ = csv::Table::read_file(paths_.coords);

    collect_index();
    if (panel_.city_names_.empty()) {
      throw ValidationError("no cities found in any input table");
    }
    std::sort(panel_.years_.begin(), panel_.years_.end());

    fill_features();
    fill_counts(registrations_, schema_.industry, panel_.industries_, panel_.registrations_,
                "registrations");
    fill_counts(poi_, schema_.category, panel_.poi_categories_, panel_.poi_, "poi");
    fill_flows();
    fill_coords();
    impute();
    return std::move(panel_);
  }

 private:
  std::size_t intern_city(const std::string& name, const std::string& file, std::size_t line) {
    if (name.empty()) {
      throw ValidationError(loc(file, line) + ": empty city name");
    }
    auto it = panel_.city_index_.find(name);
    if (it != panel_.city_index_.end()) return it->second;
    const std::size_t idx = panel_.city_names_.size();
    panel_.city_names_.push_back(name);
    panel_.city_index_.emplace(name, idx);
    return idx;
  }

  void note_year(int year) {
    if (!seen_years_.insert(year).second) return;
    panel_.years_.push_back(year);
  }

  void collect_index() {
    auto scan = [&](const std::optional<csv::Table>& table, const std::string& city_col,
                    bool has_year) {
      if (!table) return;
      const std::size_t ci = table->column(city_col);
      const std::size_t yi = has_year ? table->column(schema_.year) : 0;
      for (const auto& row : table->rows()) {
        intern_city(row.fields[ci], table->path(), row.line);
        if (has_year) {
          note_year(static_cast<int>(
              csv::parse_int(row.fields[yi], table->path(), row.line, schema_.year)));
        }
      }
    };
    scan(features_, schema_.city, true);
    scan(registrations_, schema_.city, true);
    scan(poi_, schema_.city, true);
    if (flows_) {
      const std::size_t oi = flows_->column(schema_.origin);
      const std::size_t di = flows_->column(schema_.destination);
      const std::size_t yi = flows_->column(schema_.year);
      for (const auto& row : flows_->rows()) {
        intern_city(row.fields[oi], flows_->path(), row.line);
        intern_city(row.fields[di], flows_->path(), row.line);
        note_year(
            static_cast<int>(csv::parse_int(row.fields[yi], flows_->path(), row.line, schema_.year)));
      }
    }
    scan(coords_, schema_.city, false);
  }

  void fill_features() {
    const std::size_t n = panel_.n();
    if (features_) {
      const std::size_t ci = features_->column(schema_.city);
      const std::size_t yi = features_->column(schema_.year);
      for (std::size_t col = 0; col < features_->header().size(); ++col) {
        if (col == ci || col == yi) continue;
        panel_.feature_names_.push_back(features_->header()[col]);
        feature_cols_.push_back(col);
      }
    }
    panel_.raw_features_.assign(panel_.years_.size(),
                                Matrix(n, panel_.feature_names_.size(), kNaN));
    if (!features_) return;

    const std::size_t ci = features_->column(schema_.city);
    const std::size_t yi = features_->column(schema_.year);
    std::set<std::pair<std::size_t, int>> seen;
    for (const auto& row : features_->rows()) {
      const std::size_t city = panel_.city_index_.at(row.fields[ci]);
      const int year = static_cast<int>(
          csv::parse_int(row.fields[yi], features_->path(), row.line, schema_.year));
      if (!seen.insert({city, year}).second) {
        throw ValidationError(loc(features_->path(), row.line) + ": duplicate feature row for city '" +
                              row.fields[ci] + "', year " + std::to_string(year));
      }
      Matrix& slot = panel_.raw_features_[panel_.year_slot(year)];
      for (std::size_t f = 0; f < feature_cols_.size(); ++f) {
        const std::string& cell = row.fields[feature_cols_[f]];
        if (cell.empty()) continue;  // explicit gap
        const double v = csv::parse_double(cell, features_->path(), row.line,
                                           panel_.feature_names_[f]);
        if (!std::isfinite(v)) {
          throw ValidationError(loc(features_->path(), row.line) + ": column '" +
                                panel_.feature_names_[f] + "': non-finite value");
        }
        slot(city, f) = v;
      }
    }
  }

  void fill_counts(const std::optional<csv::Table>& table, const std::string& term_col,
                   std::vector<std::string>& terms, std::map<int, Matrix>& dest,
                   const std::string& what) {
    if (!table) return;
    const std::size_t ci = table->column(schema_.city);
    const std::size_t yi = table->column(schema_.year);
    const std::size_t ti = table->column(term_col);
    const std::size_t vi = table->column(schema_.count);

    std::unordered_map<std::string, std::size_t> term_index;
    for (const auto& row : table->rows()) {
      const std::string& term = row.fields[ti];
      if (term.empty()) {
        throw ValidationError(loc(table->path(), row.line) + ": empty " + term_col);
      }
      if (term_index.emplace(term, terms.size()).second) terms.push_back(term);
    }
    const std::size_t n = panel_.n();
    for (const auto& row : table->rows()) {
      const std::size_t city = panel_.city_index_.at(row.fields[ci]);
      const int year =
          static_cast<int>(csv::parse_int(row.fields[yi], table->path(), row.line, schema_.year));
      const double v = csv::parse_double(row.fields[vi], table->path(), row.line, schema_.count);
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError(loc(table->path(), row.line) + ": " + what +
                              " count must be nonnegative and finite, got " + row.fields[vi]);
      }
      auto [it, inserted] = dest.try_emplace(year, n, terms.size());
      it->second(city, term_index.at(row.fields[ti])) += v;  // duplicate keys accumulate
    }
  }

  void fill_flows() {
    if (!flows_) return;
    const std::size_t oi = flows_->column(schema_.origin);
    const std::size_t di = flows_->column(schema_.destination);
    const std::size_t yi = flows_->column(schema_.year);
    const std::size_t vi = flows_->column(schema_.flow);
    const std::size_t n = panel_.n();
    for (const auto& row : flows_->rows()) {
      const std::size_t o = panel_.city_index_.at(row.fields[oi]);
      const std::size_t d = panel_.city_index_.at(row.fields[di]);
      const int year =
          static_cast<int>(csv::parse_int(row.fields[yi], flows_->path(), row.line, schema_.year));
      const double v = csv::parse_double(row.fields[vi], flows_->path(), row.line, schema_.flow);
      if (!std::isfinite(v) || v < 0.0) {
        throw ValidationError(loc(flows_->path(), row.line) +
                              ": flow must be nonnegative and finite, got " + row.fields[vi]);
      }
      auto [it, inserted] = panel_.flows_.try_emplace(year, n, n);
      it->second(o, d) += v;
    }
  }

  void fill_coords() {
    panel_.coords_.assign(panel_.n(), std::nullopt);
    if (!coords_) return;
    const std::size_t ci = coords_->column(schema_.city);
    const std::size_t lat_i = coords_->column(schema_.lat);
    const std::size_t lon_i = coords_->column(schema_.lon);
    for (const auto& row : coords_->rows()) {
      const std::size_t city = panel_.city_index_.at(row.fields[ci]);
      const double lat = csv::parse_double(row.fields[lat_i], coords_->path(), row.line, schema_.lat);
      const double lon = csv::parse_double(row.fields[lon_i], coords_->path(), row.line, schema_.lon);
      if (!(lat >= -90.0 && lat <= 90.0)) {
        throw ValidationError(loc(coords_->path(), row.line) + ": latitude out of [-90, 90]: " +
                              row.fields[lat_i]);
      }
      if (!(lon >= -180.0 && lon <= 180.0)) {
        throw ValidationError(loc(coords_->path(), row.line) + ": longitude out of [-180, 180]: " +
                              row.fields[lon_i]);
      }
      panel_.coords_[city] = std::make_pair(lat, lon);
    }
  }

  void impute() {
    panel_.imputed_features_ = panel_.raw_features_;
    const std::size_t n = panel_.n();
    for (std::size_t ys = 0; ys < panel_.years_.size(); ++ys) {
      Matrix& imp = panel_.imputed_features_[ys];
      const Matrix& raw = panel_.raw_features_[ys];
      for (std::size_t f = 0; f < panel_.feature_names_.size(); ++f) {
        std::vector<double> present;
        present.reserve(n);
        for (std::size_t c = 0; c < n; ++c) {
          if (!std::isnan(raw(c, f))) present.push_back(raw(c, f));
        }
        const double med = median_of(present);
        for (std::size_t c = 0; c < n; ++c) {
          if (std::isnan(raw(c, f))) {
            imp(c, f) = med;
            panel_.gaps_.push_back({c, panel_.years_[ys], f});
          }
        }
      }
    }
    std::sort(panel_.gaps_.begin(), panel_.gaps_.end());
  }

  PanelPaths paths_;
  PanelSchema schema_;
  std::optional<csv::Table> features_, registrations_, poi_, flows_, coords_;
  std::vector<std::size_t> feature_cols_;
  std::set<int> seen_years_;
  CityPanel panel_;
};

CityPanel CityPanel::load(const PanelPaths& paths, const PanelSchema& schema) {
  return PanelBuilder(paths, schema).build();
}

std::optional<std::size_t> CityPanel::city_index(std::string_view name) const {
  auto it = city_index_.find(std::string(name));
  if (it == city_index_.end()) return std::nullopt;
  return it->second;
}

bool CityPanel::has_year(int year) const {
  return std::binary_search(years_.begin(), years_.end(), year);
}

std::optional<std::size_t> CityPanel::feature_index(std::string_view name) const {
  for (std::size_t i = 0; i < feature_names_.size(); ++i) {
    if (feature_names_[i] == name) return i;
  }
  return std::nullopt;
}

std::size_t CityPanel::year_slot(int year) const {
  auto it = std::lower_bound(years_.begin(), years_.end(), year);
  if (it == years_.end() || *it != year) {
    throw ValidationError("year " + std::to_string(year) + " not present in panel");
  }
  return static_cast<std::size_t>(it - years_.begin());
}

std::optional<double> CityPanel::raw_feature(std::size_t city, int year, std::size_t feature) const {
  const double v = raw_features_[year_slot(year)](city, feature);
  if (std::isnan(v)) return std::nullopt;
  return v;
}

double CityPanel::feature(std::size_t city, int year, std::size_t feature) const {
  return imputed_features_[year_slot(year)](city, feature);
}

Matrix CityPanel::feature_matrix(int year) const { return imputed_features_[year_slot(year)]; }

std::vector<int> CityPanel::registration_years() const {
  std::vector<int> out;
  for (const auto& [year, m] : registrations_) out.push_back(year);
  return out;
}

std::vector<int> CityPanel::poi_years() const {
  std::vector<int> out;
  for (const auto& [year, m] : poi_) out.push_back(year);
  return out;
}

std::vector<int> CityPanel::flow_years() const {
  std::vector<int> out;
  for (const auto& [year, m] : flows_) out.push_back(year);
  return out;
}

Matrix CityPanel::registration_matrix(int year) const {
  auto it = registrations_.find(year);
  if (it == registrations_.end()) return Matrix(n(), industries_.size());
  return it->second;
}

Matrix CityPanel::poi_matrix(int year) const {
  auto it = poi_.find(year);
  if (it == poi_.end()) return Matrix(n(), poi_categories_.size());
  return it->second;
}

Matrix CityPanel::flow_matrix(int year) const {
  auto it = flows_.find(year);
  if (it == flows_.end()) return Matrix(n(), n());
  return it->second;
}

std::optional<std::pair<double, double>> CityPanel::coords(std::size_t city) const {
  return coords_[city];
}

int CityPanel::growth_label(std::size_t city, int year, GrowthIndicator indicator) const {
  const std::string_view name =
      indicator == GrowthIndicator::companies ? kFeatureNewCompanies : kFeatureEmployment;
  const auto feat = feature_index(name);
  if (!feat) throw ValidationError("panel has no '" + std::string(name) + "' feature column");
  if (!has_year(year - 1)) {
    throw ValidationError("growth label for year " + std::to_string(year) + " needs year " +
                          std::to_string(year - 1) + ", which is not in the panel");
  }
  const auto prev = raw_feature(city, year - 1, *feat);
  const auto cur = raw_feature(city, year, *feat);
  if (!prev || !cur) {
    throw ValidationError("missing '" + std::string(name) + "' value for city '" +
                          city_names_[city] + "' around year " + std::to_string(year));
  }
  if (*prev == 0.0) {
    throw ValidationError("zero denominator: '" + std::string(name) + "' is 0 for city '" +
                          city_names_[city] + "' in year " + std::to_string(year - 1));
  }
  const double rate = (*cur - *prev) / *prev;
  return rate > 0.0 ? 1 : 0;
}

std::optional<int> CityPanel::try_growth_label(std::size_t city, int year,
                                               GrowthIndicator indicator) const {
  const std::string_view name =
      indicator == GrowthIndicator::companies ? kFeatureNewCompanies : kFeatureEmployment;
  const auto feat = feature_index(name);
  if (!feat || !has_year(year - 1) || !has_year(year)) return std::nullopt;
  const auto prev = raw_feature(city, year - 1, *feat);
  const auto cur = raw_feature(city, year, *feat);
  if (!prev || !cur || *prev == 0.0) return std::nullopt;
  return (*cur - *prev) / *prev > 0.0 ? 1 : 0;
}

bool CityPanel::operator==(const CityPanel& other) const {
  auto nan_equal = [](const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols()) return false;
      auto da = a[i].data();
      auto db = b[i].data();
      for (std::size_t j = 0; j < da.size(); ++j) {
        const bool na = std::isnan(da[j]);
        const bool nb = std::isnan(db[j]);
        if (na != nb) return false;
        if (!na && da[j] != db[j]) return false;
      }
    }
    return true;
  };
  return city_names_ == other.city_names_ && years_ == other.years_ &&
         feature_names_ == other.feature_names_ && nan_equal(raw_features_, other.raw_features_) &&
         industries_ == other.industries_ && poi_categories_ == other.poi_categories_ &&
         registrations_ == other.registrations_ && poi_ == other.poi_ && flows_ == other.flows_ &&
         coords_ == other.coords_;
}

void CityPanel::save(const std::string& dir) const {
  std::filesystem::create_directories(dir);
  const auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };

  {
    csv::Writer w(path("features.csv"));
    std::vector<std::string> row = {"city", "year"};
    row.insert(row.end(), feature_names_.begin(), feature_names_.end());
    w.write_row(row);
    // Every (city, year) cell is written so the index survives a round trip
    // even for cities that appear in no other table.
    for (std::size_t ys = 0; ys < years_.size(); ++ys) {
      for (std::size_t c = 0; c < n(); ++c) {
        row = {city_names_[c], std::to_string(years_[ys])};
        for (std::size_t f = 0; f < feature_names_.size(); ++f) {
          const double v = raw_features_[ys](c, f);
          row.push_back(std::isnan(v) ? std::string() : csv::format_double(v));
        }
        w.write_row(row);
      }
    }
  }
  {
    csv::Writer w(path("registrations.csv"));
    w.write_row({"city", "industry", "year", "count"});
    for (const auto& [year, m] : registrations_) {
      for (std::size_t c = 0; c < n(); ++c) {
        for (std::size_t i = 0; i < industries_.size(); ++i) {
          if (m(c, i) == 0.0) continue;
          w.write_row({city_names_[c], industries_[i], std::to_string(year),
                       csv::format_double(m(c, i))});
        }
      }
    }
  }
  {
    csv::Writer w(path("poi.csv"));
    w.write_row({"city", "category", "year", "count"});
    for (const auto& [year, m] : poi_) {
      for (std::size_t c = 0; c < n(); ++c) {
        for (std::size_t i = 0; i < poi_categories_.size(); ++i) {
          if (m(c, i) == 0.0) continue;
          w.write_row({city_names_[c], poi_categories_[i], std::to_string(year),
                       csv::format_double(m(c, i))});
        }
      }
    }
  }
  {
    csv::Writer w(path("flows.csv"));
    w.write_row({"origin", "destination", "year", "flow"});
    for (const auto& [year, m] : flows_) {
      for (std::size_t o = 0; o < n(); ++o) {
        for (std::size_t d = 0; d < n(); ++d) {
          if (m(o, d) == 0.0) continue;
          w.write_row({city_names_[o], city_names_[d], std::to_string(year),
                       csv::format_double(m(o, d))});
        }
      }
    }
  }
  {
    csv::Writer w(path("coords.csv"));
    w.write_row({"city", "lat", "lon"});
    for (std::size_t c = 0; c < n(); ++c) {
      if (!coords_[c]) continue;
      w.write_row({city_names_[c], csv::format_double(coords_[c]->first),
                   csv::format_double(coords_[c]->second)});
    }
  }
}

}  // namespace ecogrow
