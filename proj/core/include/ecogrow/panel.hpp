#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "ecogrow/matrix.hpp"

namespace ecogrow {

// Dense city identifier. The same index refers to the same city across all
// years and all graphs built from one panel.
struct CityId {
  std::size_t index = 0;
  std::string name;
};

enum class GrowthIndicator { companies, employment };

// Reference year plus the trailing history it depends on.
struct YearWindow {
  int reference_year = 0;
  int history_len = 15;

  int first_year() const { return reference_year - history_len + 1; }
};

// Input file locations; an empty string means the table is not provided.
struct PanelPaths {
  std::string features;
  std::string registrations;
  std::string poi;
  std::string flows;
  std::string coords;
};

// Column-name remapping for the input files. Defaults match the documented
// schemas; `city` and `year` are shared by all tables that carry them.
struct PanelSchema {
  std::string city = "city";
  std::string year = "year";
  std::string industry = "industry";
  std::string category = "category";
  std::string count = "count";
  std::string origin = "origin";
  std::string destination = "destination";
  std::string flow = "flow";
  std::string lat = "lat";
  std::string lon = "lon";
};

struct FeatureGap {
  std::size_t city = 0;
  int year = 0;
  std::size_t feature = 0;

  auto operator<=>(const FeatureGap&) const = default;
};

inline constexpr std::string_view kFeatureGdp = "gdp";
inline constexpr std::string_view kFeaturePopulation = "population";
inline constexpr std::string_view kFeatureEmployment = "employment";
inline constexpr std::string_view kFeatureNewCompanies = "new_companies";

// Immutable multi-year city panel. Cities appearing in any input file are
// unioned into one contiguous index; the (city, year) grid is rectangular over
// the union of years. Missing feature cells are kept as explicit gaps and a
// median-imputed dense view is maintained alongside.
class CityPanel {
 public:
  static CityPanel load(const PanelPaths& paths, const PanelSchema& schema = {});

  // Writes the five tables back out in the same formats; loading the result
  // reproduces this panel exactly.
  void save(const std::string& dir) const;

  std::size_t n() const { return city_names_.size(); }
  const std::vector<std::string>& city_names() const { return city_names_; }
  std::optional<std::size_t> city_index(std::string_view name) const;
  const std::vector<int>& years() const { return years_; }
  bool has_year(int year) const;

  const std::vector<std::string>& feature_names() const { return feature_names_; }
  std::optional<std::size_t> feature_index(std::string_view name) const;

  // Observed value, or nullopt where the cell was absent in the input.
  std::optional<double> raw_feature(std::size_t city, int year, std::size_t feature) const;
  // Dense view: gaps replaced by the within-year, per-feature median.
  double feature(std::size_t city, int year, std::size_t feature) const;
  Matrix feature_matrix(int year) const;
  const std::vector<FeatureGap>& feature_gaps() const { return gaps_; }

  const std::vector<std::string>& industries() const { return industries_; }
  const std::vector<std::string>& poi_categories() const { return poi_categories_; }

  bool has_registrations(int year) const { return registrations_.count(year) > 0; }
  bool has_poi(int year) const { return poi_.count(year) > 0; }
  bool has_flows(int year) const { return flows_.count(year) > 0; }
  std::vector<int> registration_years() const;
  std::vector<int> poi_years() const;
  std::vector<int> flow_years() const;

  // n x industries / n x categories / n x n; zeros when no table exists for
  // the year.
  Matrix registration_matrix(int year) const;
  Matrix poi_matrix(int year) const;
  Matrix flow_matrix(int year) const;

  std::optional<std::pair<double, double>> coords(std::size_t city) const;

  // 1 if the indicator grew strictly from year-1 to year, else 0.
  // Throws ValidationError when either value is missing or the prior value
  // is zero.
  int growth_label(std::size_t city, int year, GrowthIndicator indicator) const;
  std::optional<int> try_growth_label(std::size_t city, int year, GrowthIndicator indicator) const;

  bool operator==(const CityPanel& other) const;

 private:
  friend class PanelBuilder;

  std::size_t year_slot(int year) const;

  std::vector<std::string> city_names_;
  std::unordered_map<std::string, std::size_t> city_index_;
  std::vector<int> years_;  // ascending
  std::vector<std::string> feature_names_;
  std::vector<Matrix> raw_features_;      // per year slot, NaN where absent
  std::vector<Matrix> imputed_features_;  // per year slot, dense
  std::vector<FeatureGap> gaps_;
  std::vector<std::string> industries_;
  std::vector<std::string> poi_categories_;
  std::map<int, Matrix> registrations_;  // year -> n x industries
  std::map<int, Matrix> poi_;            // year -> n x categories
  std::map<int, Matrix> flows_;          // year -> n x n (origin, destination)
  std::vector<std::optional<std::pair<double, double>>> coords_;
};

}  // namespace ecogrow
