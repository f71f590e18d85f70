#pragma once

#include <cstddef>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ecogrow/tensor.hpp"

namespace ecogrow::diff {

struct NamedParam {
  std::string name;
  Tensor tensor;
};

struct GradCheckIssue {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  std::size_t excluded = 0;
  std::vector<GradCheckIssue> failures;  // entries over tolerance
};

// Compares analytic gradients against central finite differences,
// (f(x+h) - f(x-h)) / 2h, entry by entry. `loss` must rebuild the scalar
// computation on the given tape each call. Entries named in `exclude`
// (param name, flat index) are skipped; callers use this for known kinks
// (relu at exactly 0, max-reduce ties).
GradCheckReport grad_check(const std::function<Tensor(Tape&)>& loss,
                           const std::vector<NamedParam>& params, double h = 1e-5,
                           double tol = 1e-4,
                           const std::set<std::pair<std::string, std::size_t>>& exclude = {});

}  // namespace ecogrow::diff
