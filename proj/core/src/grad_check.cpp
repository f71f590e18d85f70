#include "ecogrow/grad_check.hpp"

#include <cmath>

#include "ecogrow/errors.hpp"

namespace ecogrow::diff {
namespace {

double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

double eval_loss(const std::function<Tensor(Tape&)>& loss) {
  Tape tape;
  const double value = loss(tape).item();
  if (!std::isfinite(value)) throw PipelineError("grad_check: non-finite loss");
  return value;
}

}  // namespace

GradCheckReport grad_check(const std::function<Tensor(Tape&)>& loss,
                           const std::vector<NamedParam>& params, double h, double tol,
                           const std::set<std::pair<std::string, std::size_t>>& exclude) {
  GradCheckReport report;

  // One analytic pass.
  for (const NamedParam& p : params) {
    Tensor t = p.tensor;
    t.zero_grad();
  }
  {
    Tape tape;
    Tensor value = loss(tape);
    if (!std::isfinite(value.item())) throw PipelineError("grad_check: non-finite loss");
    tape.backward(value);
  }
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const NamedParam& p : params) {
    auto grad = p.tensor.grad();
    analytic.emplace_back(grad.begin(), grad.end());
  }

  // Central differences, one entry at a time.
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor t = params[pi].tensor;
    auto values = t.value_mut();
    for (std::size_t i = 0; i < values.size(); ++i) {
      if (exclude.count({params[pi].name, i})) {
        ++report.excluded;
        continue;
      }
      const double original = values[i];
      values[i] = original + h;
      const double up = eval_loss(loss);
      values[i] = original - h;
      const double down = eval_loss(loss);
      values[i] = original;

      const double numeric = (up - down) / (2.0 * h);
      const double err = relative_error(analytic[pi][i], numeric);
      ++report.checked;
      if (err > report.max_rel_error) {
        report.max_rel_error = err;
        report.worst_param = params[pi].name;
        report.worst_index = i;
      }
      if (err > tol) {
        report.passed = false;
        report.failures.push_back({params[pi].name, i, analytic[pi][i], numeric, err});
      }
    }
  }
  return report;
}

}  // namespace ecogrow::diff
