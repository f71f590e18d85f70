#include "ecogrow/matrix.hpp"

#include <cmath>

namespace ecogrow {

Matrix standardize_columns(const Matrix& m) {
  Matrix out(m.rows(), m.cols());
  if (m.rows() == 0) return out;
  const double n = static_cast<double>(m.rows());
  for (std::size_t c = 0; c < m.cols(); ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) mean += m(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows(); ++r) {
      const double d = m(r, c) - mean;
      var += d * d;
    }
    var /= n;
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      for (std::size_t r = 0; r < m.rows(); ++r) out(r, c) = (m(r, c) - mean) / sd;
    }
  }
  return out;
}

}  // namespace ecogrow
