#include "ecogrow/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ecogrow/errors.hpp"

namespace ecogrow::diff {
namespace {

std::string shape_str(const Tensor& t) {
  return std::to_string(t.rows()) + "x" + std::to_string(t.cols());
}

[[noreturn]] void shape_error(const char* op, const Tensor& a) {
  throw ValidationError(std::string(op) + ": bad shape " + shape_str(a));
}

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
  throw ValidationError(std::string(op) + ": incompatible shapes " + shape_str(a) + " and " +
                        shape_str(b));
}

bool track(Tape* tape, std::initializer_list<const Tensor*> inputs) {
  if (!tape) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

Tensor make_output(std::size_t rows, std::size_t cols, bool requires_grad) {
  Tensor out(rows, cols, 0.0, requires_grad);
  return out;
}

// Shorthands used inside backward closures.
std::span<double> g(Tensor& t) { return t.grad_mut(); }
std::span<const double> v(const Tensor& t) { return t.value(); }

}  // namespace

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill, bool requires_grad)
    : data_(std::make_shared<TensorData>()) {
  data_->rows = rows;
  data_->cols = cols;
  data_->value.assign(rows * cols, fill);
  data_->requires_grad = requires_grad;
  if (requires_grad) data_->grad.assign(rows * cols, 0.0);
}

Tensor Tensor::scalar(double s, bool requires_grad) {
  Tensor t(1, 1, s, requires_grad);
  return t;
}

Tensor Tensor::row(std::vector<double> values, bool requires_grad) {
  Tensor t(1, values.size(), 0.0, requires_grad);
  std::copy(values.begin(), values.end(), t.data_->value.begin());
  return t;
}

Tensor Tensor::column(std::vector<double> values, bool requires_grad) {
  Tensor t(values.size(), 1, 0.0, requires_grad);
  std::copy(values.begin(), values.end(), t.data_->value.begin());
  return t;
}

Tensor Tensor::from_matrix(const Matrix& m, bool requires_grad) {
  Tensor t(m.rows(), m.cols(), 0.0, requires_grad);
  std::copy(m.data().begin(), m.data().end(), t.data_->value.begin());
  return t;
}

Matrix Tensor::to_matrix() const {
  Matrix m(rows(), cols());
  std::copy(data_->value.begin(), data_->value.end(), m.data().begin());
  return m;
}

double Tensor::item() const {
  if (size() != 1) throw ValidationError("item(): tensor is not 1x1");
  return data_->value[0];
}

void Tensor::set_requires_grad(bool flag) {
  data_->requires_grad = flag;
  if (flag && data_->grad.size() != data_->value.size()) {
    data_->grad.assign(data_->value.size(), 0.0);
  }
}

std::span<const double> Tensor::grad() const {
  if (data_->grad.size() != data_->value.size()) {
    data_->grad.assign(data_->value.size(), 0.0);
  }
  return data_->grad;
}

std::span<double> Tensor::grad_mut() {
  if (data_->grad.size() != data_->value.size()) {
    data_->grad.assign(data_->value.size(), 0.0);
  }
  return data_->grad;
}

void Tensor::zero_grad() {
  data_->grad.assign(data_->value.size(), 0.0);
}

void Tape::backward(const Tensor& loss) {
  if (consumed_) throw ValidationError("Tape::backward called twice");
  if (loss.size() != 1) throw ValidationError("backward: loss must be a 1x1 tensor");
  consumed_ = true;
  Tensor seed = loss;
  seed.grad_mut()[0] = 1.0;
  for (auto it = steps_.rbegin(); it != steps_.rend(); ++it) (*it)();
}

Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  Tensor out = make_output(m, n, track(tape, {&a, &b}));
  auto ov = out.value_mut();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a.value()[i * k + p];
      if (av == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) ov[i * n + j] += av * b.value()[p * n + j];
    }
  }
  if (out.requires_grad()) {
    tape->record([a = a, b = b, out = out]() mutable {
      const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
      auto og = out.grad();
      if (a.requires_grad()) {
        auto ag = g(a);
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += og[i * n + j] * v(b)[p * n + j];
            ag[i * k + p] += acc;
          }
        }
      }
      if (b.requires_grad()) {
        auto bg = g(b);
        for (std::size_t p = 0; p < k; ++p) {
          for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t i = 0; i < m; ++i) acc += v(a)[i * k + p] * og[i * n + j];
            bg[p * n + j] += acc;
          }
        }
      }
    });
  }
  return out;
}

Tensor add(Tape* tape, const Tensor& a, const Tensor& b) {
  const bool bias = b.rows() == 1 && a.cols() == b.cols() && a.rows() != 1;
  if (!bias && (a.rows() != b.rows() || a.cols() != b.cols())) shape_error("add", a, b);
  Tensor out = make_output(a.rows(), a.cols(), track(tape, {&a, &b}));
  auto ov = out.value_mut();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) {
      ov[r * a.cols() + c] = a.value()[r * a.cols() + c] + (bias ? b.value()[c] : b.value()[r * a.cols() + c]);
    }
  }
  if (out.requires_grad()) {
    tape->record([a = a, b = b, out = out, bias]() mutable {
      auto og = out.grad();
      if (a.requires_grad()) {
        auto ag = g(a);
        for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i];
      }
      if (b.requires_grad()) {
        auto bg = g(b);
        if (bias) {
          for (std::size_t r = 0; r < a.rows(); ++r) {
            for (std::size_t c = 0; c < a.cols(); ++c) bg[c] += og[r * a.cols() + c];
          }
        } else {
          for (std::size_t i = 0; i < og.size(); ++i) bg[i] += og[i];
        }
      }
    });
  }
  return out;
}

Tensor sub(Tape* tape, const Tensor& a, const Tensor& b) {
  return add(tape, a, scale(tape, b, -1.0));
}

Tensor mul(Tape* tape, const Tensor& a, const Tensor& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error("mul", a, b);
  Tensor out = make_output(a.rows(), a.cols(), track(tape, {&a, &b}));
  auto ov = out.value_mut();
  for (std::size_t i = 0; i < out.size(); ++i) ov[i] = a.value()[i] * b.value()[i];
  if (out.requires_grad()) {
    tape->record([a = a, b = b, out = out]() mutable {
      auto og = out.grad();
      if (a.requires_grad()) {
        auto ag = g(a);
        for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i] * v(b)[i];
      }
      if (b.requires_grad()) {
        auto bg = g(b);
        for (std::size_t i = 0; i < og.size(); ++i) bg[i] += og[i] * v(a)[i];
      }
    });
  }
  return out;
}

Tensor scale(Tape* tape, const Tensor& a, double factor) {
  Tensor out = make_output(a.rows(), a.cols(), track(tape, {&a}));
  auto ov = out.value_mut();
  for (std::size_t i = 0; i < out.size(); ++i) ov[i] = a.value()[i] * factor;
  if (out.requires_grad()) {
    tape->record([a = a, out = out, factor]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i] * factor;
    });
  }
  return out;
}

Tensor weighted_sum(Tape* tape, const Tensor& weights, const std::vector<Tensor>& terms) {
  if (weights.rows() != 1 || weights.cols() != terms.size()) {
    throw ValidationError("weighted_sum: weights must be 1x" + std::to_string(terms.size()));
  }
  if (terms.empty()) throw ValidationError("weighted_sum: no terms");
  const std::size_t rows = terms[0].rows(), cols = terms[0].cols();
  bool needs = weights.requires_grad();
  for (const Tensor& t : terms) {
    if (t.rows() != rows || t.cols() != cols) shape_error("weighted_sum", terms[0], t);
    needs = needs || t.requires_grad();
  }
  Tensor out = make_output(rows, cols, tape && needs);
  auto ov = out.value_mut();
  for (std::size_t t = 0; t < terms.size(); ++t) {
    const double w = weights.value()[t];
    for (std::size_t i = 0; i < ov.size(); ++i) ov[i] += w * terms[t].value()[i];
  }
  if (out.requires_grad()) {
    tape->record([weights = weights, terms = terms, out = out]() mutable {
      auto og = out.grad();
      for (std::size_t t = 0; t < terms.size(); ++t) {
        if (terms[t].requires_grad()) {
          auto tg = g(terms[t]);
          const double w = v(weights)[t];
          for (std::size_t i = 0; i < og.size(); ++i) tg[i] += w * og[i];
        }
      }
      if (weights.requires_grad()) {
        auto wg = g(weights);
        for (std::size_t t = 0; t < terms.size(); ++t) {
          double acc = 0.0;
          for (std::size_t i = 0; i < og.size(); ++i) acc += og[i] * v(terms[t])[i];
          wg[t] += acc;
        }
      }
    });
  }
  return out;
}

Tensor concat_rows(Tape* tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValidationError("concat_rows: no parts");
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  bool needs = false;
  for (const Tensor& p : parts) {
    if (p.cols() != cols) shape_error("concat_rows", parts[0], p);
    rows += p.rows();
    needs = needs || p.requires_grad();
  }
  Tensor out = make_output(rows, cols, tape && needs);
  auto ov = out.value_mut();
  std::size_t offset = 0;
  for (const Tensor& p : parts) {
    std::copy(p.value().begin(), p.value().end(), ov.begin() + static_cast<std::ptrdiff_t>(offset));
    offset += p.size();
  }
  if (out.requires_grad()) {
    tape->record([parts = parts, out = out]() mutable {
      auto og = out.grad();
      std::size_t offset = 0;
      for (Tensor& p : parts) {
        if (p.requires_grad()) {
          auto pg = g(p);
          for (std::size_t i = 0; i < pg.size(); ++i) pg[i] += og[offset + i];
        }
        offset += p.size();
      }
    });
  }
  return out;
}

Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ValidationError("concat_cols: no parts");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  bool needs = false;
  for (const Tensor& p : parts) {
    if (p.rows() != rows) shape_error("concat_cols", parts[0], p);
    cols += p.cols();
    needs = needs || p.requires_grad();
  }
  Tensor out = make_output(rows, cols, tape && needs);
  auto ov = out.value_mut();
  std::size_t col_offset = 0;
  for (const Tensor& p : parts) {
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < p.cols(); ++c) {
        ov[r * cols + col_offset + c] = p.value()[r * p.cols() + c];
      }
    }
    col_offset += p.cols();
  }
  if (out.requires_grad()) {
    tape->record([parts = parts, out = out, rows, cols]() mutable {
      auto og = out.grad();
      std::size_t col_offset = 0;
      for (Tensor& p : parts) {
        if (p.requires_grad()) {
          auto pg = g(p);
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < p.cols(); ++c) {
              pg[r * p.cols() + c] += og[r * cols + col_offset + c];
            }
          }
        }
        col_offset += p.cols();
      }
    });
  }
  return out;
}

Tensor gather_rows(Tape* tape, const Tensor& a, std::vector<std::size_t> rows) {
  for (std::size_t r : rows) {
    if (r >= a.rows()) shape_error("gather_rows", a);
  }
  Tensor out = make_output(rows.size(), a.cols(), track(tape, {&a}));
  auto ov = out.value_mut();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy(a.value().begin() + static_cast<std::ptrdiff_t>(rows[i] * a.cols()),
              a.value().begin() + static_cast<std::ptrdiff_t>((rows[i] + 1) * a.cols()),
              ov.begin() + static_cast<std::ptrdiff_t>(i * a.cols()));
  }
  if (out.requires_grad()) {
    tape->record([a = a, out = out, rows = std::move(rows)]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t c = 0; c < a.cols(); ++c) {
          ag[rows[i] * a.cols() + c] += og[i * a.cols() + c];
        }
      }
    });
  }
  return out;
}

Tensor slice_rows(Tape* tape, const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.rows()) shape_error("slice_rows", a);
  std::vector<std::size_t> rows(count);
  for (std::size_t i = 0; i < count; ++i) rows[i] = begin + i;
  return gather_rows(tape, a, std::move(rows));
}

Tensor slice_cols(Tape* tape, const Tensor& a, std::size_t begin, std::size_t count) {
  if (begin + count > a.cols()) shape_error("slice_cols", a);
  Tensor out = make_output(a.rows(), count, track(tape, {&a}));
  auto ov = out.value_mut();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < count; ++c) ov[r * count + c] = a.value()[r * a.cols() + begin + c];
  }
  if (out.requires_grad()) {
    tape->record([a = a, out = out, begin, count]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < count; ++c) ag[r * a.cols() + begin + c] += og[r * count + c];
      }
    });
  }
  return out;
}

Tensor transpose(Tape* tape, const Tensor& a) {
  Tensor out = make_output(a.cols(), a.rows(), track(tape, {&a}));
  auto ov = out.value_mut();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    for (std::size_t c = 0; c < a.cols(); ++c) ov[c * a.rows() + r] = a.value()[r * a.cols() + c];
  }
  if (out.requires_grad()) {
    tape->record([a = a, out = out]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) ag[r * a.cols() + c] += og[c * a.rows() + r];
      }
    });
  }
  return out;
}

Tensor max_over_rows(Tape* tape, const Tensor& a,
                     const std::vector<std::vector<std::size_t>>& groups) {
  const std::size_t cols = a.cols();
  Tensor out = make_output(groups.size(), cols, track(tape, {&a}));
  auto ov = out.value_mut();
  // argmax per output cell, computed with the tie rule (lowest row index);
  // kept for the backward routing so forward and backward always agree.
  std::vector<std::size_t> argmax(groups.size() * cols, 0);
  for (std::size_t r = 0; r < groups.size(); ++r) {
    const auto& group = groups[r];
    if (group.empty()) continue;
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t best = group[0];
      double best_v = a.value()[group[0] * cols + c];
      for (std::size_t k = 1; k < group.size(); ++k) {
        const std::size_t j = group[k];
        const double val = a.value()[j * cols + c];
        if (val > best_v || (val == best_v && j < best)) {
          best_v = val;
          best = j;
        }
      }
      ov[r * cols + c] = best_v;
      argmax[r * cols + c] = best;
    }
  }
  if (out.requires_grad()) {
    std::vector<bool> nonempty(groups.size());
    for (std::size_t r = 0; r < groups.size(); ++r) nonempty[r] = !groups[r].empty();
    tape->record([a = a, out = out, argmax = std::move(argmax),
                  nonempty = std::move(nonempty), cols]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      for (std::size_t r = 0; r < nonempty.size(); ++r) {
        if (!nonempty[r]) continue;
        for (std::size_t c = 0; c < cols; ++c) {
          ag[argmax[r * cols + c] * cols + c] += og[r * cols + c];
        }
      }
    });
  }
  return out;
}

Tensor mean_over_rows(Tape* tape, const Tensor& a,
                      const std::vector<std::vector<std::size_t>>& groups) {
  const std::size_t cols = a.cols();
  Tensor out = make_output(groups.size(), cols, track(tape, {&a}));
  auto ov = out.value_mut();
  for (std::size_t r = 0; r < groups.size(); ++r) {
    if (groups[r].empty()) continue;
    const double inv = 1.0 / static_cast<double>(groups[r].size());
    for (std::size_t j : groups[r]) {
      for (std::size_t c = 0; c < cols; ++c) ov[r * cols + c] += a.value()[j * cols + c] * inv;
    }
  }
  if (out.requires_grad()) {
    tape->record([a = a, out = out, groups = groups, cols]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      for (std::size_t r = 0; r < groups.size(); ++r) {
        if (groups[r].empty()) continue;
        const double inv = 1.0 / static_cast<double>(groups[r].size());
        for (std::size_t j : groups[r]) {
          for (std::size_t c = 0; c < cols; ++c) ag[j * cols + c] += og[r * cols + c] * inv;
        }
      }
    });
  }
  return out;
}

namespace {

template <typename Fwd, typename Dydx>
Tensor unary_op(Tape* tape, const Tensor& a, Fwd fwd, Dydx dydx) {
  Tensor out(a.rows(), a.cols(), 0.0, tape && a.requires_grad());
  auto ov = out.value_mut();
  for (std::size_t i = 0; i < out.size(); ++i) ov[i] = fwd(a.value()[i]);
  if (out.requires_grad()) {
    tape->record([a = a, out = out, dydx]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      for (std::size_t i = 0; i < og.size(); ++i) ag[i] += og[i] * dydx(v(a)[i], v(out)[i]);
    });
  }
  return out;
}

}  // namespace

Tensor relu(Tape* tape, const Tensor& a) {
  return unary_op(
      tape, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(Tape* tape, const Tensor& a, double negative_slope) {
  return unary_op(
      tape, a, [negative_slope](double x) { return x > 0.0 ? x : negative_slope * x; },
      [negative_slope](double x, double) { return x > 0.0 ? 1.0 : negative_slope; });
}

Tensor sigmoid(Tape* tape, const Tensor& a) {
  return unary_op(
      tape, a, [](double x) { return 1.0 / (1.0 + std::exp(-x)); },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(Tape* tape, const Tensor& a) {
  return unary_op(
      tape, a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

Tensor softmax(Tape* tape, const Tensor& a) {
  if (a.rows() != 1 && a.cols() != 1) shape_error("softmax", a);
  Tensor out = make_output(a.rows(), a.cols(), track(tape, {&a}));
  auto ov = out.value_mut();
  double max_v = a.value()[0];
  for (double x : a.value()) max_v = std::max(max_v, x);
  double total = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ov[i] = std::exp(a.value()[i] - max_v);
    total += ov[i];
  }
  for (std::size_t i = 0; i < a.size(); ++i) ov[i] /= total;
  if (out.requires_grad()) {
    tape->record([a = a, out = out]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      double dot = 0.0;
      for (std::size_t i = 0; i < og.size(); ++i) dot += og[i] * v(out)[i];
      for (std::size_t i = 0; i < og.size(); ++i) ag[i] += v(out)[i] * (og[i] - dot);
    });
  }
  return out;
}

Tensor row_sum(Tape* tape, const Tensor& a) {
  Tensor out = make_output(a.rows(), 1, track(tape, {&a}));
  auto ov = out.value_mut();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a.cols(); ++c) acc += a.value()[r * a.cols() + c];
    ov[r] = acc;
  }
  if (out.requires_grad()) {
    tape->record([a = a, out = out]() mutable {
      auto ag = g(a);
      auto og = out.grad();
      for (std::size_t r = 0; r < a.rows(); ++r) {
        for (std::size_t c = 0; c < a.cols(); ++c) ag[r * a.cols() + c] += og[r];
      }
    });
  }
  return out;
}

Tensor sum(Tape* tape, const Tensor& a) {
  Tensor out = make_output(1, 1, track(tape, {&a}));
  double acc = 0.0;
  for (double x : a.value()) acc += x;
  out.value_mut()[0] = acc;
  if (out.requires_grad()) {
    tape->record([a = a, out = out]() mutable {
      auto ag = g(a);
      const double og = out.grad()[0];
      for (std::size_t i = 0; i < ag.size(); ++i) ag[i] += og;
    });
  }
  return out;
}

Tensor mean(Tape* tape, const Tensor& a) {
  if (a.size() == 0) throw ValidationError("mean of an empty tensor");
  return scale(tape, sum(tape, a), 1.0 / static_cast<double>(a.size()));
}

Tensor bce(Tape* tape, const Tensor& pred, const Tensor& labels) {
  if (pred.rows() != labels.rows() || pred.cols() != labels.cols()) {
    shape_error("bce", pred, labels);
  }
  if (pred.size() == 0) throw ValidationError("bce over an empty prediction set");
  for (double y : labels.value()) {
    if (y != 0.0 && y != 1.0) throw ValidationError("bce: labels must be exactly 0 or 1");
  }
  const double inv_n = 1.0 / static_cast<double>(pred.size());
  Tensor out = make_output(1, 1, track(tape, {&pred}));
  double acc = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double p = std::clamp(pred.value()[i], kBceEps, 1.0 - kBceEps);
    const double y = labels.value()[i];
    acc += -(y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
  }
  out.value_mut()[0] = acc * inv_n;
  if (out.requires_grad()) {
    tape->record([pred = pred, labels = labels, out = out, inv_n]() mutable {
      auto pg = g(pred);
      const double og = out.grad()[0];
      for (std::size_t i = 0; i < pred.size(); ++i) {
        const double raw = v(pred)[i];
        if (raw < kBceEps || raw > 1.0 - kBceEps) continue;  // clamped: zero slope
        const double y = v(labels)[i];
        pg[i] += og * inv_n * (raw - y) / (raw * (1.0 - raw));
      }
    });
  }
  return out;
}

}  // namespace ecogrow::diff
