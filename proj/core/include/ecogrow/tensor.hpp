#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "ecogrow/matrix.hpp"

namespace ecogrow::diff {

// Storage shared by Tensor handles. Ops capture parents by shared pointer, so
// forward values stay alive for the backward pass.
struct TensorData {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;  // sized on demand; zero-initialized
  bool requires_grad = false;
};

// A dense 2-d tensor of doubles. Copies share storage; a tensor that never
// touches a tape is plain immutable data.
class Tensor {
 public:
  Tensor() : data_(std::make_shared<TensorData>()) {}
  Tensor(std::size_t rows, std::size_t cols, double fill = 0.0, bool requires_grad = false);

  static Tensor scalar(double v, bool requires_grad = false);
  static Tensor row(std::vector<double> v, bool requires_grad = false);
  static Tensor column(std::vector<double> v, bool requires_grad = false);
  static Tensor from_matrix(const Matrix& m, bool requires_grad = false);
  Matrix to_matrix() const;

  std::size_t rows() const { return data_->rows; }
  std::size_t cols() const { return data_->cols; }
  std::size_t size() const { return data_->value.size(); }
  std::vector<std::size_t> shape() const { return {rows(), cols()}; }

  double at(std::size_t r, std::size_t c) const { return data_->value[r * cols() + c]; }
  double item() const;  // value of a 1x1 tensor

  std::span<const double> value() const { return data_->value; }
  // Mutable view for parameter updates and finite-difference probes. Must not
  // be used on values already consumed by a live tape.
  std::span<double> value_mut() { return data_->value; }

  bool requires_grad() const { return data_->requires_grad; }
  void set_requires_grad(bool flag);
  std::span<const double> grad() const;
  std::span<double> grad_mut();
  void zero_grad();

  bool shares_storage(const Tensor& other) const { return data_ == other.data_; }
  TensorData* impl() const { return data_.get(); }

 private:
  std::shared_ptr<TensorData> data_;
};

// Ordered record of executed ops. backward() replays the registered closures
// in exact reverse execution order, accumulating each parameter's gradient as
// the sum over all paths.
class Tape {
 public:
  void record(std::function<void()> backward_step) { steps_.push_back(std::move(backward_step)); }

  // Seeds d(loss)/d(loss) = 1 and runs all closures. Single use.
  void backward(const Tensor& loss);

  std::size_t recorded_steps() const { return steps_.size(); }

 private:
  std::vector<std::function<void()>> steps_;
  bool consumed_ = false;
};

inline constexpr double kBceEps = 1e-7;

// Op library. `tape` may be null for forward-only evaluation; gradients are
// tracked only when a tape is present and some input requires them.
Tensor matmul(Tape* tape, const Tensor& a, const Tensor& b);
// Same shape, or `b` a 1-row bias broadcast over `a`'s rows.
Tensor add(Tape* tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape* tape, const Tensor& a, const Tensor& b);
// Elementwise product, same shape.
Tensor mul(Tape* tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape* tape, const Tensor& a, double factor);
// sum_g weights[g] * terms[g] with weights a 1 x terms.size() tensor.
Tensor weighted_sum(Tape* tape, const Tensor& weights, const std::vector<Tensor>& terms);
Tensor concat_rows(Tape* tape, const std::vector<Tensor>& parts);
Tensor concat_cols(Tape* tape, const std::vector<Tensor>& parts);
Tensor gather_rows(Tape* tape, const Tensor& a, std::vector<std::size_t> rows);
Tensor slice_rows(Tape* tape, const Tensor& a, std::size_t begin, std::size_t count);
Tensor slice_cols(Tape* tape, const Tensor& a, std::size_t begin, std::size_t count);
Tensor transpose(Tape* tape, const Tensor& a);
// out[r] = elementwise max over a[g], g in groups[r]; an empty group yields a
// zero row. Backward routes to the argmax row only, ties to the lowest index.
Tensor max_over_rows(Tape* tape, const Tensor& a,
                     const std::vector<std::vector<std::size_t>>& groups);
// out[r] = mean over a[g], g in groups[r]; empty group -> zero row.
Tensor mean_over_rows(Tape* tape, const Tensor& a,
                      const std::vector<std::vector<std::size_t>>& groups);
Tensor relu(Tape* tape, const Tensor& a);
Tensor leaky_relu(Tape* tape, const Tensor& a, double negative_slope);
Tensor sigmoid(Tape* tape, const Tensor& a);
Tensor tanh(Tape* tape, const Tensor& a);
// Softmax over the entries of a single-row or single-column tensor.
Tensor softmax(Tape* tape, const Tensor& a);
Tensor row_sum(Tape* tape, const Tensor& a);  // n x c -> n x 1
Tensor sum(Tape* tape, const Tensor& a);      // -> 1 x 1
Tensor mean(Tape* tape, const Tensor& a);     // -> 1 x 1
// Mean binary cross-entropy; labels must be exactly 0 or 1; predictions are
// clamped to [kBceEps, 1 - kBceEps] before the logs.
Tensor bce(Tape* tape, const Tensor& pred, const Tensor& labels);

}  // namespace ecogrow::diff
