// Copyright 2026 The Boundiff Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Define-by-run reverse-mode differentiation over dense row-major matrices.
//
// Every tensor is rank 2 (vectors are 1xN, scalars 1x1). Ops record onto the
// thread's active Tape only when a TapeScope is open and at least one input
// requires a gradient; outside a scope they are plain numeric kernels.
//
//   Tape tape;
//   {
//     TapeScope scope(tape);
//     Tensor loss = mse(matmul(x, w), y);
//     backward(loss);
//   }
//   // w.grad() now holds d loss / d w

#ifndef BOUNDIFF_AUTODIFF_H_
#define BOUNDIFF_AUTODIFF_H_

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace boundiff::ad {

struct Shape {
  size_t rows = 0;
  size_t cols = 0;

  size_t numel() const { return rows * cols; }
  bool operator==(const Shape&) const = default;
};

std::string to_string(const Shape& shape);

struct TensorImpl {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;     // leaf accumulator; empty until first write
  std::vector<double> scratch;  // adjoint of a non-leaf during backward
  bool requires_grad = false;
  bool is_leaf = true;
};

class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> data, bool requires_grad = false);

  static Tensor zeros(size_t rows, size_t cols, bool requires_grad = false);
  static Tensor filled(size_t rows, size_t cols, double value);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  size_t rows() const { return impl_->shape.rows; }
  size_t cols() const { return impl_->shape.cols; }
  size_t numel() const { return impl_->shape.numel(); }

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }
  double operator()(size_t r, size_t c) const { return impl_->data[r * cols() + c]; }
  double& at(size_t r, size_t c) { return impl_->data[r * cols() + c]; }

  // Value of a 1x1 tensor. Throws ShapeError otherwise.
  double item() const;

  bool requires_grad() const { return impl_->requires_grad; }
  void set_requires_grad(bool value) { impl_->requires_grad = value; }

  bool has_grad() const { return !impl_->grad.empty(); }
  // Accumulated gradient; all zeros if nothing was accumulated yet.
  std::vector<double> grad() const;
  std::span<double> mutable_grad();
  void zero_grad() { impl_->grad.clear(); }

  // Deep copy of the values only; the copy is a fresh leaf.
  Tensor clone() const;

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }

 private:
  std::shared_ptr<TensorImpl> impl_;
};

// Ordered record of executed ops. Entries are appended in execution order, so
// every entry's inputs were produced by earlier entries or are leaves.
class Tape {
 public:
  using BackwardFn = std::function<void(std::span<const double> output_grad)>;

  void record(std::shared_ptr<TensorImpl> output,
              std::vector<std::shared_ptr<TensorImpl>> inputs, BackwardFn fn);

  // Propagates d loss / d x to every requires_grad leaf reachable from
  // loss. Leaf gradients accumulate across calls.
  void backward(const Tensor& loss);

  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  void clear() { entries_.clear(); }

 private:
  struct Entry {
    std::shared_ptr<TensorImpl> output;
    std::vector<std::shared_ptr<TensorImpl>> inputs;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
};

// Makes `tape` the recording target for this thread until destruction.
class TapeScope {
 public:
  explicit TapeScope(Tape& tape);
  ~TapeScope();
  TapeScope(const TapeScope&) = delete;
  TapeScope& operator=(const TapeScope&) = delete;

 private:
  Tape* previous_;
};

Tape* active_tape();

// backward() on the active tape. Throws ArgumentError for a non-scalar loss
// or when no tape is active.
void backward(const Tensor& loss);

// Gradient sink for op implementations: the buffer an input's adjoint should
// be added into, or nullptr when that input does not need one.
double* grad_sink(TensorImpl& input);

// ---------------------------------------------------------------------------
// Op catalog. B in add/sub/mul may be the same shape as A, a 1xN row that is
// broadcast over A's rows, or a 1x1 scalar.

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
// Same-length 1-D convolution over rows. x: L x Cin, weight: (K*Cin) x Cout
// with row k*Cin + c multiplying x[l + k - K/2][c]; bias: 1 x Cout or
// undefined. K must be odd.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, size_t kernel);
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                  double eps = 1e-5);
Tensor gelu(const Tensor& a);
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(const Tensor& a, size_t begin, size_t count);
Tensor sum(const Tensor& a);
Tensor mean(const Tensor& a);
// mean((a - b)^2) over all entries.
Tensor mse(const Tensor& a, const Tensor& b);
// x * (1 + scale) + shift with 1xN scale/shift broadcast over rows.
Tensor scale_shift(const Tensor& x, const Tensor& scale, const Tensor& shift);
// Windowed cosine self-similarity: out(l, j) = cos(x_l, x_{l+j-window}),
// zero for out-of-range neighbours or zero-norm rows.
Tensor self_similarity(const Tensor& x, size_t window);

// x W + b, with b a 1xN row (or undefined).
Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias);

enum class OpKind {
  kMatmul,
  kTranspose,
  kAdd,
  kSub,
  kMul,
  kScale,
  kConv1d,
  kSoftmax,
  kLayerNorm,
  kGelu,
  kConcatCols,
  kSliceCols,
  kSum,
  kMean,
  kMse,
  kScaleShift,
  kSelfSimilarity,
};

struct OpAttrs {
  double factor = 1.0;  // scale
  double eps = 1e-5;    // layer_norm
  size_t begin = 0;     // slice_cols
  size_t count = 0;     // slice_cols
  size_t kernel = 3;    // conv1d
  size_t window = 1;    // self_similarity
};

const std::vector<OpKind>& all_op_kinds();
std::string_view op_name(OpKind kind);
// Throws ConfigError for names outside the catalog.
OpKind parse_op_kind(std::string_view name);

// Uniform entry point over the catalog. Throws ShapeError when the input
// count or shapes do not fit the op.
Tensor forward_op(OpKind kind, std::span<const Tensor> inputs, const OpAttrs& attrs = {});
Tensor forward_op(std::string_view kind, std::span<const Tensor> inputs,
                  const OpAttrs& attrs = {});

// Largest relative disagreement between backward() and central finite
// differences (f(x+eps) - f(x-eps)) / (2 eps) over every input coordinate,
// with denominator max(|analytic|, |numeric|, 1e-8). Marks every input as
// requiring grad and clears their gradients.
using ScalarFn = std::function<Tensor(std::span<const Tensor>)>;
double grad_check(const ScalarFn& f, std::vector<Tensor>& inputs, double eps = 1e-5);

}  // namespace boundiff::ad

#endif  // BOUNDIFF_AUTODIFF_H_
