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

#include "boundiff/autodiff.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <unordered_map>

#include "boundiff/error.h"

namespace boundiff::ad {
namespace {

using MatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

thread_local Tape* g_active_tape = nullptr;

ConstMatMap view(const Tensor& t) {
  return ConstMatMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}

ConstMatMap view(std::span<const double> d, const Shape& s) {
  return ConstMatMap(d.data(), static_cast<Eigen::Index>(s.rows),
                     static_cast<Eigen::Index>(s.cols));
}

MatMap view(double* d, const Shape& s) {
  return MatMap(d, static_cast<Eigen::Index>(s.rows), static_cast<Eigen::Index>(s.cols));
}

bool needs_record(std::initializer_list<const Tensor*> inputs) {
  if (g_active_tape == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->defined() && t->requires_grad()) return true;
  }
  return false;
}

// Creates the op output; records `fn` on the active tape when `record`.
Tensor finish(Shape shape, std::vector<double> data, bool record,
              std::vector<std::shared_ptr<TensorImpl>> inputs, Tape::BackwardFn fn) {
  Tensor out(shape, std::move(data), record);
  if (record) {
    out.impl()->is_leaf = false;
    g_active_tape->record(out.impl(), std::move(inputs), std::move(fn));
  }
  return out;
}

void require(bool ok, const char* what) {
  if (!ok) throw ShapeError(what);
}

// The message is only built on failure; these checks sit on the hot path.
template <typename MakeMessage>
void require(bool ok, MakeMessage&& make_message) {
  if (!ok) throw ShapeError(make_message());
}

enum class Broadcast { kSame, kRow, kScalar };

Broadcast broadcast_mode(const Tensor& a, const Tensor& b, std::string_view op) {
  if (a.shape() == b.shape()) return Broadcast::kSame;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (b.rows() == 1 && b.cols() == 1) return Broadcast::kScalar;
  throw ShapeError(std::string(op) + ": cannot broadcast " + to_string(b.shape()) + " onto " +
                   to_string(a.shape()));
}

inline size_t bindex(Broadcast mode, size_t i, size_t cols) {
  switch (mode) {
    case Broadcast::kSame:
      return i;
    case Broadcast::kRow:
      return i % cols;
    case Broadcast::kScalar:
      return 0;
  }
  return 0;
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

}  // namespace

std::string to_string(const Shape& shape) {
  return "(" + std::to_string(shape.rows) + "x" + std::to_string(shape.cols) + ")";
}

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(Shape shape, std::vector<double> data, bool requires_grad)
    : impl_(std::make_shared<TensorImpl>()) {
  if (data.size() != shape.numel()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + to_string(shape));
  }
  impl_->shape = shape;
  impl_->data = std::move(data);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(size_t rows, size_t cols, bool requires_grad) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, 0.0), requires_grad);
}

Tensor Tensor::filled(size_t rows, size_t cols, double value) {
  return Tensor({rows, cols}, std::vector<double>(rows * cols, value));
}

Tensor Tensor::scalar(double value) { return Tensor({1, 1}, {value}); }

double Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on non-scalar tensor " + to_string(shape()));
  return impl_->data[0];
}

std::vector<double> Tensor::grad() const {
  if (impl_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return impl_->grad;
}

std::span<double> Tensor::mutable_grad() {
  if (impl_->grad.empty()) impl_->grad.assign(numel(), 0.0);
  return impl_->grad;
}

Tensor Tensor::clone() const { return Tensor(shape(), impl_->data, false); }

// ---------------------------------------------------------------------------
// Tape

void Tape::record(std::shared_ptr<TensorImpl> output,
                  std::vector<std::shared_ptr<TensorImpl>> inputs, BackwardFn fn) {
  entries_.push_back({std::move(output), std::move(inputs), std::move(fn)});
}

double* grad_sink(TensorImpl& input) {
  if (!input.requires_grad) return nullptr;
  std::vector<double>& buf = input.is_leaf ? input.grad : input.scratch;
  if (buf.empty()) buf.assign(input.shape.numel(), 0.0);
  return buf.data();
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw ArgumentError("backward() needs a scalar loss");
  }
  TensorImpl& root = *loss.impl();
  if (root.is_leaf) {
    if (root.requires_grad) grad_sink(root)[0] += 1.0;
    return;
  }
  size_t end = entries_.size();
  while (end > 0 && entries_[end - 1].output.get() != &root) --end;
  if (end == 0) throw ArgumentError("backward(): loss was not produced on this tape");

  root.scratch.assign(1, 1.0);
  for (size_t i = end; i-- > 0;) {
    Entry& e = entries_[i];
    if (e.output->scratch.empty()) continue;
    e.fn(e.output->scratch);
    e.output->scratch.clear();
    e.output->scratch.shrink_to_fit();
  }
}

TapeScope::TapeScope(Tape& tape) : previous_(g_active_tape) { g_active_tape = &tape; }
TapeScope::~TapeScope() { g_active_tape = previous_; }

Tape* active_tape() { return g_active_tape; }

void backward(const Tensor& loss) {
  if (g_active_tape == nullptr) throw ArgumentError("backward() with no active tape");
  g_active_tape->backward(loss);
}

// ---------------------------------------------------------------------------
// Ops

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(),
          [&] { return "matmul: " + to_string(a.shape()) + " x " + to_string(b.shape()); });
  const Shape out_shape{a.rows(), b.cols()};
  std::vector<double> out(out_shape.numel());
  view(out.data(), out_shape).noalias() = view(a) * view(b);
  const bool rec = needs_record({&a, &b});
  if (!rec) return finish(out_shape, std::move(out), false, {}, nullptr);
  auto ai = a.impl();
  auto bi = b.impl();
  return finish(out_shape, std::move(out), true, {ai, bi},
                [ai, bi, out_shape](std::span<const double> g) {
                  auto G = view(g, out_shape);
                  if (double* da = grad_sink(*ai)) {
                    view(da, ai->shape).noalias() += G * view(bi->data, bi->shape).transpose();
                  }
                  if (double* db = grad_sink(*bi)) {
                    view(db, bi->shape).noalias() += view(ai->data, ai->shape).transpose() * G;
                  }
                });
}

Tensor transpose(const Tensor& a) {
  const Shape out_shape{a.cols(), a.rows()};
  std::vector<double> out(out_shape.numel());
  view(out.data(), out_shape) = view(a).transpose();
  const bool rec = needs_record({&a});
  auto ai = a.impl();
  return finish(out_shape, std::move(out), rec, {ai}, [ai, out_shape](std::span<const double> g) {
    if (double* da = grad_sink(*ai)) view(da, ai->shape) += view(g, out_shape).transpose();
  });
}

namespace {

// Shared body of add/sub: out = a + sign * b.
Tensor add_signed(const Tensor& a, const Tensor& b, double sign, std::string_view name) {
  const Broadcast mode = broadcast_mode(a, b, name);
  const size_t n = a.numel();
  const size_t cols = a.cols();
  std::vector<double> out(n);
  const auto ad = a.data();
  const auto bd = b.data();
  for (size_t i = 0; i < n; ++i) out[i] = ad[i] + sign * bd[bindex(mode, i, cols)];
  const bool rec = needs_record({&a, &b});
  auto ai = a.impl();
  auto bi = b.impl();
  return finish(a.shape(), std::move(out), rec, {ai, bi},
                [ai, bi, mode, sign, n, cols](std::span<const double> g) {
                  if (double* da = grad_sink(*ai)) {
                    for (size_t i = 0; i < n; ++i) da[i] += g[i];
                  }
                  if (double* db = grad_sink(*bi)) {
                    for (size_t i = 0; i < n; ++i) db[bindex(mode, i, cols)] += sign * g[i];
                  }
                });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return add_signed(a, b, 1.0, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return add_signed(a, b, -1.0, "sub"); }

Tensor mul(const Tensor& a, const Tensor& b) {
  const Broadcast mode = broadcast_mode(a, b, "mul");
  const size_t n = a.numel();
  const size_t cols = a.cols();
  std::vector<double> out(n);
  const auto ad = a.data();
  const auto bd = b.data();
  for (size_t i = 0; i < n; ++i) out[i] = ad[i] * bd[bindex(mode, i, cols)];
  const bool rec = needs_record({&a, &b});
  auto ai = a.impl();
  auto bi = b.impl();
  return finish(a.shape(), std::move(out), rec, {ai, bi},
                [ai, bi, mode, n, cols](std::span<const double> g) {
                  if (double* da = grad_sink(*ai)) {
                    for (size_t i = 0; i < n; ++i) da[i] += g[i] * bi->data[bindex(mode, i, cols)];
                  }
                  if (double* db = grad_sink(*bi)) {
                    for (size_t i = 0; i < n; ++i) db[bindex(mode, i, cols)] += g[i] * ai->data[i];
                  }
                });
}

Tensor scale(const Tensor& a, double factor) {
  const size_t n = a.numel();
  std::vector<double> out(n);
  const auto ad = a.data();
  for (size_t i = 0; i < n; ++i) out[i] = ad[i] * factor;
  const bool rec = needs_record({&a});
  auto ai = a.impl();
  return finish(a.shape(), std::move(out), rec, {ai}, [ai, factor, n](std::span<const double> g) {
    if (double* da = grad_sink(*ai)) {
      for (size_t i = 0; i < n; ++i) da[i] += factor * g[i];
    }
  });
}

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, size_t kernel) {
  require(kernel % 2 == 1, "conv1d: kernel size must be odd");
  const size_t L = x.rows();
  const size_t cin = x.cols();
  require(weight.rows() == kernel * cin,
          [&] { return "conv1d: weight " + to_string(weight.shape()) + " does not fit kernel " +
              std::to_string(kernel) + " x " + std::to_string(cin) + " channels"; });
  const size_t cout = weight.cols();
  if (bias.defined()) {
    require(bias.rows() == 1 && bias.cols() == cout, "conv1d: bias must be 1 x Cout");
  }
  const Shape cols_shape{L, kernel * cin};
  const size_t half = kernel / 2;

  // im2col: row l holds x[l-half .. l+half], zero padded.
  auto columns = std::make_shared<std::vector<double>>(cols_shape.numel(), 0.0);
  const auto xd = x.data();
  for (size_t l = 0; l < L; ++l) {
    for (size_t k = 0; k < kernel; ++k) {
      const long src = static_cast<long>(l + k) - static_cast<long>(half);
      if (src < 0 || src >= static_cast<long>(L)) continue;
      std::copy_n(xd.begin() + src * cin, cin, columns->begin() + (l * kernel + k) * cin);
    }
  }
  const Shape out_shape{L, cout};
  std::vector<double> out(out_shape.numel());
  auto O = view(out.data(), out_shape);
  O.noalias() = view(*columns, cols_shape) * view(weight);
  if (bias.defined()) O.rowwise() += view(bias).row(0);

  const bool rec = needs_record({&x, &weight, &bias});
  if (!rec) return finish(out_shape, std::move(out), false, {}, nullptr);
  auto xi = x.impl();
  auto wi = weight.impl();
  auto bi = bias.defined() ? bias.impl() : nullptr;
  std::vector<std::shared_ptr<TensorImpl>> inputs{xi, wi};
  if (bi) inputs.push_back(bi);
  return finish(
      out_shape, std::move(out), true, std::move(inputs),
      [xi, wi, bi, columns, cols_shape, out_shape, kernel, half, L, cin](std::span<const double> g) {
        auto G = view(g, out_shape);
        if (double* dw = grad_sink(*wi)) {
          view(dw, wi->shape).noalias() += view(*columns, cols_shape).transpose() * G;
        }
        if (bi) {
          if (double* db = grad_sink(*bi)) view(db, bi->shape).row(0) += G.colwise().sum();
        }
        if (double* dx = grad_sink(*xi)) {
          Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dcols =
              G * view(wi->data, wi->shape).transpose();
          for (size_t l = 0; l < L; ++l) {
            for (size_t k = 0; k < kernel; ++k) {
              const long src = static_cast<long>(l + k) - static_cast<long>(half);
              if (src < 0 || src >= static_cast<long>(L)) continue;
              const double* row = dcols.data() + l * kernel * cin + k * cin;
              double* dst = dx + src * cin;
              for (size_t c = 0; c < cin; ++c) dst[c] += row[c];
            }
          }
        }
      });
}

Tensor softmax_rows(const Tensor& a) {
  const size_t R = a.rows();
  const size_t C = a.cols();
  std::vector<double> out(a.numel());
  const auto ad = a.data();
  for (size_t r = 0; r < R; ++r) {
    const double* in = ad.data() + r * C;
    double* o = out.data() + r * C;
    const double mx = *std::max_element(in, in + C);
    double z = 0.0;
    for (size_t c = 0; c < C; ++c) z += (o[c] = std::exp(in[c] - mx));
    for (size_t c = 0; c < C; ++c) o[c] /= z;
  }
  const bool rec = needs_record({&a});
  if (!rec) return finish(a.shape(), std::move(out), false, {}, nullptr);
  auto ai = a.impl();
  auto saved = std::make_shared<std::vector<double>>(out);
  return finish(a.shape(), std::move(out), true, {ai}, [ai, saved, R, C](std::span<const double> g) {
    double* da = grad_sink(*ai);
    if (!da) return;
    for (size_t r = 0; r < R; ++r) {
      const double* y = saved->data() + r * C;
      const double* gr = g.data() + r * C;
      double dot = 0.0;
      for (size_t c = 0; c < C; ++c) dot += gr[c] * y[c];
      for (size_t c = 0; c < C; ++c) da[r * C + c] += y[c] * (gr[c] - dot);
    }
  });
}

Tensor layer_norm(const Tensor& x, const Tensor& gamma, const Tensor& beta, double eps) {
  const size_t R = x.rows();
  const size_t C = x.cols();
  require(gamma.rows() == 1 && gamma.cols() == C && beta.shape() == gamma.shape(),
          [&] { return "layer_norm: gamma/beta must be 1 x " + std::to_string(C); });
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(R);
  std::vector<double> out(x.numel());
  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  for (size_t r = 0; r < R; ++r) {
    const double* in = xd.data() + r * C;
    double mu = 0.0;
    for (size_t c = 0; c < C; ++c) mu += in[c];
    mu /= static_cast<double>(C);
    double var = 0.0;
    for (size_t c = 0; c < C; ++c) var += (in[c] - mu) * (in[c] - mu);
    var /= static_cast<double>(C);
    const double is = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = is;
    for (size_t c = 0; c < C; ++c) {
      const double h = (in[c] - mu) * is;
      (*xhat)[r * C + c] = h;
      out[r * C + c] = h * gd[c] + bd[c];
    }
  }
  const bool rec = needs_record({&x, &gamma, &beta});
  if (!rec) return finish(x.shape(), std::move(out), false, {}, nullptr);
  auto xi = x.impl();
  auto gi = gamma.impl();
  auto bi = beta.impl();
  return finish(x.shape(), std::move(out), true, {xi, gi, bi},
                [xi, gi, bi, xhat, inv_std, R, C](std::span<const double> g) {
                  double* dx = grad_sink(*xi);
                  double* dg = grad_sink(*gi);
                  double* db = grad_sink(*bi);
                  const double invC = 1.0 / static_cast<double>(C);
                  for (size_t r = 0; r < R; ++r) {
                    const double* gr = g.data() + r * C;
                    const double* h = xhat->data() + r * C;
                    if (dg || db) {
                      for (size_t c = 0; c < C; ++c) {
                        if (dg) dg[c] += gr[c] * h[c];
                        if (db) db[c] += gr[c];
                      }
                    }
                    if (!dx) continue;
                    double mean_gh = 0.0;
                    double mean_g = 0.0;
                    for (size_t c = 0; c < C; ++c) {
                      const double gg = gr[c] * gi->data[c];
                      mean_g += gg;
                      mean_gh += gg * h[c];
                    }
                    mean_g *= invC;
                    mean_gh *= invC;
                    const double is = (*inv_std)[r];
                    for (size_t c = 0; c < C; ++c) {
                      const double gg = gr[c] * gi->data[c];
                      dx[r * C + c] += is * (gg - mean_g - h[c] * mean_gh);
                    }
                  }
                });
}

Tensor gelu(const Tensor& a) {
  const size_t n = a.numel();
  std::vector<double> out(n);
  const auto ad = a.data();
  for (size_t i = 0; i < n; ++i) out[i] = 0.5 * ad[i] * (1.0 + std::erf(ad[i] * kInvSqrt2));
  const bool rec = needs_record({&a});
  auto ai = a.impl();
  return finish(a.shape(), std::move(out), rec, {ai}, [ai, n](std::span<const double> g) {
    double* da = grad_sink(*ai);
    if (!da) return;
    for (size_t i = 0; i < n; ++i) {
      const double x = ai->data[i];
      const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
      da[i] += g[i] * (cdf + x * pdf);
    }
  });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  require(!parts.empty(), "concat_cols: no inputs");
  const size_t R = parts.front().rows();
  size_t C = 0;
  bool rec = false;
  for (const Tensor& p : parts) {
    require(p.rows() == R, "concat_cols: row counts differ");
    C += p.cols();
    rec = rec || needs_record({&p});
  }
  std::vector<double> out(R * C);
  size_t offset = 0;
  for (const Tensor& p : parts) {
    const auto pd = p.data();
    for (size_t r = 0; r < R; ++r) {
      std::copy_n(pd.begin() + r * p.cols(), p.cols(), out.begin() + r * C + offset);
    }
    offset += p.cols();
  }
  if (!rec) return finish({R, C}, std::move(out), false, {}, nullptr);
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  for (const Tensor& p : parts) inputs.push_back(p.impl());
  auto captured = inputs;
  return finish({R, C}, std::move(out), true, std::move(inputs),
                [captured, R, C](std::span<const double> g) {
                  size_t off = 0;
                  for (const auto& pi : captured) {
                    const size_t pc = pi->shape.cols;
                    if (double* dp = grad_sink(*pi)) {
                      for (size_t r = 0; r < R; ++r) {
                        for (size_t c = 0; c < pc; ++c) dp[r * pc + c] += g[r * C + off + c];
                      }
                    }
                    off += pc;
                  }
                });
}

Tensor slice_cols(const Tensor& a, size_t begin, size_t count) {
  require(begin + count <= a.cols() && count > 0,
          [&] { return "slice_cols: [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") outside " + to_string(a.shape()); });
  const size_t R = a.rows();
  const size_t C = a.cols();
  std::vector<double> out(R * count);
  const auto ad = a.data();
  for (size_t r = 0; r < R; ++r) {
    std::copy_n(ad.begin() + r * C + begin, count, out.begin() + r * count);
  }
  const bool rec = needs_record({&a});
  auto ai = a.impl();
  return finish({R, count}, std::move(out), rec, {ai},
                [ai, R, C, begin, count](std::span<const double> g) {
                  double* da = grad_sink(*ai);
                  if (!da) return;
                  for (size_t r = 0; r < R; ++r) {
                    for (size_t c = 0; c < count; ++c) da[r * C + begin + c] += g[r * count + c];
                  }
                });
}

Tensor sum(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  const bool rec = needs_record({&a});
  auto ai = a.impl();
  return finish({1, 1}, {s}, rec, {ai}, [ai](std::span<const double> g) {
    double* da = grad_sink(*ai);
    if (!da) return;
    const size_t n = ai->shape.numel();
    for (size_t i = 0; i < n; ++i) da[i] += g[0];
  });
}

Tensor mean(const Tensor& a) {
  require(a.numel() > 0, "mean: empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(a.numel()));
}

Tensor mse(const Tensor& a, const Tensor& b) {
  require(a.shape() == b.shape(),
          [&] { return "mse: " + to_string(a.shape()) + " vs " + to_string(b.shape()); });
  require(a.numel() > 0, "mse: empty tensor");
  const size_t n = a.numel();
  const auto ad = a.data();
  const auto bd = b.data();
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double d = ad[i] - bd[i];
    s += d * d;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  const bool rec = needs_record({&a, &b});
  auto ai = a.impl();
  auto bi = b.impl();
  return finish({1, 1}, {s * inv_n}, rec, {ai, bi}, [ai, bi, n, inv_n](std::span<const double> g) {
    double* da = grad_sink(*ai);
    double* db = grad_sink(*bi);
    for (size_t i = 0; i < n; ++i) {
      const double d = 2.0 * inv_n * g[0] * (ai->data[i] - bi->data[i]);
      if (da) da[i] += d;
      if (db) db[i] -= d;
    }
  });
}

Tensor scale_shift(const Tensor& x, const Tensor& scale_row, const Tensor& shift_row) {
  const size_t R = x.rows();
  const size_t C = x.cols();
  require(scale_row.rows() == 1 && scale_row.cols() == C && shift_row.shape() == scale_row.shape(),
          [&] { return "scale_shift: scale/shift must be 1 x " + std::to_string(C); });
  std::vector<double> out(x.numel());
  const auto xd = x.data();
  const auto sd = scale_row.data();
  const auto hd = shift_row.data();
  for (size_t r = 0; r < R; ++r) {
    for (size_t c = 0; c < C; ++c) out[r * C + c] = xd[r * C + c] * (1.0 + sd[c]) + hd[c];
  }
  const bool rec = needs_record({&x, &scale_row, &shift_row});
  auto xi = x.impl();
  auto si = scale_row.impl();
  auto hi = shift_row.impl();
  return finish(x.shape(), std::move(out), rec, {xi, si, hi},
                [xi, si, hi, R, C](std::span<const double> g) {
                  double* dx = grad_sink(*xi);
                  double* ds = grad_sink(*si);
                  double* dh = grad_sink(*hi);
                  for (size_t r = 0; r < R; ++r) {
                    for (size_t c = 0; c < C; ++c) {
                      const double gv = g[r * C + c];
                      if (dx) dx[r * C + c] += gv * (1.0 + si->data[c]);
                      if (ds) ds[c] += gv * xi->data[r * C + c];
                      if (dh) dh[c] += gv;
                    }
                  }
                });
}

Tensor self_similarity(const Tensor& x, size_t window) {
  if (window < 1) throw ConfigError("self_similarity: window must be >= 1");
  const size_t L = x.rows();
  const size_t D = x.cols();
  const size_t S = 2 * window + 1;
  auto norms = std::make_shared<std::vector<double>>(L);
  const auto xd = x.data();
  for (size_t l = 0; l < L; ++l) {
    double n2 = 0.0;
    for (size_t d = 0; d < D; ++d) n2 += xd[l * D + d] * xd[l * D + d];
    (*norms)[l] = std::sqrt(n2);
  }
  auto pair_of = [L, window](size_t l, size_t j, size_t& m) {
    const long idx = static_cast<long>(l + j) - static_cast<long>(window);
    if (idx < 0 || idx >= static_cast<long>(L)) return false;
    m = static_cast<size_t>(idx);
    return true;
  };
  std::vector<double> out(L * S, 0.0);
  for (size_t l = 0; l < L; ++l) {
    for (size_t j = 0; j < S; ++j) {
      size_t m;
      if (!pair_of(l, j, m)) continue;
      const double nl = (*norms)[l];
      const double nm = (*norms)[m];
      if (nl == 0.0 || nm == 0.0) continue;
      double dot = 0.0;
      for (size_t d = 0; d < D; ++d) dot += xd[l * D + d] * xd[m * D + d];
      out[l * S + j] = dot / (nl * nm);
    }
  }
  const bool rec = needs_record({&x});
  if (!rec) return finish({L, S}, std::move(out), false, {}, nullptr);
  auto xi = x.impl();
  auto saved = std::make_shared<std::vector<double>>(out);
  return finish({L, S}, std::move(out), true, {xi},
                [xi, saved, norms, pair_of, L, D, S](std::span<const double> g) {
                  double* dx = grad_sink(*xi);
                  if (!dx) return;
                  const double* xv = xi->data.data();
                  for (size_t l = 0; l < L; ++l) {
                    for (size_t j = 0; j < S; ++j) {
                      size_t m;
                      if (!pair_of(l, j, m)) continue;
                      const double nl = (*norms)[l];
                      const double nm = (*norms)[m];
                      if (nl == 0.0 || nm == 0.0) continue;
                      const double gv = g[l * S + j];
                      if (gv == 0.0) continue;
                      const double cs = (*saved)[l * S + j];
                      const double inv = 1.0 / (nl * nm);
                      // d cos / d x_l = x_m / (|x_l||x_m|) - cos x_l / |x_l|^2, and
                      // symmetrically for x_m.
                      for (size_t d = 0; d < D; ++d) {
                        dx[l * D + d] += gv * (xv[m * D + d] * inv - cs * xv[l * D + d] / (nl * nl));
                        dx[m * D + d] += gv * (xv[l * D + d] * inv - cs * xv[m * D + d] / (nm * nm));
                      }
                    }
                  }
                });
}

Tensor linear(const Tensor& x, const Tensor& weight, const Tensor& bias) {
  Tensor y = matmul(x, weight);
  return bias.defined() ? add(y, bias) : y;
}

// ---------------------------------------------------------------------------
// Catalog

namespace {

struct CatalogEntry {
  OpKind kind;
  std::string_view name;
  size_t min_inputs;
  size_t max_inputs;
};

const CatalogEntry kCatalog[] = {
    {OpKind::kMatmul, "matmul", 2, 2},
    {OpKind::kTranspose, "transpose", 1, 1},
    {OpKind::kAdd, "add", 2, 2},
    {OpKind::kSub, "sub", 2, 2},
    {OpKind::kMul, "mul", 2, 2},
    {OpKind::kScale, "scale", 1, 1},
    {OpKind::kConv1d, "conv1d", 2, 3},
    {OpKind::kSoftmax, "softmax", 1, 1},
    {OpKind::kLayerNorm, "layer_norm", 3, 3},
    {OpKind::kGelu, "gelu", 1, 1},
    {OpKind::kConcatCols, "concat_cols", 1, 64},
    {OpKind::kSliceCols, "slice_cols", 1, 1},
    {OpKind::kSum, "sum", 1, 1},
    {OpKind::kMean, "mean", 1, 1},
    {OpKind::kMse, "mse", 2, 2},
    {OpKind::kScaleShift, "scale_shift", 3, 3},
    {OpKind::kSelfSimilarity, "self_similarity", 1, 1},
};

const CatalogEntry& entry_for(OpKind kind) {
  for (const auto& e : kCatalog) {
    if (e.kind == kind) return e;
  }
  throw ConfigError("unknown op kind");
}

}  // namespace

const std::vector<OpKind>& all_op_kinds() {
  static const std::vector<OpKind> kinds = [] {
    std::vector<OpKind> v;
    for (const auto& e : kCatalog) v.push_back(e.kind);
    return v;
  }();
  return kinds;
}

std::string_view op_name(OpKind kind) { return entry_for(kind).name; }

OpKind parse_op_kind(std::string_view name) {
  for (const auto& e : kCatalog) {
    if (e.name == name) return e.kind;
  }
  throw ConfigError("unknown op kind '" + std::string(name) + "'");
}

Tensor forward_op(OpKind kind, std::span<const Tensor> in, const OpAttrs& attrs) {
  const CatalogEntry& e = entry_for(kind);
  if (in.size() < e.min_inputs || in.size() > e.max_inputs) {
    throw ShapeError(std::string(e.name) + ": got " + std::to_string(in.size()) + " inputs");
  }
  switch (kind) {
    case OpKind::kMatmul:
      return matmul(in[0], in[1]);
    case OpKind::kTranspose:
      return transpose(in[0]);
    case OpKind::kAdd:
      return add(in[0], in[1]);
    case OpKind::kSub:
      return sub(in[0], in[1]);
    case OpKind::kMul:
      return mul(in[0], in[1]);
    case OpKind::kScale:
      return scale(in[0], attrs.factor);
    case OpKind::kConv1d:
      return conv1d(in[0], in[1], in.size() > 2 ? in[2] : Tensor(), attrs.kernel);
    case OpKind::kSoftmax:
      return softmax_rows(in[0]);
    case OpKind::kLayerNorm:
      return layer_norm(in[0], in[1], in[2], attrs.eps);
    case OpKind::kGelu:
      return gelu(in[0]);
    case OpKind::kConcatCols:
      return concat_cols(std::vector<Tensor>(in.begin(), in.end()));
    case OpKind::kSliceCols:
      return slice_cols(in[0], attrs.begin, attrs.count);
    case OpKind::kSum:
      return sum(in[0]);
    case OpKind::kMean:
      return mean(in[0]);
    case OpKind::kMse:
      return mse(in[0], in[1]);
    case OpKind::kScaleShift:
      return scale_shift(in[0], in[1], in[2]);
    case OpKind::kSelfSimilarity:
      return self_similarity(in[0], attrs.window);
  }
  throw ConfigError("unknown op kind");
}

Tensor forward_op(std::string_view kind, std::span<const Tensor> inputs, const OpAttrs& attrs) {
  return forward_op(parse_op_kind(kind), inputs, attrs);
}

// ---------------------------------------------------------------------------

double grad_check(const ScalarFn& f, std::vector<Tensor>& inputs, double eps) {
  for (Tensor& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  {
    Tape tape;
    TapeScope scope(tape);
    Tensor loss = f(inputs);
    tape.backward(loss);
  }
  double worst = 0.0;
  for (Tensor& t : inputs) {
    const std::vector<double> analytic = t.grad();
    auto values = t.mutable_data();
    for (size_t i = 0; i < values.size(); ++i) {
      const double original = values[i];
      values[i] = original + eps;
      const double up = f(inputs).item();
      values[i] = original - eps;
      const double down = f(inputs).item();
      values[i] = original;
      const double numeric = (up - down) / (2.0 * eps);
      const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
      worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    t.zero_grad();
  }
  return worst;
}

}  // namespace boundiff::ad
