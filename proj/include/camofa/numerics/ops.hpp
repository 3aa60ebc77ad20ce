// Copyright 2026 The CamoFA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "camofa/numerics/tape.hpp"
#include "camofa/numerics/tensor.hpp"

// Differentiable operations on Tape-recorded values. Images travel as
// channel-major [C x H x W] tensors; matrices are [rows x cols].

namespace camofa {

enum class Activation { relu, leaky_relu, tanh, sigmoid };

/// Negative-side slope of leaky_relu.
inline constexpr double kLeakySlope = 0.2;

enum class LossKind { l1_mean, bce_logits_mean, mse_mean };

/// How clamp01 routes gradients: exact (zero outside [0,1]) or
/// straight-through (identity everywhere).
enum class ClampGrad { exact, straight_through };

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw DimensionError(msg);
}

template <class T>
T sigmoid(T x) {
  if (x >= 0) return T{1} / (T{1} + std::exp(-x));
  const T e = std::exp(x);
  return e / (T{1} + e);
}

struct ConvGeom {
  std::size_t cin, h, w;      // conv2d input
  std::size_t cout, k;        // weight
  std::size_t stride, pad;
  std::size_t oh, ow;         // conv2d output
};

// Valid output index range [lo, hi) such that o*stride - pad + tap lies in [0, n).
inline void tap_range(std::size_t n, std::size_t out, std::size_t stride, std::size_t pad,
                      std::size_t tap, std::size_t& lo, std::size_t& hi) {
  const long long s = static_cast<long long>(stride);
  const long long off = static_cast<long long>(tap) - static_cast<long long>(pad);
  long long l = off >= 0 ? 0 : (-off + s - 1) / s;
  long long h = (static_cast<long long>(n) - 1 - off) / s + 1;
  if (static_cast<long long>(n) - 1 - off < 0) h = 0;
  l = std::max<long long>(l, 0);
  h = std::min<long long>(h, static_cast<long long>(out));
  lo = static_cast<std::size_t>(l);
  hi = static_cast<std::size_t>(std::max(h, l));
}

// cols[(ci, ky, kx), (oy, ox)] = in[ci, oy*s-p+ky, ox*s-p+kx], zero outside.
template <class T>
std::vector<T> im2col(const ConvGeom& g, const T* in) {
  const std::size_t n = g.oh * g.ow;
  std::vector<T> cols(g.cin * g.k * g.k * n, T{0});
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      std::size_t oy0, oy1;
      tap_range(g.h, g.oh, g.stride, g.pad, ky, oy0, oy1);
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        std::size_t ox0, ox1;
        tap_range(g.w, g.ow, g.stride, g.pad, kx, ox0, ox1);
        T* row = cols.data() + ((ci * g.k + ky) * g.k + kx) * n;
        for (std::size_t oy = oy0; oy < oy1; ++oy) {
          const T* irow = in + (ci * g.h + oy * g.stride + ky - g.pad) * g.w;
          for (std::size_t ox = ox0; ox < ox1; ++ox) row[oy * g.ow + ox] = irow[ox * g.stride + kx - g.pad];
        }
      }
    }
  return cols;
}

// Scatter-add of im2col's layout back onto the input grid.
template <class T>
void col2im_add(const ConvGeom& g, const T* cols, T* in) {
  const std::size_t n = g.oh * g.ow;
  for (std::size_t ci = 0; ci < g.cin; ++ci)
    for (std::size_t ky = 0; ky < g.k; ++ky) {
      std::size_t oy0, oy1;
      tap_range(g.h, g.oh, g.stride, g.pad, ky, oy0, oy1);
      for (std::size_t kx = 0; kx < g.k; ++kx) {
        std::size_t ox0, ox1;
        tap_range(g.w, g.ow, g.stride, g.pad, kx, ox0, ox1);
        const T* row = cols + ((ci * g.k + ky) * g.k + kx) * n;
        for (std::size_t oy = oy0; oy < oy1; ++oy) {
          T* irow = in + (ci * g.h + oy * g.stride + ky - g.pad) * g.w;
          for (std::size_t ox = ox0; ox < ox1; ++ox) irow[ox * g.stride + kx - g.pad] += row[oy * g.ow + ox];
        }
      }
    }
}

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// out[co, oy, ox] += w[co, ci, ky, kx] * in[ci, oy*s-p+ky, ox*s-p+kx]
template <class T>
void conv_forward(const ConvGeom& g, const T* in, const T* w, T* out) {
  const auto cols = im2col(g, in);
  const Eigen::Index taps = static_cast<Eigen::Index>(g.cin * g.k * g.k);
  const Eigen::Index n = static_cast<Eigen::Index>(g.oh * g.ow);
  Eigen::Map<RowMat<T>> o(out, static_cast<Eigen::Index>(g.cout), n);
  o.noalias() += Eigen::Map<const RowMat<T>>(w, static_cast<Eigen::Index>(g.cout), taps) *
                 Eigen::Map<const RowMat<T>>(cols.data(), taps, n);
}

// Adjoint of conv_forward w.r.t. its input: din[ci, iy, ix] += w * dout[co, oy, ox].
template <class T>
void conv_input_adjoint(const ConvGeom& g, const T* dout, const T* w, T* din) {
  const Eigen::Index taps = static_cast<Eigen::Index>(g.cin * g.k * g.k);
  const Eigen::Index n = static_cast<Eigen::Index>(g.oh * g.ow);
  RowMat<T> cols = Eigen::Map<const RowMat<T>>(w, static_cast<Eigen::Index>(g.cout), taps).transpose() *
                   Eigen::Map<const RowMat<T>>(dout, static_cast<Eigen::Index>(g.cout), n);
  col2im_add(g, cols.data(), din);
}

// dw[co, ci, ky, kx] += sum over outputs of dout[co, oy, ox] * in[ci, iy, ix].
template <class T>
void conv_weight_grad(const ConvGeom& g, const T* dout, const T* in, T* dw) {
  const auto cols = im2col(g, in);
  const Eigen::Index taps = static_cast<Eigen::Index>(g.cin * g.k * g.k);
  const Eigen::Index n = static_cast<Eigen::Index>(g.oh * g.ow);
  Eigen::Map<RowMat<T>> gw(dw, static_cast<Eigen::Index>(g.cout), taps);
  gw.noalias() += Eigen::Map<const RowMat<T>>(dout, static_cast<Eigen::Index>(g.cout), n) *
                  Eigen::Map<const RowMat<T>>(cols.data(), taps, n).transpose();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise arithmetic

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "add");
  Tensor<T> out = a.value();
  out += b.value();
  return a.tape()->record("add", std::move(out), {a, b},
                          [a, b](Tape<T>& t, const Tensor<T>& g) {
                            t.accumulate(a.id(), g);
                            t.accumulate(b.id(), g);
                          });
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "sub");
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape()->record("sub", std::move(out), {a, b},
                          [a, b](Tape<T>& t, const Tensor<T>& g) {
                            t.accumulate(a.id(), g);
                            if (t.requires_grad(b.id())) {
                              auto& gb = t.grad(b.id());
                              for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
                            }
                          });
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  a.value().require_same_shape(b.value(), "mul");
  Tensor<T> out = a.value();
  const auto& bv = b.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape()->record("mul", std::move(out), {a, b},
                          [a, b](Tape<T>& t, const Tensor<T>& g) {
                            const auto& av = t.value(a.id());
                            const auto& bv = t.value(b.id());
                            if (t.requires_grad(a.id())) {
                              auto& ga = t.grad(a.id());
                              for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
                            }
                            if (t.requires_grad(b.id())) {
                              auto& gb = t.grad(b.id());
                              for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
                            }
                          });
}

/// y = scale * x + shift
template <class T>
Var<T> affine(const Var<T>& x, T scale, T shift) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v = scale * v + shift;
  return x.tape()->record("affine", std::move(out), {x},
                          [x, scale](Tape<T>& t, const Tensor<T>& g) {
                            auto& gx = t.grad(x.id());
                            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += scale * g[i];
                          });
}

template <class T>
Var<T> sum(const Var<T>& x) {
  T s{0};
  for (T v : x.value().data()) s += v;
  return x.tape()->record("sum", Tensor<T>({1}, s), {x},
                          [x](Tape<T>& t, const Tensor<T>& g) {
                            auto& gx = t.grad(x.id());
                            for (auto& v : gx.data()) v += g[0];
                          });
}

template <class T>
Var<T> mean(const Var<T>& x) {
  return affine(sum(x), T{1} / static_cast<T>(x.value().size()), T{0});
}

/// Reinterprets the extents; data order is unchanged.
template <class T>
Var<T> reshape(const Var<T>& x, Shape shape) {
  Tensor<T> out = x.value().reshaped(std::move(shape));
  return x.tape()->record("reshape", std::move(out), {x},
                          [x](Tape<T>& t, const Tensor<T>& g) {
                            auto& gx = t.grad(x.id());
                            for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
                          });
}

/// out[i] = x[index[i]]; the backward pass scatter-adds.
template <class T>
Var<T> gather(const Var<T>& x, std::vector<std::size_t> index, Shape out_shape) {
  detail::require(shape_product(out_shape) == index.size(),
                  "gather: index length does not match " + shape_string(out_shape));
  const auto& xv = x.value();
  std::vector<T> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    detail::require(index[i] < xv.size(), "gather: index out of range");
    out[i] = xv[index[i]];
  }
  return x.tape()->record("gather", Tensor<T>(std::move(out_shape), std::move(out)), {x},
                          [x, index = std::move(index)](Tape<T>& t, const Tensor<T>& g) {
                            auto& gx = t.grad(x.id());
                            for (std::size_t i = 0; i < index.size(); ++i) gx[index[i]] += g[i];
                          });
}

/// Concatenation along the leading axis.
template <class T>
Var<T> concat0(const Var<T>& a, const Var<T>& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  detail::require(av.rank() == bv.rank() &&
                      std::equal(av.shape().begin() + 1, av.shape().end(), bv.shape().begin() + 1),
                  "concat0: trailing extents differ " + shape_string(av.shape()) + " vs " +
                      shape_string(bv.shape()));
  Shape shape = av.shape();
  shape[0] += bv.dim(0);
  std::vector<T> out;
  out.reserve(av.size() + bv.size());
  out.insert(out.end(), av.data().begin(), av.data().end());
  out.insert(out.end(), bv.data().begin(), bv.data().end());
  const std::size_t split = av.size();
  return a.tape()->record("concat0", Tensor<T>(std::move(shape), std::move(out)), {a, b},
                          [a, b, split](Tape<T>& t, const Tensor<T>& g) {
                            if (t.requires_grad(a.id())) {
                              auto& ga = t.grad(a.id());
                              for (std::size_t i = 0; i < split; ++i) ga[i] += g[i];
                            }
                            if (t.requires_grad(b.id())) {
                              auto& gb = t.grad(b.id());
                              for (std::size_t i = split; i < g.size(); ++i) gb[i - split] += g[i];
                            }
                          });
}

// ---------------------------------------------------------------------------
// Linear algebra

template <class T>
Var<T> matmul(const Var<T>& a, const Var<T>& b) {
  const auto& av = a.value();
  const auto& bv = b.value();
  if (av.rank() != 2 || bv.rank() != 2 || av.dim(1) != bv.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_string(av.shape()) + " and " +
                         shape_string(bv.shape()));
  }
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  using M = detail::RowMat<T>;
  const auto ei = [](std::size_t v) { return static_cast<Eigen::Index>(v); };
  Tensor<T> out({m, n});
  Eigen::Map<M>(out.data().data(), ei(m), ei(n)).noalias() =
      Eigen::Map<const M>(av.data().data(), ei(m), ei(k)) * Eigen::Map<const M>(bv.data().data(), ei(k), ei(n));
  return a.tape()->record("matmul", std::move(out), {a, b},
                          [a, b, m, k, n, ei](Tape<T>& t, const Tensor<T>& g) {
                            const Eigen::Map<const M> gm(g.data().data(), ei(m), ei(n));
                            if (t.requires_grad(a.id())) {  // g * b^T
                              const Eigen::Map<const M> bm(t.value(b.id()).data().data(), ei(k), ei(n));
                              Eigen::Map<M>(t.grad(a.id()).data().data(), ei(m), ei(k)).noalias() +=
                                  gm * bm.transpose();
                            }
                            if (t.requires_grad(b.id())) {  // a^T * g
                              const Eigen::Map<const M> am(t.value(a.id()).data().data(), ei(m), ei(k));
                              Eigen::Map<M>(t.grad(b.id()).data().data(), ei(k), ei(n)).noalias() +=
                                  am.transpose() * gm;
                            }
                          });
}

template <class T>
Var<T> transpose(const Var<T>& x) {
  const auto& xv = x.value();
  detail::require(xv.rank() == 2, "transpose: expected a matrix, got " + shape_string(xv.shape()));
  const std::size_t r = xv.dim(0), c = xv.dim(1);
  std::vector<std::size_t> index(r * c);
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t j = 0; j < r; ++j) index[i * r + j] = j * c + i;
  return gather(x, std::move(index), Shape{c, r});
}

// ---------------------------------------------------------------------------
// Convolutions

/// x: [C_in x H x W], w: [C_out x C_in x k x k] -> [C_out x H' x W'],
/// H' = floor((H + 2 pad - k) / stride) + 1. Zero padding.
template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, std::size_t stride, std::size_t pad) {
  const auto& xv = x.value();
  const auto& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(1) != xv.dim(0) || wv.dim(2) != wv.dim(3)) {
    throw DimensionError("conv2d: incompatible input " + shape_string(xv.shape()) +
                         " and weight " + shape_string(wv.shape()));
  }
  detail::require(stride >= 1, "conv2d: stride must be >= 1");
  const std::size_t k = wv.dim(2);
  if (k > xv.dim(1) + 2 * pad || k > xv.dim(2) + 2 * pad) {
    throw DimensionError("conv2d: kernel " + std::to_string(k) + " larger than padded input " +
                         shape_string(xv.shape()) + " with pad " + std::to_string(pad));
  }
  detail::ConvGeom g{xv.dim(0), xv.dim(1), xv.dim(2), wv.dim(0), k, stride, pad,
                     (xv.dim(1) + 2 * pad - k) / stride + 1,
                     (xv.dim(2) + 2 * pad - k) / stride + 1};
  Tensor<T> out({g.cout, g.oh, g.ow});
  detail::conv_forward(g, xv.data().data(), wv.data().data(), out.data().data());
  return x.tape()->record("conv2d", std::move(out), {x, w},
                          [x, w, g](Tape<T>& t, const Tensor<T>& go) {
                            if (t.requires_grad(x.id()))
                              detail::conv_input_adjoint(g, go.data().data(),
                                                         t.value(w.id()).data().data(),
                                                         t.grad(x.id()).data().data());
                            if (t.requires_grad(w.id()))
                              detail::conv_weight_grad(g, go.data().data(),
                                                       t.value(x.id()).data().data(),
                                                       t.grad(w.id()).data().data());
                          });
}

/// Adjoint of conv2d. x: [C_x x H x W], w: [C_x x C_out x k x k] (the same
/// weight conv2d would use to map C_out channels to C_x) -> [C_out x H'' x W''],
/// H'' = (H - 1) stride - 2 pad + k.
template <class T>
Var<T> conv2d_transpose(const Var<T>& x, const Var<T>& w, std::size_t stride, std::size_t pad) {
  const auto& xv = x.value();
  const auto& wv = w.value();
  if (xv.rank() != 3 || wv.rank() != 4 || wv.dim(0) != xv.dim(0) || wv.dim(2) != wv.dim(3)) {
    throw DimensionError("conv2d_transpose: incompatible input " + shape_string(xv.shape()) +
                         " and weight " + shape_string(wv.shape()));
  }
  detail::require(stride >= 1, "conv2d_transpose: stride must be >= 1");
  const std::size_t k = wv.dim(2);
  const long long oh = static_cast<long long>((xv.dim(1) - 1) * stride + k) - 2 * static_cast<long long>(pad);
  const long long ow = static_cast<long long>((xv.dim(2) - 1) * stride + k) - 2 * static_cast<long long>(pad);
  if (oh < 1 || ow < 1 || k > static_cast<std::size_t>(oh) + 2 * pad) {
    throw DimensionError("conv2d_transpose: kernel " + std::to_string(k) + " and pad " +
                         std::to_string(pad) + " give an empty output for input " +
                         shape_string(xv.shape()));
  }
  // Geometry of the forward conv whose adjoint this is.
  detail::ConvGeom g{wv.dim(1), static_cast<std::size_t>(oh), static_cast<std::size_t>(ow),
                     wv.dim(0), k, stride, pad, xv.dim(1), xv.dim(2)};
  Tensor<T> out({g.cin, g.h, g.w});
  detail::conv_input_adjoint(g, xv.data().data(), wv.data().data(), out.data().data());
  return x.tape()->record("conv2d_transpose", std::move(out), {x, w},
                          [x, w, g](Tape<T>& t, const Tensor<T>& go) {
                            if (t.requires_grad(x.id()))
                              detail::conv_forward(g, go.data().data(),
                                                   t.value(w.id()).data().data(),
                                                   t.grad(x.id()).data().data());
                            if (t.requires_grad(w.id()))
                              detail::conv_weight_grad(g, t.value(x.id()).data().data(),
                                                       go.data().data(),
                                                       t.grad(w.id()).data().data());
                          });
}

/// x: [C x H x W] plus per-channel bias b: [C].
template <class T>
Var<T> add_channel_bias(const Var<T>& x, const Var<T>& b) {
  const auto& xv = x.value();
  const auto& bv = b.value();
  detail::require(xv.rank() == 3 && bv.size() == xv.dim(0),
                  "add_channel_bias: bias " + shape_string(bv.shape()) + " vs input " +
                      shape_string(xv.shape()));
  const std::size_t plane = xv.dim(1) * xv.dim(2);
  Tensor<T> out = xv;
  for (std::size_t c = 0; c < xv.dim(0); ++c)
    for (std::size_t i = 0; i < plane; ++i) out[c * plane + i] += bv[c];
  return x.tape()->record("add_channel_bias", std::move(out), {x, b},
                          [x, b, plane](Tape<T>& t, const Tensor<T>& g) {
                            t.accumulate(x.id(), g);
                            if (t.requires_grad(b.id())) {
                              auto& gb = t.grad(b.id());
                              for (std::size_t c = 0; c < gb.size(); ++c) {
                                T acc{0};
                                for (std::size_t i = 0; i < plane; ++i) acc += g[c * plane + i];
                                gb[c] += acc;
                              }
                            }
                          });
}

// ---------------------------------------------------------------------------
// Nonlinearities

template <class T>
Var<T> activation(const Var<T>& x, Activation kind) {
  Tensor<T> out = x.value();
  const T slope = static_cast<T>(kLeakySlope);
  for (auto& v : out.data()) {
    switch (kind) {
      case Activation::relu: v = v > 0 ? v : T{0}; break;
      case Activation::leaky_relu: v = v > 0 ? v : slope * v; break;
      case Activation::tanh: v = std::tanh(v); break;
      case Activation::sigmoid: v = detail::sigmoid(v); break;
    }
  }
  return x.tape()->record(
      "activation", std::move(out), {x}, [x, kind, slope](Tape<T>& t, const Tensor<T>& g) {
        const auto& in = t.value(x.id());
        auto& gx = t.grad(x.id());
        for (std::size_t i = 0; i < g.size(); ++i) {
          T d{};
          switch (kind) {
            case Activation::relu: d = in[i] > 0 ? T{1} : T{0}; break;
            case Activation::leaky_relu: d = in[i] > 0 ? T{1} : slope; break;
            case Activation::tanh: {
              const T y = std::tanh(in[i]);
              d = T{1} - y * y;
              break;
            }
            case Activation::sigmoid: {
              const T y = detail::sigmoid(in[i]);
              d = y * (T{1} - y);
              break;
            }
          }
          gx[i] += g[i] * d;
        }
      });
}

/// Row-wise softmax of a matrix, max-subtracted.
template <class T>
Var<T> softmax_rows(const Var<T>& x) {
  const auto& xv = x.value();
  detail::require(xv.rank() == 2, "softmax_rows: expected a matrix, got " + shape_string(xv.shape()));
  const std::size_t rows = xv.dim(0), cols = xv.dim(1);
  Tensor<T> out({rows, cols});
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = &xv[r * cols];
    T* o = &out[r * cols];
    const T mx = *std::max_element(in, in + cols);
    T total{0};
    for (std::size_t c = 0; c < cols; ++c) total += (o[c] = std::exp(in[c] - mx));
    for (std::size_t c = 0; c < cols; ++c) o[c] /= total;
  }
  Tensor<T> y = out;
  return x.tape()->record("softmax_rows", std::move(out), {x},
                          [x, y = std::move(y), rows, cols](Tape<T>& t, const Tensor<T>& g) {
                            auto& gx = t.grad(x.id());
                            for (std::size_t r = 0; r < rows; ++r) {
                              T dot{0};
                              for (std::size_t c = 0; c < cols; ++c) dot += g[r * cols + c] * y[r * cols + c];
                              for (std::size_t c = 0; c < cols; ++c)
                                gx[r * cols + c] += y[r * cols + c] * (g[r * cols + c] - dot);
                            }
                          });
}

/// Whole-tensor standardization: (x - mean) / sigma with sigma^2 =
/// max(var, var_floor), population variance.
template <class T>
Var<T> standardize(const Var<T>& x, T var_floor) {
  const auto& xv = x.value();
  const T n = static_cast<T>(xv.size());
  T mu{0};
  for (T v : xv.data()) mu += v;
  mu /= n;
  T var{0};
  for (T v : xv.data()) var += (v - mu) * (v - mu);
  var /= n;
  const bool floored = !(var > var_floor);
  const T sigma = std::sqrt(floored ? var_floor : var);
  Tensor<T> out = xv;
  for (auto& v : out.data()) v = (v - mu) / sigma;
  Tensor<T> y = out;
  return x.tape()->record(
      "standardize", std::move(out), {x},
      [x, y = std::move(y), sigma, floored, n](Tape<T>& t, const Tensor<T>& g) {
        auto& gx = t.grad(x.id());
        T mean_g{0}, mean_gy{0};
        for (std::size_t i = 0; i < g.size(); ++i) {
          mean_g += g[i];
          mean_gy += g[i] * y[i];
        }
        mean_g /= n;
        mean_gy /= n;
        // With a floored sigma the scale is constant and only the mean couples.
        if (floored) mean_gy = T{0};
        for (std::size_t i = 0; i < g.size(); ++i) gx[i] += (g[i] - mean_g - y[i] * mean_gy) / sigma;
      });
}

template <class T>
Var<T> clamp01(const Var<T>& x, ClampGrad mode) {
  Tensor<T> out = x.value();
  for (auto& v : out.data()) v = std::clamp(v, T{0}, T{1});
  return x.tape()->record("clamp01", std::move(out), {x}, [x, mode](Tape<T>& t, const Tensor<T>& g) {
    const auto& in = t.value(x.id());
    auto& gx = t.grad(x.id());
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool inside = in[i] >= T{0} && in[i] <= T{1};
      if (mode == ClampGrad::straight_through || inside) gx[i] += g[i];
    }
  });
}

// ---------------------------------------------------------------------------
// Losses: mean over all elements, differentiable in both arguments.

template <class T>
Var<T> reduce_loss(const Var<T>& pred, const Var<T>& target, LossKind kind) {
  const auto& p = pred.value();
  const auto& y = target.value();
  p.require_same_shape(y, "reduce_loss");
  const T n = static_cast<T>(p.size());
  T total{0};
  for (std::size_t i = 0; i < p.size(); ++i) {
    switch (kind) {
      case LossKind::l1_mean: total += std::abs(p[i] - y[i]); break;
      case LossKind::mse_mean: total += (p[i] - y[i]) * (p[i] - y[i]); break;
      case LossKind::bce_logits_mean:
        total += std::max(p[i], T{0}) - p[i] * y[i] + std::log1p(std::exp(-std::abs(p[i])));
        break;
    }
  }
  return pred.tape()->record(
      "reduce_loss", Tensor<T>({1}, total / n), {pred, target},
      [pred, target, kind, n](Tape<T>& t, const Tensor<T>& g) {
        const auto& p = t.value(pred.id());
        const auto& y = t.value(target.id());
        const T s = g[0] / n;
        const bool gp = t.requires_grad(pred.id());
        const bool gt = t.requires_grad(target.id());
        Tensor<T>* dp = gp ? &t.grad(pred.id()) : nullptr;
        Tensor<T>* dt = gt ? &t.grad(target.id()) : nullptr;
        for (std::size_t i = 0; i < p.size(); ++i) {
          T d_pred{}, d_target{};
          switch (kind) {
            case LossKind::l1_mean: {
              const T diff = p[i] - y[i];
              d_pred = diff > 0 ? T{1} : (diff < 0 ? T{-1} : T{0});
              d_target = -d_pred;
              break;
            }
            case LossKind::mse_mean:
              d_pred = T{2} * (p[i] - y[i]);
              d_target = -d_pred;
              break;
            case LossKind::bce_logits_mean:
              d_pred = detail::sigmoid(p[i]) - y[i];
              d_target = -p[i];
              break;
          }
          if (dp) (*dp)[i] += s * d_pred;
          if (dt) (*dt)[i] += s * d_target;
        }
      });
}

}  // namespace camofa
