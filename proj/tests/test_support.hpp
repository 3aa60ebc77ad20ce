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

// Test-only oracles: central finite differences and naive reference loops.
// Nothing here calls into the code paths it is used to check, except to
// evaluate the scalar loss being differentiated.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numbers>
#include <vector>

#include "camofa/numerics.hpp"
#include "camofa/spectral.hpp"

namespace camofa::testing {

using LossBuilder = std::function<Var<double>(Tape<double>&, const std::vector<Var<double>>&)>;

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t nonzero = 0;
};

/// |a - n| / max(|a|, |n|, floor)
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares backward() gradients with central differences of step h. At most
/// `per_param` entries of each parameter are probed, spread evenly. Gradients
/// below `floor` are compared on an absolute scale.
inline GradCheck check_gradients(const std::vector<Parameter<double>*>& params, const LossBuilder& build,
                                 double h = 1e-5, std::size_t per_param = 64, double floor = 1e-6) {
  for (auto* p : params) p->zero_grad();
  {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (auto* p : params) vars.push_back(tape.watch(*p));
    tape.backward(build(tape, vars));
  }
  auto eval = [&]() {
    Tape<double> tape;
    std::vector<Var<double>> vars;
    for (auto* p : params) vars.push_back(tape.constant(p->value));
    return build(tape, vars).value()[0];
  };
  GradCheck out;
  for (auto* p : params) {
    const std::size_t n = p->value.size();
    const std::size_t stride = std::max<std::size_t>(1, n / per_param);
    for (std::size_t i = 0; i < n; i += stride) {
      const double orig = p->value[i];
      p->value[i] = orig + h;
      const double up = eval();
      p->value[i] = orig - h;
      const double down = eval();
      p->value[i] = orig;
      const double numeric = (up - down) / (2 * h);
      out.max_rel_error = std::max(out.max_rel_error, relative_error(p->grad[i], numeric, floor));
      ++out.checked;
      out.nonzero += p->grad[i] != 0.0;
    }
  }
  return out;
}

template <class T>
Tensor<T> random_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<T> t(std::move(shape));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

inline Image random_image(std::size_t h, std::size_t w, std::size_t c, Rng& rng) {
  Image img(h, w, c);
  for (auto& v : img.pixels) v = static_cast<float>(rng.uniform());
  return img;
}

/// Naive triple loop.
inline std::vector<double> naive_matmul(const std::vector<double>& a, const std::vector<double>& b,
                                        std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t p = 0; p < k; ++p) c[i * n + j] += a[i * k + p] * b[p * n + j];
  return c;
}

/// Direct nested-loop convolution with explicit bounds checks.
inline std::vector<double> naive_conv2d(const Tensor<double>& x, const Tensor<double>& w, std::size_t stride,
                                        std::size_t pad, std::size_t& oh, std::size_t& ow) {
  const long cin = static_cast<long>(x.dim(0)), h = static_cast<long>(x.dim(1)), wd = static_cast<long>(x.dim(2));
  const long cout = static_cast<long>(w.dim(0)), k = static_cast<long>(w.dim(2));
  oh = static_cast<std::size_t>((h + 2 * static_cast<long>(pad) - k) / static_cast<long>(stride) + 1);
  ow = static_cast<std::size_t>((wd + 2 * static_cast<long>(pad) - k) / static_cast<long>(stride) + 1);
  std::vector<double> out(static_cast<std::size_t>(cout) * oh * ow, 0.0);
  for (long co = 0; co < cout; ++co)
    for (long oy = 0; oy < static_cast<long>(oh); ++oy)
      for (long ox = 0; ox < static_cast<long>(ow); ++ox) {
        double acc = 0.0;
        for (long ci = 0; ci < cin; ++ci)
          for (long ky = 0; ky < k; ++ky)
            for (long kx = 0; kx < k; ++kx) {
              const long iy = oy * static_cast<long>(stride) - static_cast<long>(pad) + ky;
              const long ix = ox * static_cast<long>(stride) - static_cast<long>(pad) + kx;
              if (iy < 0 || ix < 0 || iy >= h || ix >= wd) continue;
              acc += w[static_cast<std::size_t>(((co * cin + ci) * k + ky) * k + kx)] *
                     x[static_cast<std::size_t>((ci * h + iy) * wd + ix)];
            }
        out[static_cast<std::size_t>((co * static_cast<long>(oh) + oy) * static_cast<long>(ow) + ox)] = acc;
      }
  return out;
}

/// O(N^4) 2D DFT of a real H x W plane, raw layout.
inline std::vector<std::complex<double>> direct_dft2(const std::vector<double>& plane, std::size_t h,
                                                     std::size_t w) {
  std::vector<std::complex<double>> out(h * w);
  for (std::size_t u = 0; u < h; ++u)
    for (std::size_t v = 0; v < w; ++v) {
      std::complex<double> acc{};
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
          const double angle = -2.0 * std::numbers::pi *
                               (static_cast<double>((u * y) % h) / static_cast<double>(h) +
                                static_cast<double>((v * x) % w) / static_cast<double>(w));
          acc += plane[y * w + x] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
      out[u * w + v] = acc;
    }
  return out;
}

/// O(N^4) inverse 2D DFT, normalized, raw layout.
inline std::vector<std::complex<double>> direct_idft2(const std::vector<std::complex<double>>& spec,
                                                      std::size_t h, std::size_t w) {
  std::vector<std::complex<double>> out(h * w);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      std::complex<double> acc{};
      for (std::size_t u = 0; u < h; ++u)
        for (std::size_t v = 0; v < w; ++v) {
          const double angle = 2.0 * std::numbers::pi *
                               (static_cast<double>((u * y) % h) / static_cast<double>(h) +
                                static_cast<double>((v * x) % w) / static_cast<double>(w));
          acc += spec[u * w + v] * std::complex<double>(std::cos(angle), std::sin(angle));
        }
      out[y * w + x] = acc / static_cast<double>(h * w);
    }
  return out;
}

}  // namespace camofa::testing
