#pragma once

#include <cblas.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "ravenforge/rng.hpp"
#include "ravenforge/tensor.hpp"

namespace rvf {

enum class Mode { kTrain, kEval };

namespace detail {

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, float alpha,
                 const float* a, int lda, const float* b, int ldb, float beta,
                 float* c, int ldc) {
  cblas_sgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

inline void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha,
                 const double* a, int lda, const double* b, int ldb,
                 double beta, double* c, int ldc) {
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b,
              ldb, beta, c, ldc);
}

// Gathers K*K patches of src (C x Hs x Ws) around each output pixel of an
// (Ho x Wo) grid into a (C*K*K) x (Ho*Wo) matrix; zero outside bounds.
template <typename T>
void im2col(const T* src, int channels, int hs, int ws, int k, int stride,
            int padding, int ho, int wo, T* col) {
  const int patch = k * k;
  for (int c = 0; c < channels; ++c) {
    const T* plane = src + static_cast<size_t>(c) * hs * ws;
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        T* row = col + (static_cast<size_t>(c) * patch + ki * k + kj) *
                           (static_cast<size_t>(ho) * wo);
        for (int i0 = 0; i0 < ho; ++i0) {
          const int si = i0 * stride - padding + ki;
          if (si < 0 || si >= hs) {
            std::fill_n(row + static_cast<size_t>(i0) * wo, wo, T(0));
            continue;
          }
          for (int j0 = 0; j0 < wo; ++j0) {
            const int sj = j0 * stride - padding + kj;
            row[static_cast<size_t>(i0) * wo + j0] =
                (sj >= 0 && sj < ws) ? plane[static_cast<size_t>(si) * ws + sj]
                                     : T(0);
          }
        }
      }
  }
}

// Adjoint of im2col: scatter-adds columns back into the (C x Hs x Ws) image.
template <typename T>
void col2im_add(const T* col, int channels, int hs, int ws, int k, int stride,
                int padding, int ho, int wo, T* dst) {
  const int patch = k * k;
  for (int c = 0; c < channels; ++c) {
    T* plane = dst + static_cast<size_t>(c) * hs * ws;
    for (int ki = 0; ki < k; ++ki)
      for (int kj = 0; kj < k; ++kj) {
        const T* row = col + (static_cast<size_t>(c) * patch + ki * k + kj) *
                                 (static_cast<size_t>(ho) * wo);
        for (int i0 = 0; i0 < ho; ++i0) {
          const int si = i0 * stride - padding + ki;
          if (si < 0 || si >= hs) continue;
          for (int j0 = 0; j0 < wo; ++j0) {
            const int sj = j0 * stride - padding + kj;
            if (sj >= 0 && sj < ws)
              plane[static_cast<size_t>(si) * ws + sj] +=
                  row[static_cast<size_t>(i0) * wo + j0];
          }
        }
      }
  }
}

}  // namespace detail

inline int conv_out_size(int in, int k, int stride, int padding) {
  return (in + 2 * padding - k) / stride + 1;
}

inline int conv_transpose_out_size(int in, int k, int stride, int padding,
                                   int output_padding) {
  return (in - 1) * stride - 2 * padding + k + output_padding;
}

// x: [N,C,H,W], w: [O,C,K,K], b: [O].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b,
                 int stride, int padding) {
  if (x.shape().size() != 4 || w.shape().size() != 4)
    throw ShapeError("conv2d: expected 4-d input and weight");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int o = w.dim(0), k = w.dim(2);
  if (w.dim(1) != c)
    throw ShapeError("conv2d: input channels " + std::to_string(c) +
                     " do not match weight channels " + std::to_string(w.dim(1)));
  if (w.dim(3) != k) throw ShapeError("conv2d: non-square kernel");
  if (b.size() != o) throw ShapeError("conv2d: bias length != out channels");
  if (h + 2 * padding < k || wd + 2 * padding < k)
    throw ShapeError("conv2d: kernel does not fit padded input");
  const int ho = conv_out_size(h, k, stride, padding);
  const int wo = conv_out_size(wd, k, stride, padding);
  const int ckk = c * k * k;
  const size_t plane = static_cast<size_t>(ho) * wo;

  std::vector<T> out(static_cast<size_t>(n) * o * plane);
  std::vector<T> col(static_cast<size_t>(ckk) * plane);
  for (int s = 0; s < n; ++s) {
    detail::im2col(x.value().data() + static_cast<size_t>(s) * c * h * wd, c, h,
                   wd, k, stride, padding, ho, wo, col.data());
    detail::gemm(false, false, o, static_cast<int>(plane), ckk, T(1),
                 w.value().data(), ckk, col.data(), static_cast<int>(plane),
                 T(0), out.data() + static_cast<size_t>(s) * o * plane,
                 static_cast<int>(plane));
    for (int oc = 0; oc < o; ++oc) {
      T* dst = out.data() + (static_cast<size_t>(s) * o + oc) * plane;
      const T bias = b.value()[oc];
      for (size_t i = 0; i < plane; ++i) dst[i] += bias;
    }
  }
  if (numeric_checks_enabled()) check_finite<T>(out, "conv2d output");

  auto xn = x.node(), wn = w.node(), bn = b.node();
  auto back = [xn, wn, bn, n, c, h, wd, o, k, stride, padding, ho, wo, ckk,
               plane](detail::Node<T>& self) {
    std::vector<T> col(static_cast<size_t>(ckk) * plane);
    for (int s = 0; s < n; ++s) {
      const T* g = self.grad.data() + static_cast<size_t>(s) * o * plane;
      if (wn->requires_grad || bn->requires_grad) {
        if (bn->requires_grad) {
          bn->ensure_grad();
          for (int oc = 0; oc < o; ++oc) {
            T acc = 0;
            const T* gp = g + static_cast<size_t>(oc) * plane;
            for (size_t i = 0; i < plane; ++i) acc += gp[i];
            bn->grad[oc] += acc;
          }
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          detail::im2col(xn->value.data() + static_cast<size_t>(s) * c * h * wd,
                         c, h, wd, k, stride, padding, ho, wo, col.data());
          detail::gemm(false, true, o, ckk, static_cast<int>(plane), T(1), g,
                       static_cast<int>(plane), col.data(),
                       static_cast<int>(plane), T(1), wn->grad.data(), ckk);
        }
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        detail::gemm(true, false, ckk, static_cast<int>(plane), o, T(1),
                     wn->value.data(), ckk, g, static_cast<int>(plane), T(0),
                     col.data(), static_cast<int>(plane));
        detail::col2im_add(col.data(), c, h, wd, k, stride, padding, ho, wo,
                           xn->grad.data() + static_cast<size_t>(s) * c * h * wd);
      }
    }
  };
  return detail::make_op<T>({n, o, ho, wo}, std::move(out), {x, w, b},
                            std::move(back));
}

// x: [N,Ci,H,W], w: [Ci,Co,K,K], b: [Co]. Adjoint of conv2d in its spatial
// action: with a shared OIKK weight, <conv2d(x),y> == <x,conv_transpose2d(y)>.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& x, const Tensor<T>& w,
                           const Tensor<T>& b, int stride, int padding,
                           int output_padding) {
  if (x.shape().size() != 4 || w.shape().size() != 4)
    throw ShapeError("conv_transpose2d: expected 4-d input and weight");
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), wd = x.dim(3);
  const int co = w.dim(1), k = w.dim(2);
  if (w.dim(0) != ci)
    throw ShapeError("conv_transpose2d: input channels " + std::to_string(ci) +
                     " do not match weight channels " +
                     std::to_string(w.dim(0)));
  if (b.size() != co)
    throw ShapeError("conv_transpose2d: bias length != out channels");
  if (output_padding < 0 || output_padding >= stride)
    throw ValueError("conv_transpose2d: output_padding must be in [0, stride)");
  const int ho = conv_transpose_out_size(h, k, stride, padding, output_padding);
  const int wo = conv_transpose_out_size(wd, k, stride, padding, output_padding);
  if (ho <= 0 || wo <= 0) throw ShapeError("conv_transpose2d: empty output");
  const int cokk = co * k * k;
  const size_t in_plane = static_cast<size_t>(h) * wd;
  const size_t out_plane = static_cast<size_t>(ho) * wo;

  std::vector<T> out(static_cast<size_t>(n) * co * out_plane, T(0));
  std::vector<T> col(static_cast<size_t>(cokk) * in_plane);
  for (int s = 0; s < n; ++s) {
    // col = W^T @ X, then scatter back through the conv geometry.
    detail::gemm(true, false, cokk, static_cast<int>(in_plane), ci, T(1),
                 w.value().data(), cokk,
                 x.value().data() + static_cast<size_t>(s) * ci * in_plane,
                 static_cast<int>(in_plane), T(0), col.data(),
                 static_cast<int>(in_plane));
    detail::col2im_add(col.data(), co, ho, wo, k, stride, padding, h, wd,
                       out.data() + static_cast<size_t>(s) * co * out_plane);
    for (int oc = 0; oc < co; ++oc) {
      T* dst = out.data() + (static_cast<size_t>(s) * co + oc) * out_plane;
      const T bias = b.value()[oc];
      for (size_t i = 0; i < out_plane; ++i) dst[i] += bias;
    }
  }
  if (numeric_checks_enabled()) check_finite<T>(out, "conv_transpose2d output");

  auto xn = x.node(), wn = w.node(), bn = b.node();
  auto back = [xn, wn, bn, n, ci, h, wd, co, k, stride, padding, ho, wo, cokk,
               in_plane, out_plane](detail::Node<T>& self) {
    std::vector<T> col(static_cast<size_t>(cokk) * in_plane);
    for (int s = 0; s < n; ++s) {
      const T* g = self.grad.data() + static_cast<size_t>(s) * co * out_plane;
      if (bn->requires_grad) {
        bn->ensure_grad();
        for (int oc = 0; oc < co; ++oc) {
          T acc = 0;
          const T* gp = g + static_cast<size_t>(oc) * out_plane;
          for (size_t i = 0; i < out_plane; ++i) acc += gp[i];
          bn->grad[oc] += acc;
        }
      }
      if (xn->requires_grad || wn->requires_grad) {
        detail::im2col(g, co, ho, wo, k, stride, padding, h, wd, col.data());
        if (xn->requires_grad) {
          xn->ensure_grad();
          detail::gemm(false, false, ci, static_cast<int>(in_plane), cokk, T(1),
                       wn->value.data(), cokk, col.data(),
                       static_cast<int>(in_plane), T(1),
                       xn->grad.data() + static_cast<size_t>(s) * ci * in_plane,
                       static_cast<int>(in_plane));
        }
        if (wn->requires_grad) {
          wn->ensure_grad();
          detail::gemm(false, true, ci, cokk, static_cast<int>(in_plane), T(1),
                       xn->value.data() + static_cast<size_t>(s) * ci * in_plane,
                       static_cast<int>(in_plane), col.data(),
                       static_cast<int>(in_plane), T(1), wn->grad.data(), cokk);
        }
      }
    }
  };
  return detail::make_op<T>({n, co, ho, wo}, std::move(out), {x, w, b},
                            std::move(back));
}

template <typename T>
struct BatchNormStats {
  std::vector<T> running_mean;
  std::vector<T> running_var;

  explicit BatchNormStats(int channels = 0)
      : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

// Per-channel normalization over N*H*W. Train mode uses batch statistics and
// updates running stats in place (biased variance throughout); eval mode uses
// the running stats and touches nothing.
template <typename T>
Tensor<T> batch_norm2d(const Tensor<T>& x, const Tensor<T>& gamma,
                       const Tensor<T>& beta_shift, BatchNormStats<T>& stats,
                       Mode mode, double momentum, double eps) {
  if (x.shape().size() != 4) throw ShapeError("batch_norm2d: expected 4-d input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (gamma.size() != c || beta_shift.size() != c ||
      static_cast<int>(stats.running_mean.size()) != c)
    throw ShapeError("batch_norm2d: channel parameter mismatch");
  if (mode == Mode::kTrain && n < 2)
    throw ValueError("batch_norm2d: train mode requires batch size >= 2");

  const size_t plane = static_cast<size_t>(h) * w;
  const size_t per_ch = static_cast<size_t>(n) * plane;
  std::vector<T> mean_v(c), inv_std(c);
  if (mode == Mode::kTrain) {
    for (int ch = 0; ch < c; ++ch) {
      double m = 0;
      for (int s = 0; s < n; ++s) {
        const T* p = x.value().data() + (static_cast<size_t>(s) * c + ch) * plane;
        for (size_t i = 0; i < plane; ++i) m += p[i];
      }
      m /= static_cast<double>(per_ch);
      double var = 0;
      for (int s = 0; s < n; ++s) {
        const T* p = x.value().data() + (static_cast<size_t>(s) * c + ch) * plane;
        for (size_t i = 0; i < plane; ++i) {
          const double d = p[i] - m;
          var += d * d;
        }
      }
      var /= static_cast<double>(per_ch);
      mean_v[ch] = static_cast<T>(m);
      inv_std[ch] = static_cast<T>(1.0 / std::sqrt(var + eps));
      stats.running_mean[ch] = static_cast<T>(
          (1.0 - momentum) * stats.running_mean[ch] + momentum * m);
      stats.running_var[ch] = static_cast<T>(
          (1.0 - momentum) * stats.running_var[ch] + momentum * var);
    }
  } else {
    for (int ch = 0; ch < c; ++ch) {
      mean_v[ch] = stats.running_mean[ch];
      inv_std[ch] =
          static_cast<T>(1.0 / std::sqrt(static_cast<double>(
                                             stats.running_var[ch]) + eps));
    }
  }

  std::vector<T> out(x.value().size());
  for (int s = 0; s < n; ++s)
    for (int ch = 0; ch < c; ++ch) {
      const T* p = x.value().data() + (static_cast<size_t>(s) * c + ch) * plane;
      T* q = out.data() + (static_cast<size_t>(s) * c + ch) * plane;
      const T g = gamma.value()[ch], b = beta_shift.value()[ch];
      const T mu = mean_v[ch], is = inv_std[ch];
      for (size_t i = 0; i < plane; ++i) q[i] = g * (p[i] - mu) * is + b;
    }
  if (numeric_checks_enabled()) check_finite<T>(out, "batch_norm2d output");

  auto xn = x.node(), gn = gamma.node(), bn = beta_shift.node();
  const bool train = mode == Mode::kTrain;
  auto mv = std::make_shared<std::vector<T>>(std::move(mean_v));
  auto sv = std::make_shared<std::vector<T>>(std::move(inv_std));
  auto back = [xn, gn, bn, mv, sv, n, c, plane, per_ch,
               train](detail::Node<T>& self) {
    for (int ch = 0; ch < c; ++ch) {
      const T mu = (*mv)[ch], is = (*sv)[ch];
      const T g = gn->value[ch];
      // Channel reductions shared by all three gradients.
      double sum_g = 0, sum_gx = 0;
      for (int s = 0; s < n; ++s) {
        const T* gp = self.grad.data() + (static_cast<size_t>(s) * c + ch) * plane;
        const T* xp = xn->value.data() + (static_cast<size_t>(s) * c + ch) * plane;
        for (size_t i = 0; i < plane; ++i) {
          sum_g += gp[i];
          sum_gx += gp[i] * (xp[i] - mu) * is;
        }
      }
      if (gn->requires_grad) {
        gn->ensure_grad();
        gn->grad[ch] += static_cast<T>(sum_gx);
      }
      if (bn->requires_grad) {
        bn->ensure_grad();
        bn->grad[ch] += static_cast<T>(sum_g);
      }
      if (xn->requires_grad) {
        xn->ensure_grad();
        const double inv_m = 1.0 / static_cast<double>(per_ch);
        for (int s = 0; s < n; ++s) {
          const T* gp =
              self.grad.data() + (static_cast<size_t>(s) * c + ch) * plane;
          const T* xp =
              xn->value.data() + (static_cast<size_t>(s) * c + ch) * plane;
          T* dx = xn->grad.data() + (static_cast<size_t>(s) * c + ch) * plane;
          for (size_t i = 0; i < plane; ++i) {
            const double xhat = (xp[i] - mu) * is;
            double d;
            if (train) {
              d = static_cast<double>(g) * is *
                  (gp[i] - inv_m * sum_g - xhat * inv_m * sum_gx);
            } else {
              d = static_cast<double>(g) * is * gp[i];
            }
            dx[i] += static_cast<T>(d);
          }
        }
      }
    }
  };
  return detail::make_op<T>(x.shape(), std::move(out), {x, gamma, beta_shift},
                            std::move(back));
}

// x: [N,Fin], w: [Fout,Fin], b: [Fout] -> [N,Fout].
template <typename T>
Tensor<T> dense(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
  if (x.shape().size() != 2 || w.shape().size() != 2)
    throw ShapeError("dense: expected 2-d input and weight");
  const int n = x.dim(0), fin = x.dim(1), fout = w.dim(0);
  if (w.dim(1) != fin)
    throw ShapeError("dense: input features " + std::to_string(fin) +
                     " do not match weight " + shape_str(w.shape()));
  if (b.size() != fout) throw ShapeError("dense: bias length != out features");

  std::vector<T> out(static_cast<size_t>(n) * fout);
  detail::gemm(false, true, n, fout, fin, T(1), x.value().data(), fin,
               w.value().data(), fin, T(0), out.data(), fout);
  for (int r = 0; r < n; ++r) {
    T* dst = out.data() + static_cast<size_t>(r) * fout;
    for (int j = 0; j < fout; ++j) dst[j] += b.value()[j];
  }
  if (numeric_checks_enabled()) check_finite<T>(out, "dense output");

  auto xn = x.node(), wn = w.node(), bn = b.node();
  auto back = [xn, wn, bn, n, fin, fout](detail::Node<T>& self) {
    if (xn->requires_grad) {
      xn->ensure_grad();
      detail::gemm(false, false, n, fin, fout, T(1), self.grad.data(), fout,
                   wn->value.data(), fin, T(1), xn->grad.data(), fin);
    }
    if (wn->requires_grad) {
      wn->ensure_grad();
      detail::gemm(true, false, fout, fin, n, T(1), self.grad.data(), fout,
                   xn->value.data(), fin, T(1), wn->grad.data(), fin);
    }
    if (bn->requires_grad) {
      bn->ensure_grad();
      for (int r = 0; r < n; ++r) {
        const T* g = self.grad.data() + static_cast<size_t>(r) * fout;
        for (int j = 0; j < fout; ++j) bn->grad[j] += g[j];
      }
    }
  };
  return detail::make_op<T>({n, fout}, std::move(out), {x, w, b},
                            std::move(back));
}

template <typename T>
Tensor<T> relu(const Tensor<T>& x) {
  std::vector<T> out(static_cast<size_t>(x.size()));
  for (int64_t i = 0; i < x.size(); ++i)
    out[i] = x.value()[i] > T(0) ? x.value()[i] : T(0);
  auto xn = x.node();
  return detail::make_op<T>(x.shape(), std::move(out), {x},
                            [xn](detail::Node<T>& self) {
                              xn->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                if (xn->value[i] > T(0))
                                  xn->grad[i] += self.grad[i];
                            });
}

template <typename T>
Tensor<T> sigmoid(const Tensor<T>& x) {
  std::vector<T> out(static_cast<size_t>(x.size()));
  for (int64_t i = 0; i < x.size(); ++i) {
    const T v = x.value()[i];
    if (v >= T(0)) {
      out[i] = T(1) / (T(1) + std::exp(-v));
    } else {
      const T e = std::exp(v);
      out[i] = e / (T(1) + e);
    }
  }
  auto xn = x.node();
  return detail::make_op<T>(x.shape(), std::move(out), {x},
                            [xn](detail::Node<T>& self) {
                              xn->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i) {
                                const T y = self.value[i];
                                xn->grad[i] += self.grad[i] * y * (T(1) - y);
                              }
                            });
}

// Softmax along `axis` of an arbitrary-rank tensor, max-shifted for stability.
template <typename T>
Tensor<T> softmax(const Tensor<T>& x, int axis) {
  const auto& sh = x.shape();
  if (axis < 0) axis += static_cast<int>(sh.size());
  if (axis < 0 || axis >= static_cast<int>(sh.size()))
    throw ValueError("softmax: axis out of range");
  int64_t outer = 1, inner = 1;
  for (int i = 0; i < axis; ++i) outer *= sh[i];
  for (size_t i = axis + 1; i < sh.size(); ++i) inner *= sh[i];
  const int64_t len = sh[axis];

  std::vector<T> out(static_cast<size_t>(x.size()));
  const T* src = x.value().data();
  for (int64_t ou = 0; ou < outer; ++ou)
    for (int64_t in = 0; in < inner; ++in) {
      const size_t base = static_cast<size_t>(ou) * len * inner + in;
      T mx = src[base];
      for (int64_t j = 1; j < len; ++j)
        mx = std::max(mx, src[base + static_cast<size_t>(j) * inner]);
      T denom = 0;
      for (int64_t j = 0; j < len; ++j) {
        const T e = std::exp(src[base + static_cast<size_t>(j) * inner] - mx);
        out[base + static_cast<size_t>(j) * inner] = e;
        denom += e;
      }
      for (int64_t j = 0; j < len; ++j)
        out[base + static_cast<size_t>(j) * inner] /= denom;
    }

  auto xn = x.node();
  auto back = [xn, outer, inner, len](detail::Node<T>& self) {
    xn->ensure_grad();
    for (int64_t ou = 0; ou < outer; ++ou)
      for (int64_t in = 0; in < inner; ++in) {
        const size_t base = static_cast<size_t>(ou) * len * inner + in;
        T dot = 0;
        for (int64_t j = 0; j < len; ++j) {
          const size_t at = base + static_cast<size_t>(j) * inner;
          dot += self.grad[at] * self.value[at];
        }
        for (int64_t j = 0; j < len; ++j) {
          const size_t at = base + static_cast<size_t>(j) * inner;
          xn->grad[at] += self.value[at] * (self.grad[at] - dot);
        }
      }
  };
  return detail::make_op<T>(x.shape(), std::move(out), {x}, std::move(back));
}

// Inverted dropout: train mode zeroes units with probability p and rescales
// survivors by 1/(1-p); eval mode is the identity (same tensor, bit-exact).
template <typename T>
Tensor<T> dropout(const Tensor<T>& x, double p, Mode mode, Rng& rng) {
  if (p < 0.0 || p >= 1.0)
    throw ValueError("dropout: p must be in [0,1), got " + std::to_string(p));
  if (mode == Mode::kEval || p == 0.0) return x;
  const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
  auto mask = std::make_shared<std::vector<T>>(static_cast<size_t>(x.size()));
  std::vector<T> out(static_cast<size_t>(x.size()));
  for (int64_t i = 0; i < x.size(); ++i) {
    const T m = rng.uniform() < p ? T(0) : keep_scale;
    (*mask)[i] = m;
    out[i] = x.value()[i] * m;
  }
  auto xn = x.node();
  return detail::make_op<T>(x.shape(), std::move(out), {x},
                            [xn, mask](detail::Node<T>& self) {
                              xn->ensure_grad();
                              for (size_t i = 0; i < self.grad.size(); ++i)
                                xn->grad[i] += self.grad[i] * (*mask)[i];
                            });
}

// Mean cross-entropy of softmax(logits) vs integer targets, fused for
// stability: logits [N,C].
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits,
                                const std::vector<int>& targets) {
  if (logits.shape().size() != 2)
    throw ShapeError("softmax_cross_entropy: expected 2-d logits");
  const int n = logits.dim(0), c = logits.dim(1);
  if (static_cast<int>(targets.size()) != n)
    throw ShapeError("softmax_cross_entropy: target count mismatch");
  auto probs = std::make_shared<std::vector<T>>(static_cast<size_t>(n) * c);
  double loss = 0;
  const T* src = logits.value().data();
  for (int r = 0; r < n; ++r) {
    if (targets[r] < 0 || targets[r] >= c)
      throw ValueError("softmax_cross_entropy: target out of range");
    const T* row = src + static_cast<size_t>(r) * c;
    T mx = row[0];
    for (int j = 1; j < c; ++j) mx = std::max(mx, row[j]);
    double denom = 0;
    for (int j = 0; j < c; ++j) denom += std::exp(static_cast<double>(row[j] - mx));
    const double log_denom = std::log(denom);
    for (int j = 0; j < c; ++j)
      (*probs)[static_cast<size_t>(r) * c + j] =
          static_cast<T>(std::exp(static_cast<double>(row[j] - mx)) / denom);
    loss -= static_cast<double>(row[targets[r]] - mx) - log_denom;
  }
  loss /= n;

  auto xn = logits.node();
  auto tg = std::make_shared<std::vector<int>>(targets);
  auto back = [xn, probs, tg, n, c](detail::Node<T>& self) {
    xn->ensure_grad();
    const T g = self.grad[0] / static_cast<T>(n);
    for (int r = 0; r < n; ++r)
      for (int j = 0; j < c; ++j) {
        const size_t at = static_cast<size_t>(r) * c + j;
        const T delta = (j == (*tg)[r]) ? T(1) : T(0);
        xn->grad[at] += g * ((*probs)[at] - delta);
      }
  };
  return detail::make_op<T>({1}, {static_cast<T>(loss)}, {logits},
                            std::move(back));
}

}  // namespace rvf
