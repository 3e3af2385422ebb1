#include "casunext/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <memory>
#include <stdexcept>

#include "blas_gemm.hpp"

namespace casunext {

namespace {

void check_4d(const char* op, const Tensor& t, const char* what) {
  if (t.rank() != 4) {
    throw std::invalid_argument(std::string(op) + ": " + what +
                                " must be 4-d, got shape " +
                                shape_to_string(t.shape()));
  }
}

void check_bias(const char* op, const Tensor& bias, int c_out) {
  if (bias.rank() != 1 || bias.dim(0) != c_out) {
    throw std::invalid_argument(std::string(op) + ": bias shape " +
                                shape_to_string(bias.shape()) +
                                " does not match " + std::to_string(c_out) +
                                " output channels");
  }
}

bool record_needed(std::initializer_list<const Tensor*> inputs) {
  if (GradTape::active() == nullptr) return false;
  for (const Tensor* t : inputs) {
    if (t->requires_grad()) return true;
  }
  return false;
}

// Unrolled im2col for stride 1; cols is (ci*k*k) x (ho*wo), row-major.
void im2col(const double* x, int ci, int h, int w, int k, int stride, int pad,
            int ho, int wo, double* cols) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < ci; ++c) {
    const double* xc = x + c * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        double* dst = cols + ((static_cast<std::size_t>(c) * k + ky) * k + kx) *
                                 out_plane;
        if (stride == 1) {
          int ix0 = kx - pad;
          int lo = std::max(0, -ix0);
          int hi = std::min(wo, w - ix0);
          for (int oy = 0; oy < ho; ++oy) {
            int iy = oy + ky - pad;
            double* drow = dst + static_cast<std::size_t>(oy) * wo;
            if (iy < 0 || iy >= h || lo >= hi) {
              std::fill(drow, drow + wo, 0.0);
              continue;
            }
            const double* xrow = xc + static_cast<std::size_t>(iy) * w;
            std::fill(drow, drow + lo, 0.0);
            std::memcpy(drow + lo, xrow + ix0 + lo,
                        static_cast<std::size_t>(hi - lo) * sizeof(double));
            std::fill(drow + hi, drow + wo, 0.0);
          }
        } else {
          for (int oy = 0; oy < ho; ++oy) {
            int iy = oy * stride + ky - pad;
            double* drow = dst + static_cast<std::size_t>(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              int ix = ox * stride + kx - pad;
              drow[ox] = (iy >= 0 && iy < h && ix >= 0 && ix < w)
                             ? xc[static_cast<std::size_t>(iy) * w + ix]
                             : 0.0;
            }
          }
        }
      }
    }
  }
}

// Scatter-add of dcols back onto the input gradient (inverse of im2col).
void col2im_accumulate(const double* cols, int ci, int h, int w, int k,
                       int stride, int pad, int ho, int wo, double* gx) {
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  for (int c = 0; c < ci; ++c) {
    double* gc = gx + c * plane;
    for (int ky = 0; ky < k; ++ky) {
      for (int kx = 0; kx < k; ++kx) {
        const double* src =
            cols +
            ((static_cast<std::size_t>(c) * k + ky) * k + kx) * out_plane;
        for (int oy = 0; oy < ho; ++oy) {
          int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          const double* srow = src + static_cast<std::size_t>(oy) * wo;
          double* grow = gc + static_cast<std::size_t>(iy) * w;
          if (stride == 1) {
            int ix0 = kx - pad;
            int lo = std::max(0, -ix0);
            int hi = std::min(wo, w - ix0);
            for (int ox = lo; ox < hi; ++ox) grow[ix0 + ox] += srow[ox];
          } else {
            for (int ox = 0; ox < wo; ++ox) {
              int ix = ox * stride + kx - pad;
              if (ix >= 0 && ix < w) grow[ix] += srow[ox];
            }
          }
        }
      }
    }
  }
}

void copy_padded_plane(const double* src, int h, int w, int pad, double* dst) {
  int wp = w + 2 * pad;
  int hp = h + 2 * pad;
  if (pad == 0) {
    std::memcpy(dst, src, static_cast<std::size_t>(h) * w * sizeof(double));
    return;
  }
  std::fill(dst, dst + static_cast<std::size_t>(hp) * wp, 0.0);
  for (int y = 0; y < h; ++y) {
    std::memcpy(dst + static_cast<std::size_t>(y + pad) * wp + pad,
                src + static_cast<std::size_t>(y) * w,
                static_cast<std::size_t>(w) * sizeof(double));
  }
}

// out[oy,ox] += sum_{ky,kx} kw[ky,kx] * padded[oy+ky, ox+kx]
void correlate_plane(const double* padded, int wp, const double* kw, int k,
                     int ho, int wo, double* out) {
  for (int oy = 0; oy < ho; ++oy) {
    double* orow = out + static_cast<std::size_t>(oy) * wo;
    for (int ky = 0; ky < k; ++ky) {
      const double* irow = padded + static_cast<std::size_t>(oy + ky) * wp;
      for (int kx = 0; kx < k; ++kx) {
        const double wv = kw[ky * k + kx];
        const double* ir = irow + kx;
        for (int ox = 0; ox < wo; ++ox) orow[ox] += wv * ir[ox];
      }
    }
  }
}

}  // namespace

// ---------------------------------------------------------------- conv2d

Tensor conv2d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int stride, int padding) {
  check_4d("conv2d", x, "input");
  check_4d("conv2d", kernel, "kernel");
  if (kernel.dim(2) != kernel.dim(3)) {
    throw std::invalid_argument("conv2d: kernel must be square, got shape " +
                                shape_to_string(kernel.shape()));
  }
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int co = kernel.dim(0), k = kernel.dim(2);
  if (kernel.dim(1) != ci) {
    throw std::invalid_argument(
        "conv2d: input channels mismatch, input shape " +
        shape_to_string(x.shape()) + " vs kernel shape " +
        shape_to_string(kernel.shape()));
  }
  check_bias("conv2d", bias, co);
  if (stride < 1 || padding < 0) {
    throw std::invalid_argument("conv2d: invalid stride/padding");
  }
  const int ho = (h + 2 * padding - k) / stride + 1;
  const int wo = (w + 2 * padding - k) / stride + 1;
  if (h + 2 * padding < k || w + 2 * padding < k || ho <= 0 || wo <= 0) {
    throw std::invalid_argument(
        "conv2d: non-positive output size for input " +
        shape_to_string(x.shape()) + ", kernel " +
        shape_to_string(kernel.shape()) + ", stride " + std::to_string(stride) +
        ", padding " + std::to_string(padding));
  }

  Tensor out = Tensor::zeros({n, co, ho, wo});
  const std::size_t in_sample = static_cast<std::size_t>(ci) * h * w;
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  const std::size_t out_sample = static_cast<std::size_t>(co) * out_plane;
  const std::size_t ckk = static_cast<std::size_t>(ci) * k * k;

  {
    std::vector<double> cols(ckk * out_plane);
    const double* px = x.data().data();
    const double* pw = kernel.data().data();
    const double* pb = bias.data().data();
    double* po = out.data().data();
    for (int i = 0; i < n; ++i) {
      im2col(px + i * in_sample, ci, h, w, k, stride, padding, ho, wo,
             cols.data());
      detail::gemm(CblasNoTrans, CblasNoTrans, co,
                   static_cast<int>(out_plane), static_cast<int>(ckk), 1.0,
                   pw, static_cast<int>(ckk), cols.data(),
                   static_cast<int>(out_plane), 0.0, po + i * out_sample,
                   static_cast<int>(out_plane));
      for (int c = 0; c < co; ++c) {
        double* row = po + i * out_sample + c * out_plane;
        const double b = pb[c];
        for (std::size_t j = 0; j < out_plane; ++j) row[j] += b;
      }
    }
  }

  if (record_needed({&x, &kernel, &bias})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto ki = kernel.impl();
    auto bi = bias.impl();
    auto oi = out.impl();
    bool need_x = x.requires_grad();
    bool need_w = kernel.requires_grad();
    bool need_b = bias.requires_grad();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      const double* g = oi->grad.data();
      if (need_b) {
        bi->ensure_grad();
        for (int i = 0; i < n; ++i) {
          for (int c = 0; c < co; ++c) {
            const double* row = g + i * out_sample + c * out_plane;
            double s = 0.0;
            for (std::size_t j = 0; j < out_plane; ++j) s += row[j];
            bi->grad[c] += s;
          }
        }
      }
      if (!need_x && !need_w) return;
      if (need_x) xi->ensure_grad();
      if (need_w) ki->ensure_grad();
      std::vector<double> cols(ckk * out_plane);
      std::vector<double> dcols(need_x ? ckk * out_plane : 0);
      const double* px = xi->data.data();
      const double* pw = ki->data.data();
      for (int i = 0; i < n; ++i) {
        if (need_w) {
          im2col(px + i * in_sample, ci, h, w, k, stride, padding, ho, wo,
                 cols.data());
          // dW += G * cols^T
          detail::gemm(CblasNoTrans, CblasTrans, co, static_cast<int>(ckk),
                       static_cast<int>(out_plane), 1.0, g + i * out_sample,
                       static_cast<int>(out_plane), cols.data(),
                       static_cast<int>(out_plane), 1.0, ki->grad.data(),
                       static_cast<int>(ckk));
        }
        if (need_x) {
          // dcols = W^T * G, then scattered back onto the input
          detail::gemm(CblasTrans, CblasNoTrans, static_cast<int>(ckk),
                       static_cast<int>(out_plane), co, 1.0, pw,
                       static_cast<int>(ckk), g + i * out_sample,
                       static_cast<int>(out_plane), 0.0, dcols.data(),
                       static_cast<int>(out_plane));
          col2im_accumulate(dcols.data(), ci, h, w, k, stride, padding, ho, wo,
                            xi->grad.data() + i * in_sample);
        }
      }
    });
  }
  return out;
}

// ------------------------------------------------------- depthwise conv

Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernel,
                        const Tensor& bias, int padding) {
  check_4d("depthwise_conv2d", x, "input");
  check_4d("depthwise_conv2d", kernel, "kernel");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int k = kernel.dim(2);
  if (kernel.dim(0) != c || kernel.dim(1) != 1 || kernel.dim(3) != k) {
    throw std::invalid_argument(
        "depthwise_conv2d: kernel shape " + shape_to_string(kernel.shape()) +
        " does not match input shape " + shape_to_string(x.shape()) +
        " (want [C,1,K,K])");
  }
  check_bias("depthwise_conv2d", bias, c);
  if (padding < 0) {
    throw std::invalid_argument("depthwise_conv2d: negative padding");
  }
  const int ho = h + 2 * padding - k + 1;
  const int wo = w + 2 * padding - k + 1;
  if (ho <= 0 || wo <= 0) {
    throw std::invalid_argument(
        "depthwise_conv2d: non-positive output size for input " +
        shape_to_string(x.shape()) + " with K=" + std::to_string(k));
  }

  Tensor out = Tensor::zeros({n, c, ho, wo});
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  const int wp = w + 2 * padding;
  const int hp = h + 2 * padding;
  {
    std::vector<double> padbuf(static_cast<std::size_t>(hp) * wp);
    const double* px = x.data().data();
    const double* pk = kernel.data().data();
    const double* pb = bias.data().data();
    double* po = out.data().data();
    for (int i = 0; i < n; ++i) {
      for (int ch = 0; ch < c; ++ch) {
        copy_padded_plane(px + (static_cast<std::size_t>(i) * c + ch) * plane,
                          h, w, padding, padbuf.data());
        double* oplane = po + (static_cast<std::size_t>(i) * c + ch) * out_plane;
        std::fill(oplane, oplane + out_plane, pb[ch]);
        correlate_plane(padbuf.data(), wp, pk + static_cast<std::size_t>(ch) * k * k,
                        k, ho, wo, oplane);
      }
    }
  }

  if (record_needed({&x, &kernel, &bias})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto ki = kernel.impl();
    auto bi = bias.impl();
    auto oi = out.impl();
    bool need_x = x.requires_grad();
    bool need_w = kernel.requires_grad();
    bool need_b = bias.requires_grad();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      const double* g = oi->grad.data();
      if (need_b) {
        bi->ensure_grad();
        for (int i = 0; i < n; ++i) {
          for (int ch = 0; ch < c; ++ch) {
            const double* row =
                g + (static_cast<std::size_t>(i) * c + ch) * out_plane;
            double s = 0.0;
            for (std::size_t j = 0; j < out_plane; ++j) s += row[j];
            bi->grad[ch] += s;
          }
        }
      }
      if (!need_x && !need_w) return;
      if (need_x) xi->ensure_grad();
      if (need_w) ki->ensure_grad();
      const double* px = xi->data.data();
      const double* pk = ki->data.data();
      std::vector<double> padbuf(static_cast<std::size_t>(hp) * wp);
      // dX = correlation of the (k-1)-padded output gradient with the
      // 180-degree-rotated kernel, evaluated over padded-input coords.
      const int gp_h = ho + 2 * (k - 1);
      const int gp_w = wo + 2 * (k - 1);
      std::vector<double> gpad(need_x ? static_cast<std::size_t>(gp_h) * gp_w
                                      : 0);
      std::vector<double> dxp(need_x ? static_cast<std::size_t>(hp) * wp : 0);
      std::vector<double> kflip(need_x ? static_cast<std::size_t>(k) * k : 0);
      for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
          const double* gplane =
              g + (static_cast<std::size_t>(i) * c + ch) * out_plane;
          const double* kw = pk + static_cast<std::size_t>(ch) * k * k;
          if (need_w) {
            copy_padded_plane(
                px + (static_cast<std::size_t>(i) * c + ch) * plane, h, w,
                padding, padbuf.data());
            double* gw = ki->grad.data() + static_cast<std::size_t>(ch) * k * k;
            for (int ky = 0; ky < k; ++ky) {
              for (int kx = 0; kx < k; ++kx) {
                double s = 0.0;
                for (int oy = 0; oy < ho; ++oy) {
                  const double* xr =
                      padbuf.data() + static_cast<std::size_t>(oy + ky) * wp +
                      kx;
                  const double* gr =
                      gplane + static_cast<std::size_t>(oy) * wo;
                  for (int ox = 0; ox < wo; ++ox) s += gr[ox] * xr[ox];
                }
                gw[ky * k + kx] += s;
              }
            }
          }
          if (need_x) {
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx)
                kflip[ky * k + kx] = kw[(k - 1 - ky) * k + (k - 1 - kx)];
            copy_padded_plane(gplane, ho, wo, k - 1, gpad.data());
            std::fill(dxp.begin(), dxp.end(), 0.0);
            correlate_plane(gpad.data(), gp_w, kflip.data(), k, hp, wp,
                            dxp.data());
            double* gx =
                xi->grad.data() + (static_cast<std::size_t>(i) * c + ch) * plane;
            for (int y = 0; y < h; ++y) {
              const double* src =
                  dxp.data() + static_cast<std::size_t>(y + padding) * wp +
                  padding;
              double* dst = gx + static_cast<std::size_t>(y) * w;
              for (int xq = 0; xq < w; ++xq) dst[xq] += src[xq];
            }
          }
        }
      }
    });
  }
  return out;
}

// ------------------------------------------------------- pointwise conv

Tensor pointwise_conv(const Tensor& x, const Tensor& kernel,
                      const Tensor& bias) {
  check_4d("pointwise_conv", x, "input");
  check_4d("pointwise_conv", kernel, "kernel");
  const int n = x.dim(0), ci = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int co = kernel.dim(0);
  if (kernel.dim(1) != ci || kernel.dim(2) != 1 || kernel.dim(3) != 1) {
    throw std::invalid_argument(
        "pointwise_conv: kernel shape " + shape_to_string(kernel.shape()) +
        " does not match input shape " + shape_to_string(x.shape()) +
        " (want [C_out,C_in,1,1])");
  }
  check_bias("pointwise_conv", bias, co);

  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t in_sample = static_cast<std::size_t>(ci) * plane;
  const std::size_t out_sample = static_cast<std::size_t>(co) * plane;
  Tensor out = Tensor::zeros({n, co, h, w});
  {
    const double* px = x.data().data();
    const double* pw = kernel.data().data();
    const double* pb = bias.data().data();
    double* po = out.data().data();
    for (int i = 0; i < n; ++i) {
      detail::gemm(CblasNoTrans, CblasNoTrans, co, static_cast<int>(plane),
                   ci, 1.0, pw, ci, px + i * in_sample,
                   static_cast<int>(plane), 0.0, po + i * out_sample,
                   static_cast<int>(plane));
      for (int c = 0; c < co; ++c) {
        double* row = po + i * out_sample + c * plane;
        const double b = pb[c];
        for (std::size_t j = 0; j < plane; ++j) row[j] += b;
      }
    }
  }

  if (record_needed({&x, &kernel, &bias})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto ki = kernel.impl();
    auto bi = bias.impl();
    auto oi = out.impl();
    bool need_x = x.requires_grad();
    bool need_w = kernel.requires_grad();
    bool need_b = bias.requires_grad();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      const double* g = oi->grad.data();
      if (need_b) {
        bi->ensure_grad();
        for (int i = 0; i < n; ++i) {
          for (int c = 0; c < co; ++c) {
            const double* row = g + i * out_sample + c * plane;
            double s = 0.0;
            for (std::size_t j = 0; j < plane; ++j) s += row[j];
            bi->grad[c] += s;
          }
        }
      }
      if (need_x) xi->ensure_grad();
      if (need_w) ki->ensure_grad();
      for (int i = 0; i < n; ++i) {
        if (need_x) {
          detail::gemm(CblasTrans, CblasNoTrans, ci, static_cast<int>(plane),
                       co, 1.0, ki->data.data(), ci, g + i * out_sample,
                       static_cast<int>(plane), 1.0,
                       xi->grad.data() + i * in_sample,
                       static_cast<int>(plane));
        }
        if (need_w) {
          detail::gemm(CblasNoTrans, CblasTrans, co, ci,
                       static_cast<int>(plane), 1.0, g + i * out_sample,
                       static_cast<int>(plane), xi->data.data() + i * in_sample,
                       static_cast<int>(plane), 1.0, ki->grad.data(), ci);
        }
      }
    });
  }
  return out;
}

// -------------------------------------------------------------- pooling

Tensor maxpool2x2(const Tensor& x) {
  check_4d("maxpool2x2", x, "input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) {
    throw std::invalid_argument("maxpool2x2: H and W must be even, got " +
                                shape_to_string(x.shape()));
  }
  const int ho = h / 2, wo = w / 2;
  Tensor out = Tensor::zeros({n, c, ho, wo});
  auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
  {
    const double* px = x.data().data();
    double* po = out.data().data();
    std::size_t plane = static_cast<std::size_t>(h) * w;
    std::size_t oidx = 0;
    for (int i = 0; i < n * c; ++i) {
      const double* pplane = px + i * plane;
      for (int oy = 0; oy < ho; ++oy) {
        for (int ox = 0; ox < wo; ++ox) {
          std::size_t base = static_cast<std::size_t>(2 * oy) * w + 2 * ox;
          // first (row-major) maximum wins on ties
          std::size_t best = base;
          double bv = pplane[base];
          const std::size_t cand[3] = {base + 1, base + w, base + w + 1};
          for (std::size_t cd : cand) {
            if (pplane[cd] > bv) {
              bv = pplane[cd];
              best = cd;
            }
          }
          po[oidx] = bv;
          (*argmax)[oidx] = i * plane + best;
          ++oidx;
        }
      }
    }
  }
  if (record_needed({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = out.impl();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      xi->ensure_grad();
      const double* g = oi->grad.data();
      double* gx = xi->grad.data();
      for (std::size_t j = 0; j < oi->size(); ++j) gx[(*argmax)[j]] += g[j];
    });
  }
  return out;
}

// ------------------------------------------------------------ upsample

namespace {
struct UpsampleTaps {
  std::vector<int> lo, hi;
  std::vector<double> whi;  // weight of the hi tap
};

UpsampleTaps make_taps(int out_len, int in_len) {
  UpsampleTaps t;
  t.lo.resize(out_len);
  t.hi.resize(out_len);
  t.whi.resize(out_len);
  for (int i = 0; i < out_len; ++i) {
    double src = (i + 0.5) / 2.0 - 0.5;
    double fl = std::floor(src);
    double frac = src - fl;
    int lo = static_cast<int>(fl);
    int hi = lo + 1;
    t.lo[i] = std::clamp(lo, 0, in_len - 1);
    t.hi[i] = std::clamp(hi, 0, in_len - 1);
    t.whi[i] = frac;
  }
  return t;
}
}  // namespace

Tensor bilinear_upsample2x(const Tensor& x) {
  check_4d("bilinear_upsample2x", x, "input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int ho = 2 * h, wo = 2 * w;
  Tensor out = Tensor::zeros({n, c, ho, wo});
  UpsampleTaps ty = make_taps(ho, h);
  UpsampleTaps tx = make_taps(wo, w);
  {
    const double* px = x.data().data();
    double* po = out.data().data();
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
    for (int i = 0; i < n * c; ++i) {
      const double* ip = px + i * plane;
      double* op = po + i * out_plane;
      for (int oy = 0; oy < ho; ++oy) {
        const double* r0 = ip + static_cast<std::size_t>(ty.lo[oy]) * w;
        const double* r1 = ip + static_cast<std::size_t>(ty.hi[oy]) * w;
        const double wy = ty.whi[oy];
        double* orow = op + static_cast<std::size_t>(oy) * wo;
        for (int ox = 0; ox < wo; ++ox) {
          const double wx = tx.whi[ox];
          const int x0 = tx.lo[ox], x1 = tx.hi[ox];
          double top = (1.0 - wx) * r0[x0] + wx * r0[x1];
          double bot = (1.0 - wx) * r1[x0] + wx * r1[x1];
          orow[ox] = (1.0 - wy) * top + wy * bot;
        }
      }
    }
  }
  if (record_needed({&x})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto oi = out.impl();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      xi->ensure_grad();
      const double* g = oi->grad.data();
      double* gx = xi->grad.data();
      const std::size_t plane = static_cast<std::size_t>(h) * w;
      const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
      for (int i = 0; i < n * c; ++i) {
        const double* gp = g + i * out_plane;
        double* gi = gx + i * plane;
        for (int oy = 0; oy < ho; ++oy) {
          double* r0 = gi + static_cast<std::size_t>(ty.lo[oy]) * w;
          double* r1 = gi + static_cast<std::size_t>(ty.hi[oy]) * w;
          const double wy = ty.whi[oy];
          const double* grow = gp + static_cast<std::size_t>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const double wx = tx.whi[ox];
            const int x0 = tx.lo[ox], x1 = tx.hi[ox];
            const double gv = grow[ox];
            r0[x0] += (1.0 - wy) * (1.0 - wx) * gv;
            r0[x1] += (1.0 - wy) * wx * gv;
            r1[x0] += wy * (1.0 - wx) * gv;
            r1[x1] += wy * wx * gv;
          }
        }
      }
    });
  }
  return out;
}

// ----------------------------------------------------------- layer norm

Tensor layer_norm_channels(const Tensor& x, const Tensor& gamma,
                           const Tensor& beta, double eps) {
  check_4d("layer_norm_channels", x, "input");
  const int n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (gamma.rank() != 1 || gamma.dim(0) != c || beta.rank() != 1 ||
      beta.dim(0) != c) {
    throw std::invalid_argument(
        "layer_norm_channels: gamma/beta shapes " +
        shape_to_string(gamma.shape()) + "/" + shape_to_string(beta.shape()) +
        " do not match " + std::to_string(c) + " channels");
  }
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  const std::size_t sample = static_cast<std::size_t>(c) * plane;
  Tensor out = Tensor::zeros({n, c, h, w});
  // mean and 1/sqrt(var+eps) per (n,position); kept for backward
  auto mu = std::make_shared<std::vector<double>>(n * plane);
  auto inv = std::make_shared<std::vector<double>>(n * plane);
  {
    const double* px = x.data().data();
    const double* pg = gamma.data().data();
    const double* pb = beta.data().data();
    double* po = out.data().data();
    const double cinv = 1.0 / c;
    for (int i = 0; i < n; ++i) {
      double* m = mu->data() + i * plane;
      double* iv = inv->data() + i * plane;
      const double* xs = px + i * sample;
      std::fill(m, m + plane, 0.0);
      for (int ch = 0; ch < c; ++ch) {
        const double* row = xs + ch * plane;
        for (std::size_t p = 0; p < plane; ++p) m[p] += row[p];
      }
      for (std::size_t p = 0; p < plane; ++p) m[p] *= cinv;
      std::fill(iv, iv + plane, 0.0);
      for (int ch = 0; ch < c; ++ch) {
        const double* row = xs + ch * plane;
        for (std::size_t p = 0; p < plane; ++p) {
          double d = row[p] - m[p];
          iv[p] += d * d;
        }
      }
      for (std::size_t p = 0; p < plane; ++p) {
        iv[p] = 1.0 / std::sqrt(iv[p] * cinv + eps);
      }
      double* os = po + i * sample;
      for (int ch = 0; ch < c; ++ch) {
        const double* row = xs + ch * plane;
        double* orow = os + ch * plane;
        const double gc = pg[ch], bc = pb[ch];
        for (std::size_t p = 0; p < plane; ++p) {
          orow[p] = gc * (row[p] - m[p]) * iv[p] + bc;
        }
      }
    }
  }

  if (record_needed({&x, &gamma, &beta})) {
    out.set_requires_grad(true);
    auto xi = x.impl();
    auto gi = gamma.impl();
    auto bi = beta.impl();
    auto oi = out.impl();
    bool need_x = x.requires_grad();
    bool need_g = gamma.requires_grad();
    bool need_b = beta.requires_grad();
    GradTape::active()->record([=]() {
      if (oi->grad.empty()) return;
      const double* g = oi->grad.data();
      const double* px = xi->data.data();
      const double* pg = gi->data.data();
      if (need_g) gi->ensure_grad();
      if (need_b) bi->ensure_grad();
      if (need_x) xi->ensure_grad();
      const double cinv = 1.0 / c;
      std::vector<double> t1(need_x ? plane : 0);  // mean_c of dxhat
      std::vector<double> t2(need_x ? plane : 0);  // mean_c of dxhat*xhat
      for (int i = 0; i < n; ++i) {
        const double* m = mu->data() + i * plane;
        const double* iv = inv->data() + i * plane;
        const double* xs = px + i * sample;
        const double* gs = g + i * sample;
        if (need_g || need_b) {
          for (int ch = 0; ch < c; ++ch) {
            const double* grow = gs + ch * plane;
            const double* xrow = xs + ch * plane;
            double sg = 0.0, sgx = 0.0;
            for (std::size_t p = 0; p < plane; ++p) {
              sg += grow[p];
              sgx += grow[p] * (xrow[p] - m[p]) * iv[p];
            }
            if (need_b) bi->grad[ch] += sg;
            if (need_g) gi->grad[ch] += sgx;
          }
        }
        if (need_x) {
          std::fill(t1.begin(), t1.end(), 0.0);
          std::fill(t2.begin(), t2.end(), 0.0);
          for (int ch = 0; ch < c; ++ch) {
            const double* grow = gs + ch * plane;
            const double* xrow = xs + ch * plane;
            const double gc = pg[ch];
            for (std::size_t p = 0; p < plane; ++p) {
              double dxh = grow[p] * gc;
              t1[p] += dxh;
              t2[p] += dxh * (xrow[p] - m[p]) * iv[p];
            }
          }
          for (std::size_t p = 0; p < plane; ++p) {
            t1[p] *= cinv;
            t2[p] *= cinv;
          }
          double* gxs = xi->grad.data() + i * sample;
          for (int ch = 0; ch < c; ++ch) {
            const double* grow = gs + ch * plane;
            const double* xrow = xs + ch * plane;
            double* gxrow = gxs + ch * plane;
            const double gc = pg[ch];
            for (std::size_t p = 0; p < plane; ++p) {
              double xh = (xrow[p] - m[p]) * iv[p];
              gxrow[p] += iv[p] * (grow[p] * gc - t1[p] - xh * t2[p]);
            }
          }
        }
      }
    });
  }
  return out;
}

// ------------------------------------------------------ parameter bundles

Conv2dParams Conv2dParams::make(int c_in, int c_out, int k, SplitRng rng) {
  Conv2dParams p;
  double bound = std::sqrt(1.0 / (static_cast<double>(c_in) * k * k));
  p.kernel = Tensor::uniform({c_out, c_in, k, k}, rng, -bound, bound, true);
  p.bias = Tensor::zeros({c_out}, true);
  p.stride = 1;
  p.padding = (k - 1) / 2;
  return p;
}

Tensor Conv2dParams::forward(const Tensor& x) const {
  return conv2d(x, kernel, bias, stride, padding);
}

void Conv2dParams::collect(const std::string& prefix,
                           NamedTensors& out) const {
  out.emplace_back(prefix + ".weight", kernel);
  out.emplace_back(prefix + ".bias", bias);
}

DepthwiseSeparableParams DepthwiseSeparableParams::make(int c_in, int c_out,
                                                        int k, SplitRng rng) {
  DepthwiseSeparableParams p;
  double dw_bound = std::sqrt(1.0 / (static_cast<double>(k) * k));
  p.depthwise_kernel =
      Tensor::uniform({c_in, 1, k, k}, rng, -dw_bound, dw_bound, true);
  p.depthwise_bias = Tensor::zeros({c_in}, true);
  double pw_bound = std::sqrt(1.0 / c_in);
  p.pointwise_kernel =
      Tensor::uniform({c_out, c_in, 1, 1}, rng, -pw_bound, pw_bound, true);
  p.pointwise_bias = Tensor::zeros({c_out}, true);
  p.padding = (k - 1) / 2;
  return p;
}

Tensor DepthwiseSeparableParams::forward(const Tensor& x) const {
  Tensor mid = depthwise_conv2d(x, depthwise_kernel, depthwise_bias, padding);
  return pointwise_conv(mid, pointwise_kernel, pointwise_bias);
}

void DepthwiseSeparableParams::collect(const std::string& prefix,
                                       NamedTensors& out) const {
  out.emplace_back(prefix + ".dw.weight", depthwise_kernel);
  out.emplace_back(prefix + ".dw.bias", depthwise_bias);
  out.emplace_back(prefix + ".pw.weight", pointwise_kernel);
  out.emplace_back(prefix + ".pw.bias", pointwise_bias);
}

SpatialConvParams SpatialConvParams::make(int c_in, int c_out, int k,
                                          bool separable, SplitRng rng) {
  SpatialConvParams p;
  p.separable = separable;
  if (separable) {
    p.ds = DepthwiseSeparableParams::make(c_in, c_out, k, rng);
  } else {
    p.dense = Conv2dParams::make(c_in, c_out, k, rng);
  }
  return p;
}

Tensor SpatialConvParams::forward(const Tensor& x) const {
  return separable ? ds.forward(x) : dense.forward(x);
}

void SpatialConvParams::collect(const std::string& prefix,
                                NamedTensors& out) const {
  if (separable) {
    ds.collect(prefix, out);
  } else {
    dense.collect(prefix, out);
  }
}

InvertedBottleneckParams InvertedBottleneckParams::make(int channels,
                                                        int expansion_ratio,
                                                        int k,
                                                        bool use_depthwise,
                                                        SplitRng rng) {
  InvertedBottleneckParams p;
  p.channels = channels;
  p.padding = (k - 1) / 2;
  p.depthwise_spatial = use_depthwise;
  const int ec = channels * expansion_ratio;
  double eb = std::sqrt(1.0 / channels);
  p.expand_kernel =
      Tensor::uniform({ec, channels, 1, 1}, rng, -eb, eb, true);
  p.expand_bias = Tensor::zeros({ec}, true);
  p.norm_gamma = Tensor::full({ec}, 1.0, true);
  p.norm_beta = Tensor::zeros({ec}, true);
  if (use_depthwise) {
    double sb = std::sqrt(1.0 / (static_cast<double>(k) * k));
    p.spatial_kernel = Tensor::uniform({ec, 1, k, k}, rng, -sb, sb, true);
  } else {
    double sb = std::sqrt(1.0 / (static_cast<double>(ec) * k * k));
    p.spatial_kernel = Tensor::uniform({ec, ec, k, k}, rng, -sb, sb, true);
  }
  p.spatial_bias = Tensor::zeros({ec}, true);
  double pb = std::sqrt(1.0 / ec);
  p.project_kernel = Tensor::uniform({channels, ec, 1, 1}, rng, -pb, pb, true);
  p.project_bias = Tensor::zeros({channels}, true);
  return p;
}

Tensor InvertedBottleneckParams::forward(const Tensor& x) const {
  if (x.dim(1) != channels) {
    throw std::invalid_argument(
        "inverted_bottleneck: input shape " + shape_to_string(x.shape()) +
        " does not carry " + std::to_string(channels) + " channels");
  }
  Tensor h = pointwise_conv(x, expand_kernel, expand_bias);
  h = layer_norm_channels(h, norm_gamma, norm_beta);
  h = relu(h);
  h = depthwise_spatial
          ? depthwise_conv2d(h, spatial_kernel, spatial_bias, padding)
          : conv2d(h, spatial_kernel, spatial_bias, 1, padding);
  h = relu(h);
  h = pointwise_conv(h, project_kernel, project_bias);
  return add(x, h);
}

void InvertedBottleneckParams::collect(const std::string& prefix,
                                       NamedTensors& out) const {
  out.emplace_back(prefix + ".expand.weight", expand_kernel);
  out.emplace_back(prefix + ".expand.bias", expand_bias);
  out.emplace_back(prefix + ".norm.gamma", norm_gamma);
  out.emplace_back(prefix + ".norm.beta", norm_beta);
  out.emplace_back(prefix + ".spatial.weight", spatial_kernel);
  out.emplace_back(prefix + ".spatial.bias", spatial_bias);
  out.emplace_back(prefix + ".project.weight", project_kernel);
  out.emplace_back(prefix + ".project.bias", project_bias);
}

PointwiseHeadParams PointwiseHeadParams::make(int c_in, SplitRng rng) {
  PointwiseHeadParams p;
  double bound = std::sqrt(1.0 / c_in);
  p.kernel = Tensor::uniform({2, c_in, 1, 1}, rng, -bound, bound, true);
  p.bias = Tensor::zeros({2}, true);
  return p;
}

Tensor PointwiseHeadParams::forward(const Tensor& x) const {
  return pointwise_conv(x, kernel, bias);
}

void PointwiseHeadParams::collect(const std::string& prefix,
                                  NamedTensors& out) const {
  out.emplace_back(prefix + ".weight", kernel);
  out.emplace_back(prefix + ".bias", bias);
}

}  // namespace casunext
