#pragma once

#include <algorithm>
#include <array>
#include <cstdint>

#include "bipn/tensor.hpp"

// Raw numeric loops shared by the forward ops and their adjoints. Everything
// here works on zero-padded copies so the hot loops stay branch-free; padding
// buffers are small next to the multiply-accumulate cost.

namespace bipn::kernels {

inline int conv_out_dim(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}

inline int deconv_out_dim(int in, int k, int stride, int pad) {
  return (in - 1) * stride - 2 * pad + k;
}

template <typename S>
Tensor<S> pad2d(const Tensor<S>& x, int pad) {
  if (pad == 0) return x;
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor<S> out({c, h + 2 * pad, w + 2 * pad});
  const int pw = w + 2 * pad;
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y)
      std::copy_n(x.ptr() + (ci * h + y) * w, w, out.ptr() + (ci * (h + 2 * pad) + y + pad) * pw + pad);
  return out;
}

template <typename S>
void unpad2d_accumulate(const Tensor<S>& padded, int pad, Tensor<S>& dst) {
  const int c = dst.dim(0), h = dst.dim(1), w = dst.dim(2);
  if (pad == 0) {
    for (std::int64_t i = 0; i < dst.numel(); ++i) dst.data[i] += padded.data[i];
    return;
  }
  const int pw = w + 2 * pad;
  for (int ci = 0; ci < c; ++ci)
    for (int y = 0; y < h; ++y) {
      const S* src = padded.ptr() + (ci * (h + 2 * pad) + y + pad) * pw + pad;
      S* d = dst.ptr() + (ci * h + y) * w;
      for (int x = 0; x < w; ++x) d[x] += src[x];
    }
}

// out[co,y,x] += sum_{ci,u,v} k[co,ci,u,v] * in_pad[ci, y*s+u, x*s+v]
// `out` must be pre-filled (bias or zeros).
template <typename S>
void conv2d_accumulate(const S* in_pad, int ci_n, int ph, int pw, const S* kernel, int co_n,
                       int kh, int kw, int stride, S* out, int oh, int ow) {
  for (int co = 0; co < co_n; ++co) {
    S* oplane = out + static_cast<std::int64_t>(co) * oh * ow;
    for (int ci = 0; ci < ci_n; ++ci) {
      const S* iplane = in_pad + static_cast<std::int64_t>(ci) * ph * pw;
      const S* krow = kernel + (static_cast<std::int64_t>(co) * ci_n + ci) * kh * kw;
      for (int u = 0; u < kh; ++u)
        for (int v = 0; v < kw; ++v) {
          const S w = krow[u * kw + v];
          if (w == S(0)) continue;
          for (int y = 0; y < oh; ++y) {
            const S* irow = iplane + (y * stride + u) * pw + v;
            S* orow = oplane + y * ow;
            if (stride == 1) {
              for (int x = 0; x < ow; ++x) orow[x] += w * irow[x];
            } else {
              for (int x = 0; x < ow; ++x) orow[x] += w * irow[x * stride];
            }
          }
        }
    }
  }
}

// Adjoint of conv2d_accumulate w.r.t. its input: scatter gout back through the
// kernel into the padded-input gradient.
template <typename S>
void conv2d_backward_input(S* gin_pad, int ci_n, int ph, int pw, const S* kernel, int co_n,
                           int kh, int kw, int stride, const S* gout, int oh, int ow) {
  for (int co = 0; co < co_n; ++co) {
    const S* gplane = gout + static_cast<std::int64_t>(co) * oh * ow;
    for (int ci = 0; ci < ci_n; ++ci) {
      S* iplane = gin_pad + static_cast<std::int64_t>(ci) * ph * pw;
      const S* krow = kernel + (static_cast<std::int64_t>(co) * ci_n + ci) * kh * kw;
      for (int u = 0; u < kh; ++u)
        for (int v = 0; v < kw; ++v) {
          const S w = krow[u * kw + v];
          if (w == S(0)) continue;
          for (int y = 0; y < oh; ++y) {
            S* irow = iplane + (y * stride + u) * pw + v;
            const S* grow = gplane + y * ow;
            if (stride == 1) {
              for (int x = 0; x < ow; ++x) irow[x] += w * grow[x];
            } else {
              for (int x = 0; x < ow; ++x) irow[x * stride] += w * grow[x];
            }
          }
        }
    }
  }
}

// gk[co,ci,u,v] += sum_{y,x} in_pad[ci, y*s+u, x*s+v] * gout[co,y,x]
template <typename S>
void conv2d_backward_kernel(const S* in_pad, int ci_n, int ph, int pw, S* gkernel, int co_n,
                            int kh, int kw, int stride, const S* gout, int oh, int ow) {
  for (int co = 0; co < co_n; ++co) {
    const S* gplane = gout + static_cast<std::int64_t>(co) * oh * ow;
    for (int ci = 0; ci < ci_n; ++ci) {
      const S* iplane = in_pad + static_cast<std::int64_t>(ci) * ph * pw;
      S* krow = gkernel + (static_cast<std::int64_t>(co) * ci_n + ci) * kh * kw;
      for (int u = 0; u < kh; ++u)
        for (int v = 0; v < kw; ++v) {
          S acc = S(0);
          for (int y = 0; y < oh; ++y) {
            const S* irow = iplane + (y * stride + u) * pw + v;
            const S* grow = gplane + y * ow;
            if (stride == 1) {
              for (int x = 0; x < ow; ++x) acc += irow[x] * grow[x];
            } else {
              for (int x = 0; x < ow; ++x) acc += irow[x * stride] * grow[x];
            }
          }
          krow[u * kw + v] += acc;
        }
    }
  }
}

// buf[co, y*s+u, x*s+v] += k[ci,co,u,v] * in[ci,y,x]; buf is the uncropped
// deconvolution surface of size (ih-1)*s+kh per axis.
template <typename S>
void deconv2d_scatter(const S* in, int ci_n, int ih, int iw, const S* kernel, int co_n, int kh,
                      int kw, int stride, S* buf, int bh, int bw) {
  for (int ci = 0; ci < ci_n; ++ci) {
    const S* iplane = in + static_cast<std::int64_t>(ci) * ih * iw;
    for (int co = 0; co < co_n; ++co) {
      S* bplane = buf + static_cast<std::int64_t>(co) * bh * bw;
      const S* krow = kernel + (static_cast<std::int64_t>(ci) * co_n + co) * kh * kw;
      for (int u = 0; u < kh; ++u)
        for (int v = 0; v < kw; ++v) {
          const S w = krow[u * kw + v];
          if (w == S(0)) continue;
          for (int y = 0; y < ih; ++y) {
            const S* irow = iplane + y * iw;
            S* brow = bplane + (y * stride + u) * bw + v;
            if (stride == 1) {
              for (int x = 0; x < iw; ++x) brow[x] += w * irow[x];
            } else {
              for (int x = 0; x < iw; ++x) brow[x * stride] += w * irow[x];
            }
          }
        }
    }
  }
}

// gin[ci,y,x] += sum_{co,u,v} k[ci,co,u,v] * gbuf[co, y*s+u, x*s+v]
template <typename S>
void deconv2d_backward_input(S* gin, int ci_n, int ih, int iw, const S* kernel, int co_n, int kh,
                             int kw, int stride, const S* gbuf, int bh, int bw) {
  for (int ci = 0; ci < ci_n; ++ci) {
    S* iplane = gin + static_cast<std::int64_t>(ci) * ih * iw;
    for (int co = 0; co < co_n; ++co) {
      const S* bplane = gbuf + static_cast<std::int64_t>(co) * bh * bw;
      const S* krow = kernel + (static_cast<std::int64_t>(ci) * co_n + co) * kh * kw;
      for (int u = 0; u < kh; ++u)
        for (int v = 0; v < kw; ++v) {
          const S w = krow[u * kw + v];
          if (w == S(0)) continue;
          for (int y = 0; y < ih; ++y) {
            S* irow = iplane + y * iw;
            const S* brow = bplane + (y * stride + u) * bw + v;
            if (stride == 1) {
              for (int x = 0; x < iw; ++x) irow[x] += w * brow[x];
            } else {
              for (int x = 0; x < iw; ++x) irow[x] += w * brow[x * stride];
            }
          }
        }
    }
  }
}

// gk[ci,co,u,v] += sum_{y,x} in[ci,y,x] * gbuf[co, y*s+u, x*s+v]
template <typename S>
void deconv2d_backward_kernel(const S* in, int ci_n, int ih, int iw, S* gkernel, int co_n, int kh,
                              int kw, int stride, const S* gbuf, int bh, int bw) {
  for (int ci = 0; ci < ci_n; ++ci) {
    const S* iplane = in + static_cast<std::int64_t>(ci) * ih * iw;
    for (int co = 0; co < co_n; ++co) {
      const S* bplane = gbuf + static_cast<std::int64_t>(co) * bh * bw;
      S* krow = gkernel + (static_cast<std::int64_t>(ci) * co_n + co) * kh * kw;
      for (int u = 0; u < kh; ++u)
        for (int v = 0; v < kw; ++v) {
          S acc = S(0);
          for (int y = 0; y < ih; ++y) {
            const S* irow = iplane + y * iw;
            const S* brow = bplane + (y * stride + u) * bw + v;
            if (stride == 1) {
              for (int x = 0; x < iw; ++x) acc += irow[x] * brow[x];
            } else {
              for (int x = 0; x < iw; ++x) acc += irow[x] * brow[x * stride];
            }
          }
          krow[u * kw + v] += acc;
        }
    }
  }
}

// ---- 3-D convolution (depth, height, width), per-axis stride and padding ----

template <typename S>
Tensor<S> pad3d(const Tensor<S>& x, const std::array<int, 3>& pad) {
  if (pad[0] == 0 && pad[1] == 0 && pad[2] == 0) return x;
  const int c = x.dim(0), d = x.dim(1), h = x.dim(2), w = x.dim(3);
  const int pd = d + 2 * pad[0], ph = h + 2 * pad[1], pw = w + 2 * pad[2];
  Tensor<S> out({c, pd, ph, pw});
  for (int ci = 0; ci < c; ++ci)
    for (int z = 0; z < d; ++z)
      for (int y = 0; y < h; ++y)
        std::copy_n(x.ptr() + ((static_cast<std::int64_t>(ci) * d + z) * h + y) * w, w,
                    out.ptr() + ((static_cast<std::int64_t>(ci) * pd + z + pad[0]) * ph + y + pad[1]) * pw +
                        pad[2]);
  return out;
}

template <typename S>
void unpad3d_accumulate(const Tensor<S>& padded, const std::array<int, 3>& pad, Tensor<S>& dst) {
  const int c = dst.dim(0), d = dst.dim(1), h = dst.dim(2), w = dst.dim(3);
  if (pad[0] == 0 && pad[1] == 0 && pad[2] == 0) {
    for (std::int64_t i = 0; i < dst.numel(); ++i) dst.data[i] += padded.data[i];
    return;
  }
  const int pd = d + 2 * pad[0], ph = h + 2 * pad[1], pw = w + 2 * pad[2];
  for (int ci = 0; ci < c; ++ci)
    for (int z = 0; z < d; ++z)
      for (int y = 0; y < h; ++y) {
        const S* src = padded.ptr() +
                       ((static_cast<std::int64_t>(ci) * pd + z + pad[0]) * ph + y + pad[1]) * pw + pad[2];
        S* dp = dst.ptr() + ((static_cast<std::int64_t>(ci) * d + z) * h + y) * w;
        for (int x = 0; x < w; ++x) dp[x] += src[x];
      }
}

// mode 0: forward (accumulate into out), 1: backward-input (accumulate into
// in_pad), 2: backward-kernel (accumulate into kernel). One loop nest keeps
// the three passes structurally identical.
template <typename S, int Mode>
void conv3d_loop(S* in_pad, int ci_n, int pd, int ph, int pw, S* kernel, int co_n, int kd, int kh,
                 int kw, const std::array<int, 3>& stride, S* out, int od, int oh, int ow) {
  for (int co = 0; co < co_n; ++co)
    for (int ci = 0; ci < ci_n; ++ci) {
      S* iplane = in_pad + static_cast<std::int64_t>(ci) * pd * ph * pw;
      S* kbase = kernel + ((static_cast<std::int64_t>(co) * ci_n + ci) * kd) * kh * kw;
      S* oplane = out + static_cast<std::int64_t>(co) * od * oh * ow;
      for (int t = 0; t < kd; ++t)
        for (int u = 0; u < kh; ++u)
          for (int v = 0; v < kw; ++v) {
            S* kp = kbase + (t * kh + u) * kw + v;
            S w = *kp;
            S acc = S(0);
            if (Mode != 2 && w == S(0)) continue;
            for (int z = 0; z < od; ++z)
              for (int y = 0; y < oh; ++y) {
                S* irow = iplane + ((z * stride[0] + t) * ph + y * stride[1] + u) * pw + v;
                S* orow = oplane + (static_cast<std::int64_t>(z) * oh + y) * ow;
                for (int x = 0; x < ow; ++x) {
                  S* ip = irow + x * stride[2];
                  if constexpr (Mode == 0) orow[x] += w * *ip;
                  if constexpr (Mode == 1) *ip += w * orow[x];
                  if constexpr (Mode == 2) acc += *ip * orow[x];
                }
              }
            if constexpr (Mode == 2) *kp += acc;
          }
    }
}

// ---- bilinear resize (corner-aligned) over the trailing two axes ----

struct ResizeWeights {
  std::vector<int> lo;
  std::vector<double> frac;
};

// Corner-aligned source coordinates: dst i samples src at i*(in-1)/(out-1);
// a single-pixel output samples the origin.
inline ResizeWeights resize_axis(int in, int out) {
  ResizeWeights rw;
  rw.lo.resize(static_cast<std::size_t>(out));
  rw.frac.resize(static_cast<std::size_t>(out));
  const double scale = (out > 1) ? static_cast<double>(in - 1) / (out - 1) : 0.0;
  for (int i = 0; i < out; ++i) {
    double src = scale * i;
    int lo = static_cast<int>(src);
    if (lo > in - 2) lo = in >= 2 ? in - 2 : 0;
    double f = src - lo;
    if (in == 1) f = 0.0;
    rw.lo[static_cast<std::size_t>(i)] = lo;
    rw.frac[static_cast<std::size_t>(i)] = f;
  }
  return rw;
}

template <typename S>
void resize_bilinear_plane(const S* src, int h, int w, S* dst, int th, int tw,
                           const ResizeWeights& ry, const ResizeWeights& rx) {
  const int y1off = h >= 2 ? w : 0;
  const int x1off = w >= 2 ? 1 : 0;
  for (int y = 0; y < th; ++y) {
    const int ylo = ry.lo[static_cast<std::size_t>(y)];
    const S fy = static_cast<S>(ry.frac[static_cast<std::size_t>(y)]);
    const S* r0 = src + ylo * w;
    const S* r1 = r0 + y1off;
    S* out = dst + static_cast<std::int64_t>(y) * tw;
    for (int x = 0; x < tw; ++x) {
      const int xlo = rx.lo[static_cast<std::size_t>(x)];
      const S fx = static_cast<S>(rx.frac[static_cast<std::size_t>(x)]);
      const S a = r0[xlo], b = r0[xlo + x1off], c = r1[xlo], d = r1[xlo + x1off];
      const S top = a + fx * (b - a);
      const S bot = c + fx * (d - c);
      out[x] = top + fy * (bot - top);
    }
  }
}

template <typename S>
void resize_bilinear_plane_backward(S* gsrc, int h, int w, const S* gdst, int th, int tw,
                                    const ResizeWeights& ry, const ResizeWeights& rx) {
  const int y1off = h >= 2 ? w : 0;
  const int x1off = w >= 2 ? 1 : 0;
  for (int y = 0; y < th; ++y) {
    const int ylo = ry.lo[static_cast<std::size_t>(y)];
    const S fy = static_cast<S>(ry.frac[static_cast<std::size_t>(y)]);
    S* r0 = gsrc + ylo * w;
    S* r1 = r0 + y1off;
    const S* grow = gdst + static_cast<std::int64_t>(y) * tw;
    for (int x = 0; x < tw; ++x) {
      const int xlo = rx.lo[static_cast<std::size_t>(x)];
      const S fx = static_cast<S>(rx.frac[static_cast<std::size_t>(x)]);
      const S g = grow[x];
      r0[xlo] += g * (S(1) - fy) * (S(1) - fx);
      r0[xlo + x1off] += g * (S(1) - fy) * fx;
      r1[xlo] += g * fy * (S(1) - fx);
      r1[xlo + x1off] += g * fy * fx;
    }
  }
}

}  // namespace bipn::kernels
