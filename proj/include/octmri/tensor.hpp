#ifndef OCTMRI_TENSOR_HPP_
#define OCTMRI_TENSOR_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace octmri {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ShapeError : Error {
  using Error::Error;
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

// Dense complex-valued N-D array stored as separate real/imaginary planes,
// row-major float64. Canonical layouts: [C,H,W] features, [N,C,H,W] batches,
// [Cout,Cin,k,k] kernels. A tensor with an all-zero imaginary plane behaves
// identically to a real tensor under every operation.
struct ComplexTensor {
  Shape shape;
  std::vector<double> real;
  std::vector<double> imag;

  ComplexTensor() = default;

  static ComplexTensor zeros(Shape s) {
    for (std::size_t d : s)
      if (d < 1) throw ShapeError("tensor dimension must be >= 1, got shape " + shape_str(s));
    ComplexTensor t;
    t.shape = std::move(s);
    std::size_t n = shape_numel(t.shape);
    t.real.assign(n, 0.0);
    t.imag.assign(n, 0.0);
    return t;
  }

  std::size_t numel() const { return real.size(); }
  std::size_t ndim() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }

  bool same_shape(const ComplexTensor& o) const { return shape == o.shape; }

  // index helper for [C,H,W]
  std::size_t at3(std::size_t c, std::size_t y, std::size_t x) const {
    return (c * shape[1] + y) * shape[2] + x;
  }
};

// Convolution hyper-parameters. Stride is fixed at 1 and padding is
// "same" (zero padding of (k-1)/2), so spatial sizes are preserved.
struct ConvSpec {
  std::size_t kernel_size = 3;

  ConvSpec() = default;
  explicit ConvSpec(std::size_t k) : kernel_size(k) {
    if (k % 2 == 0 || k < 1) throw ShapeError("kernel_size must be odd, got " + std::to_string(k));
  }
  std::size_t padding() const { return (kernel_size - 1) / 2; }
};

namespace detail {

// Running multiply-accumulate counter for the convolution kernels; used by
// the training loop to report measured per-iteration arithmetic cost.
inline std::uint64_t& mac_counter() {
  thread_local std::uint64_t n = 0;
  return n;
}

// out[co,y,x] += sign * sum_{ci,ky,kx} x[ci, y+ky-pad, x+kx-pad] * k[co,ci,ky,kx]
// Cross-correlation with zero padding; fixed loop order for bitwise determinism.
inline void conv_plane_accum(const double* x, std::size_t cin, std::size_t h, std::size_t w,
                             const double* k, std::size_t cout, std::size_t kh, std::size_t kw,
                             long pad, double sign, double* out) {
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double wgt = sign * k[((co * cin + ci) * kh + ky) * kw + kx];
          const long dy = static_cast<long>(ky) - pad;
          const long dx = static_cast<long>(kx) - pad;
          const long y0 = dy < 0 ? -dy : 0;
          const long y1 = std::min<long>(static_cast<long>(h), static_cast<long>(h) - dy);
          const long x0 = dx < 0 ? -dx : 0;
          const long x1 = std::min<long>(static_cast<long>(w), static_cast<long>(w) - dx);
          if (y1 <= y0 || x1 <= x0) continue;
          mac_counter() += static_cast<std::uint64_t>(y1 - y0) * static_cast<std::uint64_t>(x1 - x0);
          for (long y = y0; y < y1; ++y) {
            const double* xr = x + (ci * h + static_cast<std::size_t>(y + dy)) * w + dx;
            double* orow = out + (co * h + static_cast<std::size_t>(y)) * w;
            for (long xx = x0; xx < x1; ++xx) orow[xx] += wgt * xr[xx];
          }
        }
      }
    }
  }
}

// Adjoint of conv_plane_accum w.r.t. the input:
// gx[ci,u,v] += sign * sum_{co,ky,kx} gy[co, u-ky+pad, v-kx+pad] * k[co,ci,ky,kx]
inline void conv_plane_back_input(const double* gy, std::size_t cout, std::size_t h, std::size_t w,
                                  const double* k, std::size_t cin, std::size_t kh, std::size_t kw,
                                  long pad, double sign, double* gx) {
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const double wgt = sign * k[((co * cin + ci) * kh + ky) * kw + kx];
          const long dy = pad - static_cast<long>(ky);
          const long dx = pad - static_cast<long>(kx);
          const long y0 = dy < 0 ? -dy : 0;
          const long y1 = std::min<long>(static_cast<long>(h), static_cast<long>(h) - dy);
          const long x0 = dx < 0 ? -dx : 0;
          const long x1 = std::min<long>(static_cast<long>(w), static_cast<long>(w) - dx);
          if (y1 <= y0 || x1 <= x0) continue;
          mac_counter() += static_cast<std::uint64_t>(y1 - y0) * static_cast<std::uint64_t>(x1 - x0);
          for (long y = y0; y < y1; ++y) {
            const double* gr = gy + (co * h + static_cast<std::size_t>(y + dy)) * w + dx;
            double* orow = gx + (ci * h + static_cast<std::size_t>(y)) * w;
            for (long xx = x0; xx < x1; ++xx) orow[xx] += wgt * gr[xx];
          }
        }
      }
    }
  }
}

// Adjoint of conv_plane_accum w.r.t. the kernel:
// gk[co,ci,ky,kx] += sign * sum_{y,x} gy[co,y,x] * x[ci, y+ky-pad, x+kx-pad]
inline void conv_plane_back_kernel(const double* x, std::size_t cin, std::size_t h, std::size_t w,
                                   const double* gy, std::size_t cout, std::size_t kh, std::size_t kw,
                                   long pad, double sign, double* gk) {
  for (std::size_t co = 0; co < cout; ++co) {
    for (std::size_t ci = 0; ci < cin; ++ci) {
      for (std::size_t ky = 0; ky < kh; ++ky) {
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const long dy = static_cast<long>(ky) - pad;
          const long dx = static_cast<long>(kx) - pad;
          const long y0 = dy < 0 ? -dy : 0;
          const long y1 = std::min<long>(static_cast<long>(h), static_cast<long>(h) - dy);
          const long x0 = dx < 0 ? -dx : 0;
          const long x1 = std::min<long>(static_cast<long>(w), static_cast<long>(w) - dx);
          double s = 0.0;
          if (y1 > y0 && x1 > x0) {
            mac_counter() += static_cast<std::uint64_t>(y1 - y0) * static_cast<std::uint64_t>(x1 - x0);
            for (long y = y0; y < y1; ++y) {
              const double* gr = gy + (co * h + static_cast<std::size_t>(y)) * w;
              const double* xr = x + (ci * h + static_cast<std::size_t>(y + dy)) * w + dx;
              for (long xx = x0; xx < x1; ++xx) s += gr[xx] * xr[xx];
            }
          }
          gk[((co * cin + ci) * kh + ky) * kw + kx] += sign * s;
        }
      }
    }
  }
}

inline void check_conv_shapes(const ComplexTensor& x, const ComplexTensor& k, const ConvSpec& spec) {
  if (x.ndim() != 3)
    throw ShapeError("conv input must be [Cin,H,W], got " + shape_str(x.shape));
  if (k.ndim() != 4)
    throw ShapeError("conv kernel must be [Cout,Cin,kh,kw], got " + shape_str(k.shape));
  if (k.dim(2) != spec.kernel_size || k.dim(3) != spec.kernel_size)
    throw ShapeError("kernel spatial size " + std::to_string(k.dim(2)) + "x" + std::to_string(k.dim(3)) +
                     " does not match spec kernel_size " + std::to_string(spec.kernel_size));
  if (k.dim(1) != x.dim(0))
    throw ShapeError("kernel Cin " + std::to_string(k.dim(1)) + " does not match input channels " +
                     std::to_string(x.dim(0)));
}

}  // namespace detail

inline std::uint64_t mac_counter_read() { return detail::mac_counter(); }
inline void mac_counter_reset() { detail::mac_counter() = 0; }

// Real-plane cross-correlation with "same" zero padding, stride 1, no bias.
// Only the real planes of x and k participate; the output imag plane is zero.
inline ComplexTensor conv2d_real(const ComplexTensor& x, const ComplexTensor& k, const ConvSpec& spec) {
  detail::check_conv_shapes(x, k, spec);
  const std::size_t h = x.dim(1), w = x.dim(2);
  ComplexTensor out = ComplexTensor::zeros({k.dim(0), h, w});
  detail::conv_plane_accum(x.real.data(), x.dim(0), h, w, k.real.data(), k.dim(0),
                           spec.kernel_size, spec.kernel_size,
                           static_cast<long>(spec.padding()), 1.0, out.real.data());
  return out;
}

// Complex convolution: (kr + i ki) * (xr + i xi), realized as exactly four
// real cross-correlations. Kernels are real-valued tensors (real plane used).
inline ComplexTensor complex_conv2d(const ComplexTensor& x, const ComplexTensor& kr,
                                    const ComplexTensor& ki, const ConvSpec& spec) {
  if (!kr.same_shape(ki))
    throw ShapeError("kr shape " + shape_str(kr.shape) + " != ki shape " + shape_str(ki.shape));
  detail::check_conv_shapes(x, kr, spec);
  const std::size_t h = x.dim(1), w = x.dim(2);
  const long pad = static_cast<long>(spec.padding());
  const std::size_t ks = spec.kernel_size;
  ComplexTensor out = ComplexTensor::zeros({kr.dim(0), h, w});
  // Re = kr*xr - ki*xi
  detail::conv_plane_accum(x.real.data(), x.dim(0), h, w, kr.real.data(), kr.dim(0), ks, ks, pad, 1.0, out.real.data());
  detail::conv_plane_accum(x.imag.data(), x.dim(0), h, w, ki.real.data(), ki.dim(0), ks, ks, pad, -1.0, out.real.data());
  // Im = kr*xi + ki*xr
  detail::conv_plane_accum(x.imag.data(), x.dim(0), h, w, kr.real.data(), kr.dim(0), ks, ks, pad, 1.0, out.imag.data());
  detail::conv_plane_accum(x.real.data(), x.dim(0), h, w, ki.real.data(), ki.dim(0), ks, ks, pad, 1.0, out.imag.data());
  return out;
}

// 2x2 average pooling on both planes independently; requires even H and W.
inline ComplexTensor avg_pool2(const ComplexTensor& x) {
  if (x.ndim() != 3) throw ShapeError("avg_pool2 expects [C,H,W], got " + shape_str(x.shape));
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  if (h % 2 != 0 || w % 2 != 0)
    throw ShapeError("avg_pool2 requires even spatial dims, got " + shape_str(x.shape));
  ComplexTensor out = ComplexTensor::zeros({c, h / 2, w / 2});
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t y = 0; y < h / 2; ++y)
      for (std::size_t xx = 0; xx < w / 2; ++xx) {
        const std::size_t i00 = x.at3(ci, 2 * y, 2 * xx);
        const std::size_t i10 = x.at3(ci, 2 * y + 1, 2 * xx);
        const std::size_t o = out.at3(ci, y, xx);
        out.real[o] = 0.25 * (x.real[i00] + x.real[i00 + 1] + x.real[i10] + x.real[i10 + 1]);
        out.imag[o] = 0.25 * (x.imag[i00] + x.imag[i00 + 1] + x.imag[i10] + x.imag[i10 + 1]);
      }
  return out;
}

// Nearest-neighbor 2x upsampling: each pixel replicated into a 2x2 block.
inline ComplexTensor upsample2_nearest(const ComplexTensor& x) {
  if (x.ndim() != 3) throw ShapeError("upsample2_nearest expects [C,H,W], got " + shape_str(x.shape));
  const std::size_t c = x.dim(0), h = x.dim(1), w = x.dim(2);
  ComplexTensor out = ComplexTensor::zeros({c, 2 * h, 2 * w});
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t y = 0; y < 2 * h; ++y)
      for (std::size_t xx = 0; xx < 2 * w; ++xx) {
        const std::size_t i = x.at3(ci, y / 2, xx / 2);
        const std::size_t o = out.at3(ci, y, xx);
        out.real[o] = x.real[i];
        out.imag[o] = x.imag[i];
      }
  return out;
}

// Split activation: ReLU applied independently to real and imaginary planes.
inline ComplexTensor crelu(const ComplexTensor& x) {
  ComplexTensor out = x;
  for (double& v : out.real) v = v > 0.0 ? v : 0.0;
  for (double& v : out.imag) v = v > 0.0 ? v : 0.0;
  return out;
}

inline ComplexTensor add(const ComplexTensor& a, const ComplexTensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("add shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  ComplexTensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.real[i] += b.real[i];
    out.imag[i] += b.imag[i];
  }
  return out;
}

inline ComplexTensor subtract(const ComplexTensor& a, const ComplexTensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("subtract shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  ComplexTensor out = a;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.real[i] -= b.real[i];
    out.imag[i] -= b.imag[i];
  }
  return out;
}

// Scale by a real scalar (applied to both planes).
inline ComplexTensor scale(const ComplexTensor& a, double s) {
  ComplexTensor out = a;
  for (double& v : out.real) v *= s;
  for (double& v : out.imag) v *= s;
  return out;
}

// Elementwise complex product (a + ib)(c + id).
inline ComplexTensor multiply(const ComplexTensor& a, const ComplexTensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("multiply shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  ComplexTensor out = ComplexTensor::zeros(a.shape);
  for (std::size_t i = 0; i < out.numel(); ++i) {
    out.real[i] = a.real[i] * b.real[i] - a.imag[i] * b.imag[i];
    out.imag[i] = a.real[i] * b.imag[i] + a.imag[i] * b.real[i];
  }
  return out;
}

// Concatenate [C,H,W] tensors along the channel axis.
inline ComplexTensor concat_channels(const std::vector<ComplexTensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: empty input list");
  std::size_t ctot = 0;
  for (const auto& p : parts) {
    if (p.ndim() != 3) throw ShapeError("concat_channels expects [C,H,W] parts");
    if (p.dim(1) != parts[0].dim(1) || p.dim(2) != parts[0].dim(2))
      throw ShapeError("concat_channels spatial mismatch");
    ctot += p.dim(0);
  }
  ComplexTensor out = ComplexTensor::zeros({ctot, parts[0].dim(1), parts[0].dim(2)});
  std::size_t plane = parts[0].dim(1) * parts[0].dim(2);
  std::size_t off = 0;
  for (const auto& p : parts) {
    std::copy(p.real.begin(), p.real.end(), out.real.begin() + static_cast<long>(off));
    std::copy(p.imag.begin(), p.imag.end(), out.imag.begin() + static_cast<long>(off));
    off += p.dim(0) * plane;
  }
  return out;
}

inline double max_abs_diff(const ComplexTensor& a, const ComplexTensor& b) {
  if (!a.same_shape(b))
    throw ShapeError("max_abs_diff shape mismatch: " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  double m = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    m = std::max(m, std::abs(a.real[i] - b.real[i]));
    m = std::max(m, std::abs(a.imag[i] - b.imag[i]));
  }
  return m;
}

}  // namespace octmri

#endif  // OCTMRI_TENSOR_HPP_
