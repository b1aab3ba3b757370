#ifndef OCTMRI_METRICS_HPP_
#define OCTMRI_METRICS_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "octmri/octave.hpp"
#include "octmri/tensor.hpp"

namespace octmri {

// Peak signal-to-noise ratio in dB over real magnitude images;
// MAX is taken from the reference. Identical images report +inf.
inline double psnr(const ComplexTensor& ref, const ComplexTensor& test) {
  if (!ref.same_shape(test))
    throw ShapeError("psnr: shape mismatch " + shape_str(ref.shape) + " vs " + shape_str(test.shape));
  double mx = 0.0;
  for (double v : ref.real) mx = std::max(mx, v);
  if (mx == 0.0) throw Error("psnr: reference image is all-zero");
  double mse = 0.0;
  for (std::size_t i = 0; i < ref.numel(); ++i) {
    const double d = ref.real[i] - test.real[i];
    mse += d * d;
  }
  mse /= static_cast<double>(ref.numel());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(mx * mx / mse);
}

// Mean local SSIM with an 11x11 Gaussian window (sigma 1.5), K1=0.01,
// K2=0.03, dynamic range = max(ref). Implemented via Gaussian-filtered
// moment maps over valid window positions.
inline double ssim(const ComplexTensor& ref, const ComplexTensor& test) {
  if (!ref.same_shape(test))
    throw ShapeError("ssim: shape mismatch " + shape_str(ref.shape) + " vs " + shape_str(test.shape));
  std::size_t H, W;
  if (ref.ndim() == 3 && ref.dim(0) == 1) {
    H = ref.dim(1);
    W = ref.dim(2);
  } else if (ref.ndim() == 2) {
    H = ref.dim(0);
    W = ref.dim(1);
  } else {
    throw ShapeError("ssim expects a single-channel image, got " + shape_str(ref.shape));
  }
  constexpr std::size_t win = 11;
  if (H < win || W < win)
    throw Error("ssim: image smaller than the 11x11 window: " + shape_str(ref.shape));

  // normalized 1-D Gaussian window
  double g[win];
  double gsum = 0.0;
  for (std::size_t i = 0; i < win; ++i) {
    const double d = static_cast<double>(i) - 5.0;
    g[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
    gsum += g[i];
  }
  for (double& v : g) v /= gsum;

  double L = 0.0;
  for (double v : ref.real) L = std::max(L, v);
  const double c1 = (0.01 * L) * (0.01 * L);
  const double c2 = (0.03 * L) * (0.03 * L);

  // separable filtering of x, y, x^2, y^2, xy
  const std::size_t oh = H - win + 1, ow = W - win + 1;
  auto filt = [&](auto&& getter) {
    std::vector<double> tmp(H * ow, 0.0), out(oh * ow, 0.0);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double s = 0.0;
        for (std::size_t i = 0; i < win; ++i) s += g[i] * getter(y, x + i);
        tmp[y * ow + x] = s;
      }
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x) {
        double s = 0.0;
        for (std::size_t i = 0; i < win; ++i) s += g[i] * tmp[(y + i) * ow + x];
        out[y * ow + x] = s;
      }
    return out;
  };
  const double* a = ref.real.data();
  const double* b = test.real.data();
  auto mu_a = filt([&](std::size_t y, std::size_t x) { return a[y * W + x]; });
  auto mu_b = filt([&](std::size_t y, std::size_t x) { return b[y * W + x]; });
  auto m_aa = filt([&](std::size_t y, std::size_t x) { return a[y * W + x] * a[y * W + x]; });
  auto m_bb = filt([&](std::size_t y, std::size_t x) { return b[y * W + x] * b[y * W + x]; });
  auto m_ab = filt([&](std::size_t y, std::size_t x) { return a[y * W + x] * b[y * W + x]; });

  double acc = 0.0;
  for (std::size_t i = 0; i < oh * ow; ++i) {
    const double va = m_aa[i] - mu_a[i] * mu_a[i];
    const double vb = m_bb[i] - mu_b[i] * mu_b[i];
    const double cov = m_ab[i] - mu_a[i] * mu_b[i];
    const double num = (2.0 * mu_a[i] * mu_b[i] + c1) * (2.0 * cov + c2);
    const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (va + vb + c2);
    acc += num / den;
  }
  return acc / static_cast<double>(oh * ow);
}

// Analytical multiply-accumulate model of one dual-octave complex
// convolution layer: 4 (complex) x sum over present paths of
// 2 * k^2 * Cin_part * Cout_part * (output pixels of that path), where paths
// touching the low-frequency branch run at (H/2)(W/2).
inline std::uint64_t flops_dual_octconv_spec(const OctLayerSpec& s, std::size_t H, std::size_t W) {
  auto [in_h, in_l] = split_channels(s.c_in, s.alpha_in);
  auto [out_h, out_l] = split_channels(s.c_out, s.alpha_out);
  const std::uint64_t k2 = static_cast<std::uint64_t>(s.kernel_size) * s.kernel_size;
  const std::uint64_t hi_pix = static_cast<std::uint64_t>(H) * W;
  const std::uint64_t lo_pix = static_cast<std::uint64_t>(H / 2) * (W / 2);
  std::uint64_t total = 0;
  if (in_h && out_h) total += 2 * k2 * in_h * out_h * hi_pix;  // H->H
  if (in_h && out_l) total += 2 * k2 * in_h * out_l * lo_pix;  // H->L (after pooling)
  if (in_l && out_h) total += 2 * k2 * in_l * out_h * lo_pix;  // L->H (before upsampling)
  if (in_l && out_l) total += 2 * k2 * in_l * out_l * lo_pix;  // L->L
  return 4 * total;
}

inline std::uint64_t flops_dual_octconv(std::size_t c_in, std::size_t c_out, std::size_t H,
                                        std::size_t W, std::size_t k, double alpha) {
  if (alpha > 0.0 && (H % 2 != 0 || W % 2 != 0))
    throw Error("flops_dual_octconv: H and W must be even when alpha > 0");
  return flops_dual_octconv_spec(OctLayerSpec{c_in, c_out, alpha, alpha, k}, H, W);
}

}  // namespace octmri

#endif  // OCTMRI_METRICS_HPP_
