#ifndef OCTMRI_MRI_HPP_
#define OCTMRI_MRI_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "octmri/fft.hpp"
#include "octmri/rng.hpp"
#include "octmri/tensor.hpp"

namespace octmri {

enum class MaskPattern { Uniform1D, Cartesian1D, Random2D, Radial2D };

inline const char* mask_pattern_name(MaskPattern p) {
  switch (p) {
    case MaskPattern::Uniform1D: return "uniform1d";
    case MaskPattern::Cartesian1D: return "cartesian1d";
    case MaskPattern::Random2D: return "random2d";
    case MaskPattern::Radial2D: return "radial2d";
  }
  return "?";
}

// Boolean k-space sampling pattern shared by all coils. Deterministic from
// (pattern, R, H, W, seed).
struct SamplingMask {
  std::vector<std::uint8_t> grid;  // [H,W], row-major
  std::size_t h = 0, w = 0;
  MaskPattern pattern = MaskPattern::Uniform1D;
  double accel = 1.0;
  std::uint64_t seed = 0;

  std::size_t count() const {
    std::size_t n = 0;
    for (auto v : grid) n += v;
    return n;
  }

  double achieved_accel() const {
    const std::size_t n = count();
    if (n == 0) return std::numeric_limits<double>::infinity();
    return static_cast<double>(h * w) / static_cast<double>(n);
  }

  bool at(std::size_t y, std::size_t x) const { return grid[y * w + x] != 0; }

  // [H,W] tensor of 0.0/1.0 on the real plane
  ComplexTensor to_tensor() const {
    ComplexTensor t = ComplexTensor::zeros({h, w});
    for (std::size_t i = 0; i < grid.size(); ++i) t.real[i] = grid[i] ? 1.0 : 0.0;
    return t;
  }

  static SamplingMask from_tensor(const ComplexTensor& t, MaskPattern p = MaskPattern::Uniform1D,
                                  double accel = 0.0, std::uint64_t seed = 0) {
    if (t.ndim() != 2) throw ShapeError("mask tensor must be [H,W], got " + shape_str(t.shape));
    SamplingMask m;
    m.h = t.dim(0);
    m.w = t.dim(1);
    m.pattern = p;
    m.accel = accel;
    m.seed = seed;
    m.grid.resize(t.numel());
    for (std::size_t i = 0; i < t.numel(); ++i) m.grid[i] = t.real[i] != 0.0 ? 1 : 0;
    return m;
  }
};

inline std::size_t default_center_lines(MaskPattern p) {
  return p == MaskPattern::Cartesian1D ? 8 : 0;
}

namespace mask_detail {

// weighted sampling without replacement via Gumbel-top-k; deterministic per rng
inline std::vector<std::size_t> top_k_weighted(const std::vector<double>& logw, std::size_t k, Rng& rng) {
  std::vector<std::pair<double, std::size_t>> keys(logw.size());
  for (std::size_t i = 0; i < logw.size(); ++i) keys[i] = {logw[i] + rng.gumbel(), i};
  std::partial_sort(keys.begin(), keys.begin() + static_cast<long>(std::min(k, keys.size())),
                    keys.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < std::min(k, keys.size()); ++i) out.push_back(keys[i].second);
  return out;
}

inline void rasterize_spokes(SamplingMask& m, std::size_t n_spokes, double rot) {
  std::fill(m.grid.begin(), m.grid.end(), 0);
  const double cy = static_cast<double>(m.h) / 2.0;
  const double cx = static_cast<double>(m.w) / 2.0;
  const double len = std::hypot(cy, cx);
  for (std::size_t j = 0; j < n_spokes; ++j) {
    const double th = rot + M_PI * static_cast<double>(j) / static_cast<double>(n_spokes);
    const double dy = std::sin(th), dx = std::cos(th);
    for (double t = -len; t <= len; t += 0.5) {
      const long y = std::lround(cy + t * dy);
      const long x = std::lround(cx + t * dx);
      if (y >= 0 && y < static_cast<long>(m.h) && x >= 0 && x < static_cast<long>(m.w))
        m.grid[static_cast<std::size_t>(y) * m.w + static_cast<std::size_t>(x)] = 1;
    }
  }
}

}  // namespace mask_detail

// Builds one of the four undersampling mask families. center_lines only
// applies to the 1D patterns (fully sampled autocalibration columns around
// the center); pass SIZE_MAX to use the per-pattern default.
inline SamplingMask make_mask(MaskPattern pattern, double R, std::size_t H, std::size_t W,
                              std::uint64_t seed, std::size_t center_lines = SIZE_MAX) {
  if (R < 1.0) throw Error("acceleration factor must be >= 1, got " + std::to_string(R));
  if (R > static_cast<double>(H * W))
    throw Error("acceleration factor " + std::to_string(R) + " exceeds grid size");
  if (center_lines == SIZE_MAX) center_lines = default_center_lines(pattern);

  SamplingMask m;
  m.h = H;
  m.w = W;
  m.pattern = pattern;
  m.accel = R;
  m.seed = seed;
  m.grid.assign(H * W, 0);
  Rng rng(seed);

  auto set_col = [&](std::size_t x) {
    for (std::size_t y = 0; y < H; ++y) m.grid[y * W + x] = 1;
  };
  auto center_cols = [&]() {
    std::vector<std::size_t> cols;
    const std::size_t lo = W / 2 - center_lines / 2;
    for (std::size_t i = 0; i < center_lines; ++i) cols.push_back(lo + i);
    return cols;
  };

  switch (pattern) {
    case MaskPattern::Uniform1D: {
      // every R-th phase-encode column (frequency-encode axis fully sampled)
      for (std::size_t j = 0;; ++j) {
        const auto x = static_cast<std::size_t>(std::floor(static_cast<double>(j) * R));
        if (x >= W) break;
        set_col(x);
      }
      for (std::size_t x : center_cols()) set_col(x);
      break;
    }
    case MaskPattern::Cartesian1D: {
      // variable-density random columns, Gaussian weight on the center
      const auto target = static_cast<std::size_t>(
          std::max<long long>(1, std::llround(static_cast<double>(W) / R)));
      std::vector<char> chosen(W, 0);
      for (std::size_t x : center_cols()) chosen[x] = 1;
      std::size_t have = 0;
      for (char c : chosen) have += static_cast<std::size_t>(c);
      if (target > have) {
        const double sig = static_cast<double>(W) / 6.0;
        std::vector<double> logw;
        std::vector<std::size_t> idx;
        for (std::size_t x = 0; x < W; ++x) {
          if (chosen[x]) continue;
          const double d = static_cast<double>(x) - static_cast<double>(W) / 2.0;
          logw.push_back(-d * d / (2.0 * sig * sig));
          idx.push_back(x);
        }
        for (std::size_t i : mask_detail::top_k_weighted(logw, target - have, rng)) chosen[idx[i]] = 1;
      }
      for (std::size_t x = 0; x < W; ++x)
        if (chosen[x]) set_col(x);
      break;
    }
    case MaskPattern::Random2D: {
      // variable-density random points, Gaussian weight on the k-space center
      const auto target = static_cast<std::size_t>(
          std::max<long long>(1, std::llround(static_cast<double>(H * W) / R)));
      const double sig = 0.25 * static_cast<double>(std::min(H, W));
      std::vector<double> logw(H * W);
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) {
          const double dy = static_cast<double>(y) - static_cast<double>(H) / 2.0;
          const double dx = static_cast<double>(x) - static_cast<double>(W) / 2.0;
          logw[y * W + x] = -(dy * dy + dx * dx) / (2.0 * sig * sig);
        }
      for (std::size_t i : mask_detail::top_k_weighted(logw, target, rng)) m.grid[i] = 1;
      break;
    }
    case MaskPattern::Radial2D: {
      // choose a spoke count whose achieved acceleration is closest to R
      const double rot = rng.uniform(0.0, M_PI);
      const auto target = static_cast<double>(H * W) / R;
      std::size_t best_n = 1;
      double best_err = std::numeric_limits<double>::infinity();
      for (std::size_t n = 1; n <= 4 * std::max(H, W); ++n) {
        mask_detail::rasterize_spokes(m, n, rot);
        const double err = std::abs(static_cast<double>(m.count()) - target);
        if (err < best_err) {
          best_err = err;
          best_n = n;
        }
        if (static_cast<double>(m.count()) > target) break;
      }
      mask_detail::rasterize_spokes(m, best_n, rot);
      break;
    }
  }
  // Masks above are described in centered k-space; shift into DFT index
  // order (frequency 0 at index 0) to match fft2's layout.
  std::vector<std::uint8_t> rolled(H * W, 0);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x)
      rolled[((y + H - H / 2) % H) * W + (x + W - W / 2) % W] = m.grid[y * W + x];
  m.grid = std::move(rolled);
  return m;
}

// Complex-valued coil sensitivity maps, jointly normalized so that
// sum_i |S_i(p)|^2 = 1 at every pixel.
struct CoilSet {
  ComplexTensor maps;  // [c,H,W]
  std::size_t count() const { return maps.dim(0); }
};

inline CoilSet make_sensitivities(std::size_t c, std::size_t H, std::size_t W) {
  if (c < 1) throw Error("coil count must be >= 1");
  CoilSet cs;
  cs.maps = ComplexTensor::zeros({c, H, W});
  const double cy = static_cast<double>(H) / 2.0;
  const double cx = static_cast<double>(W) / 2.0;
  const double rad = 0.45 * static_cast<double>(std::min(H, W));
  const double width = 0.5 * static_cast<double>(std::min(H, W));
  for (std::size_t i = 0; i < c; ++i) {
    const double th = 2.0 * M_PI * static_cast<double>(i) / static_cast<double>(c);
    const double ky = cy + rad * std::sin(th);
    const double kx = cx + rad * std::cos(th);
    // fixed per-coil linear phase ramp
    const double gy = 0.3 * std::sin(th + 0.7);
    const double gx = 0.3 * std::cos(th + 0.7);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const double dy = static_cast<double>(y) - ky;
        const double dx = static_cast<double>(x) - kx;
        const double mag = std::exp(-(dy * dy + dx * dx) / (2.0 * width * width));
        const double phi = gy * static_cast<double>(y) / static_cast<double>(H) +
                           gx * static_cast<double>(x) / static_cast<double>(W);
        const std::size_t idx = cs.maps.at3(i, y, x);
        cs.maps.real[idx] = mag * std::cos(phi);
        cs.maps.imag[idx] = mag * std::sin(phi);
      }
  }
  // joint per-pixel normalization
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      double ss = 0.0;
      for (std::size_t i = 0; i < c; ++i) {
        const std::size_t idx = cs.maps.at3(i, y, x);
        ss += cs.maps.real[idx] * cs.maps.real[idx] + cs.maps.imag[idx] * cs.maps.imag[idx];
      }
      const double inv = 1.0 / std::sqrt(ss);
      for (std::size_t i = 0; i < c; ++i) {
        const std::size_t idx = cs.maps.at3(i, y, x);
        cs.maps.real[idx] *= inv;
        cs.maps.imag[idx] *= inv;
      }
    }
  return cs;
}

// Synthetic complex phantom: sum of rotated ellipses with random geometry and
// intensities in [0.1,1], a smooth linear phase ramp, magnitude normalized to
// max 1. Stand-in object for desk-scale experiments.
inline ComplexTensor make_phantom(std::size_t H, std::size_t W, std::size_t n_ellipses,
                                  std::uint64_t seed) {
  if (n_ellipses < 1) throw Error("make_phantom: n_ellipses must be >= 1");
  Rng rng(seed);
  std::vector<double> mag(H * W, 0.0);
  const double mn = static_cast<double>(std::min(H, W));
  for (std::size_t e = 0; e < n_ellipses; ++e) {
    const double ecy = rng.uniform(0.25, 0.75) * static_cast<double>(H);
    const double ecx = rng.uniform(0.25, 0.75) * static_cast<double>(W);
    const double a = rng.uniform(0.08, 0.4) * mn;
    const double b = rng.uniform(0.08, 0.4) * mn;
    const double th = rng.uniform(0.0, M_PI);
    const double inten = rng.uniform(0.1, 1.0);
    const double ct = std::cos(th), st = std::sin(th);
    for (std::size_t y = 0; y < H; ++y)
      for (std::size_t x = 0; x < W; ++x) {
        const double dy = static_cast<double>(y) - ecy;
        const double dx = static_cast<double>(x) - ecx;
        const double u = (dx * ct + dy * st) / a;
        const double v = (-dx * st + dy * ct) / b;
        if (u * u + v * v <= 1.0) mag[y * W + x] += inten;
      }
  }
  double mx = 0.0;
  for (double v : mag) mx = std::max(mx, v);
  if (mx > 0.0)
    for (double& v : mag) v /= mx;
  const double phi0 = rng.uniform(-M_PI, M_PI);
  const double gy = rng.uniform(-2.0, 2.0);
  const double gx = rng.uniform(-2.0, 2.0);
  ComplexTensor out = ComplexTensor::zeros({1, H, W});
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      const double phi = phi0 + gy * static_cast<double>(y) / static_cast<double>(H) +
                         gx * static_cast<double>(x) / static_cast<double>(W);
      const std::size_t i = y * W + x;
      out.real[i] = mag[i] * std::cos(phi);
      out.imag[i] = mag[i] * std::sin(phi);
    }
  return out;
}

// Per-coil measured k-space plus the shared sampling mask; unsampled entries
// are zero.
struct KSpaceAcquisition {
  ComplexTensor y;  // [c,H,W]
  SamplingMask mask;
  std::optional<ComplexTensor> fully_sampled_reference;  // [c,H,W] k-space
};

// S_i .* x per coil: the multi-channel ground truth image.
inline ComplexTensor coil_images(const ComplexTensor& x, const CoilSet& coils) {
  if (x.ndim() != 3 || x.dim(0) != 1)
    throw ShapeError("coil_images: image must be [1,H,W], got " + shape_str(x.shape));
  const std::size_t H = x.dim(1), W = x.dim(2);
  if (coils.maps.dim(1) != H || coils.maps.dim(2) != W)
    throw ShapeError("coil_images: coil maps " + shape_str(coils.maps.shape) +
                     " do not match image " + shape_str(x.shape));
  const std::size_t c = coils.count();
  ComplexTensor out = ComplexTensor::zeros({c, H, W});
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t p = 0; p < H * W; ++p) {
      const std::size_t idx = i * H * W + p;
      out.real[idx] = coils.maps.real[idx] * x.real[p] - coils.maps.imag[idx] * x.imag[p];
      out.imag[idx] = coils.maps.real[idx] * x.imag[p] + coils.maps.imag[idx] * x.real[p];
    }
  return out;
}

// y_i = mask .* fft2(S_i .* x) per coil.
inline KSpaceAcquisition forward_model(const ComplexTensor& x, const CoilSet& coils,
                                       const SamplingMask& mask, bool keep_reference = false) {
  const ComplexTensor coil_imgs = coil_images(x, coils);
  const std::size_t H = x.dim(1), W = x.dim(2);
  if (mask.h != H || mask.w != W)
    throw ShapeError("forward_model: mask size mismatch");
  const std::size_t c = coils.count();
  ComplexTensor full_k = fft2(coil_imgs);
  KSpaceAcquisition acq;
  acq.mask = mask;
  acq.y = ComplexTensor::zeros({c, H, W});
  for (std::size_t i = 0; i < c; ++i)
    for (std::size_t p = 0; p < H * W; ++p) {
      if (!mask.grid[p]) continue;
      acq.y.real[i * H * W + p] = full_k.real[i * H * W + p];
      acq.y.imag[i * H * W + p] = full_k.imag[i * H * W + p];
    }
  if (keep_reference) acq.fully_sampled_reference = std::move(full_k);
  return acq;
}

// Per-coil inverse FFT of the zero-filled k-space; the network input.
inline ComplexTensor zero_filled(const KSpaceAcquisition& acq) { return ifft2(acq.y); }

// Hard data consistency: k = fft2(x); k <- y at sampled locations; ifft2(k).
// Idempotent projection; fixes sampled frequencies exactly.
inline ComplexTensor data_fidelity(const ComplexTensor& x, const KSpaceAcquisition& acq) {
  if (!x.same_shape(acq.y))
    throw ShapeError("data_fidelity: x " + shape_str(x.shape) + " vs y " + shape_str(acq.y.shape));
  ComplexTensor k = fft2(x);
  const std::size_t plane = acq.mask.h * acq.mask.w;
  for (std::size_t i = 0; i < k.numel(); ++i) {
    if (!acq.mask.grid[i % plane]) continue;
    k.real[i] = acq.y.real[i];
    k.imag[i] = acq.y.imag[i];
  }
  return ifft2(k);
}

// Root-sum-of-squares coil combination: sqrt(sum_i |x_i|^2) per pixel.
inline ComplexTensor rss_combine(const ComplexTensor& x) {
  if (x.ndim() != 3) throw ShapeError("rss_combine expects [c,H,W], got " + shape_str(x.shape));
  const std::size_t c = x.dim(0), H = x.dim(1), W = x.dim(2);
  ComplexTensor out = ComplexTensor::zeros({1, H, W});
  for (std::size_t p = 0; p < H * W; ++p) {
    double ss = 0.0;
    for (std::size_t i = 0; i < c; ++i) {
      const std::size_t idx = i * H * W + p;
      ss += x.real[idx] * x.real[idx] + x.imag[idx] * x.imag[idx];
    }
    out.real[p] = std::sqrt(ss);
  }
  return out;
}

}  // namespace octmri

#endif  // OCTMRI_MRI_HPP_
