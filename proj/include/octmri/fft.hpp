#ifndef OCTMRI_FFT_HPP_
#define OCTMRI_FFT_HPP_

#include <cmath>
#include <complex>
#include <vector>

#include "octmri/tensor.hpp"

namespace octmri {

namespace fft_detail {

inline bool is_pow2(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

// In-place radix-2 Cooley-Tukey, no normalization. inverse=true conjugates
// the twiddles.
inline void fft1d_pow2(std::complex<double>* a, std::size_t n, bool inverse) {
  // bit reversal
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u = a[i + j];
        const std::complex<double> v = a[i + j + len / 2] * w;
        a[i + j] = u + v;
        a[i + j + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

// Direct O(n^2) DFT, no normalization.
inline void dft1d_direct(std::complex<double>* a, std::size_t n, bool inverse) {
  std::vector<std::complex<double>> out(n);
  const double s = inverse ? 2.0 : -2.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
      const double ang = s * M_PI * static_cast<double>(k * j % n) / static_cast<double>(n);
      acc += a[j] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  for (std::size_t k = 0; k < n; ++k) a[k] = out[k];
}

inline void fft1d(std::complex<double>* a, std::size_t n, bool inverse) {
  if (n == 1) return;
  if (is_pow2(n))
    fft1d_pow2(a, n, inverse);
  else
    dft1d_direct(a, n, inverse);
}

// Unitary 2-D transform over the trailing [H,W] axes of a [...,H,W] tensor.
inline ComplexTensor transform2(const ComplexTensor& x, bool inverse) {
  if (x.ndim() < 2) throw ShapeError("fft2 expects at least 2 dims, got " + shape_str(x.shape));
  const std::size_t h = x.shape[x.ndim() - 2];
  const std::size_t w = x.shape[x.ndim() - 1];
  std::size_t lead = 1;
  for (std::size_t i = 0; i + 2 < x.ndim(); ++i) lead *= x.shape[i];

  ComplexTensor out = ComplexTensor::zeros(x.shape);
  const double norm = 1.0 / std::sqrt(static_cast<double>(h) * static_cast<double>(w));
  std::vector<std::complex<double>> row(w), col(h);
  std::vector<std::complex<double>> plane(h * w);

  for (std::size_t c = 0; c < lead; ++c) {
    const std::size_t base = c * h * w;
    for (std::size_t i = 0; i < h * w; ++i)
      plane[i] = std::complex<double>(x.real[base + i], x.imag[base + i]);
    for (std::size_t y = 0; y < h; ++y) fft1d(plane.data() + y * w, w, inverse);
    for (std::size_t xx = 0; xx < w; ++xx) {
      for (std::size_t y = 0; y < h; ++y) col[y] = plane[y * w + xx];
      fft1d(col.data(), h, inverse);
      for (std::size_t y = 0; y < h; ++y) plane[y * w + xx] = col[y];
    }
    for (std::size_t i = 0; i < h * w; ++i) {
      out.real[base + i] = plane[i].real() * norm;
      out.imag[base + i] = plane[i].imag() * norm;
    }
  }
  return out;
}

}  // namespace fft_detail

// Unitary (orthonormal) 2-D DFT over the last two axes.
inline ComplexTensor fft2(const ComplexTensor& x) { return fft_detail::transform2(x, false); }

// Unitary 2-D inverse DFT; exact inverse of fft2 up to rounding.
inline ComplexTensor ifft2(const ComplexTensor& x) { return fft_detail::transform2(x, true); }

}  // namespace octmri

#endif  // OCTMRI_FFT_HPP_
