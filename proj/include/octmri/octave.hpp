#ifndef OCTMRI_OCTAVE_HPP_
#define OCTMRI_OCTAVE_HPP_

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "octmri/autodiff.hpp"
#include "octmri/rng.hpp"
#include "octmri/tensor.hpp"

namespace octmri {

// Channel split: c_low = round(alpha * c_total), c_high = c_total - c_low.
inline std::pair<std::size_t, std::size_t> split_channels(std::size_t c_total, double alpha) {
  if (alpha < 0.0 || alpha > 1.0)
    throw Error("alpha must be in [0,1], got " + std::to_string(alpha));
  auto c_low = static_cast<std::size_t>(std::llround(alpha * static_cast<double>(c_total)));
  if (c_low > c_total) c_low = c_total;
  return {c_total - c_low, c_low};
}

// Octave feature map: full-resolution high-frequency component plus
// half-resolution low-frequency component. Either may be absent
// (alpha = 0 drops low, alpha = 1 drops high).
struct OctFeature {
  std::optional<ComplexTensor> high;
  std::optional<ComplexTensor> low;
  double alpha = 0.0;

  void validate() const {
    if (!high && !low) throw ShapeError("OctFeature: at least one component must be present");
    if (high && low) {
      if (high->ndim() != 3 || low->ndim() != 3)
        throw ShapeError("OctFeature components must be [C,H,W]");
      if (low->dim(1) * 2 != high->dim(1) || low->dim(2) * 2 != high->dim(2))
        throw ShapeError("OctFeature: low spatial dims " + shape_str(low->shape) +
                         " must be exactly half of high " + shape_str(high->shape));
    }
  }
};

// The eight real-valued kernel groups {K_r, K_i} x {H->H, H->L, L->H, L->L},
// each [Cout_part, Cin_part, k, k]. Groups for absent paths are absent.
struct DualOctKernel {
  std::optional<ComplexTensor> kr_hh, kr_hl, kr_lh, kr_ll;
  std::optional<ComplexTensor> ki_hh, ki_hl, ki_lh, ki_ll;

  // Fixed enumeration order for serialization and optimizer state alignment.
  template <typename Fn>
  void for_each_group(Fn&& fn) {
    if (kr_hh) fn("kr_hh", *kr_hh);
    if (kr_hl) fn("kr_hl", *kr_hl);
    if (kr_lh) fn("kr_lh", *kr_lh);
    if (kr_ll) fn("kr_ll", *kr_ll);
    if (ki_hh) fn("ki_hh", *ki_hh);
    if (ki_hl) fn("ki_hl", *ki_hl);
    if (ki_lh) fn("ki_lh", *ki_lh);
    if (ki_ll) fn("ki_ll", *ki_ll);
  }

  template <typename Fn>
  void for_each_group(Fn&& fn) const {
    const_cast<DualOctKernel*>(this)->for_each_group(
        [&](const char* name, ComplexTensor& t) { fn(name, static_cast<const ComplexTensor&>(t)); });
  }

  void validate() const {
    auto check_pair = [](const std::optional<ComplexTensor>& r, const std::optional<ComplexTensor>& i,
                         const char* name) {
      if (r.has_value() != i.has_value())
        throw ShapeError(std::string("DualOctKernel: kr/ki presence mismatch for group ") + name);
      if (r && !r->same_shape(*i))
        throw ShapeError(std::string("DualOctKernel: kr/ki shape mismatch for group ") + name);
    };
    check_pair(kr_hh, ki_hh, "hh");
    check_pair(kr_hl, ki_hl, "hl");
    check_pair(kr_lh, ki_lh, "lh");
    check_pair(kr_ll, ki_ll, "ll");
    // partition consistency on output channels
    if (kr_hh && kr_lh && kr_hh->dim(0) != kr_lh->dim(0))
      throw ShapeError("DualOctKernel: hh/lh output channel mismatch");
    if (kr_hl && kr_ll && kr_hl->dim(0) != kr_ll->dim(0))
      throw ShapeError("DualOctKernel: hl/ll output channel mismatch");
    if (kr_hh && kr_hl && kr_hh->dim(1) != kr_hl->dim(1))
      throw ShapeError("DualOctKernel: hh/hl input channel mismatch");
    if (kr_lh && kr_ll && kr_lh->dim(1) != kr_ll->dim(1))
      throw ShapeError("DualOctKernel: lh/ll input channel mismatch");
  }
};

// Shape description of a dual-octave layer.
struct OctLayerSpec {
  std::size_t c_in = 0;
  std::size_t c_out = 0;
  double alpha_in = 0.0;
  double alpha_out = 0.0;
  std::size_t kernel_size = 3;
};

// Complex parameter initialization: per weight, magnitude rho ~ Rayleigh(sigma)
// with sigma = 1/sqrt(fan_in), fan_in = Cin_part * k^2, phase ~ Uniform(-pi,pi);
// kr = rho cos(phi), ki = rho sin(phi). Deterministic given the seed.
inline DualOctKernel init_dual_oct_kernel(const OctLayerSpec& spec, std::uint64_t seed) {
  auto [in_h, in_l] = split_channels(spec.c_in, spec.alpha_in);
  auto [out_h, out_l] = split_channels(spec.c_out, spec.alpha_out);
  Rng rng(seed);
  DualOctKernel k;
  auto make_group = [&](std::size_t coutp, std::size_t cinp) -> std::pair<ComplexTensor, ComplexTensor> {
    ComplexTensor kr = ComplexTensor::zeros({coutp, cinp, spec.kernel_size, spec.kernel_size});
    ComplexTensor ki = ComplexTensor::zeros(kr.shape);
    const double fan_in = static_cast<double>(cinp * spec.kernel_size * spec.kernel_size);
    const double sigma = 1.0 / std::sqrt(fan_in);
    for (std::size_t i = 0; i < kr.numel(); ++i) {
      const double rho = rng.rayleigh(sigma);
      const double phi = rng.uniform(-M_PI, M_PI);
      kr.real[i] = rho * std::cos(phi);
      ki.real[i] = rho * std::sin(phi);
    }
    return {std::move(kr), std::move(ki)};
  };
  if (out_h > 0 && in_h > 0) {
    auto [r, i] = make_group(out_h, in_h);
    k.kr_hh = std::move(r);
    k.ki_hh = std::move(i);
  }
  if (out_l > 0 && in_h > 0) {
    auto [r, i] = make_group(out_l, in_h);
    k.kr_hl = std::move(r);
    k.ki_hl = std::move(i);
  }
  if (out_h > 0 && in_l > 0) {
    auto [r, i] = make_group(out_h, in_l);
    k.kr_lh = std::move(r);
    k.ki_lh = std::move(i);
  }
  if (out_l > 0 && in_l > 0) {
    auto [r, i] = make_group(out_l, in_l);
    k.kr_ll = std::move(r);
    k.ki_ll = std::move(i);
  }
  return k;
}

// Single-complex-part octave routing over real planes:
//   high_out = conv(high, k_hh) + upsample2(conv(low, k_lh))
//   low_out  = conv(low,  k_ll) + conv(avg_pool2(high), k_hl)
// Absent paths contribute zero.
inline std::pair<std::optional<ComplexTensor>, std::optional<ComplexTensor>> octave_conv_real(
    const std::optional<ComplexTensor>& high, const std::optional<ComplexTensor>& low,
    const std::optional<ComplexTensor>& k_hh, const std::optional<ComplexTensor>& k_hl,
    const std::optional<ComplexTensor>& k_lh, const std::optional<ComplexTensor>& k_ll,
    const ConvSpec& spec) {
  if ((k_hh || k_hl) && !high) throw ShapeError("octave_conv_real: kernel expects high input, absent");
  if ((k_lh || k_ll) && !low) throw ShapeError("octave_conv_real: kernel expects low input, absent");
  if (high && (k_hl || k_ll) && (high->dim(1) % 2 != 0 || high->dim(2) % 2 != 0))
    throw ShapeError("octave_conv_real: odd spatial dims with low path requested: " +
                     shape_str(high->shape));
  std::optional<ComplexTensor> high_out, low_out;
  if (k_hh) high_out = conv2d_real(*high, *k_hh, spec);
  if (k_lh) {
    ComplexTensor t = upsample2_nearest(conv2d_real(*low, *k_lh, spec));
    high_out = high_out ? add(*high_out, t) : std::move(t);
  }
  if (k_ll) low_out = conv2d_real(*low, *k_ll, spec);
  if (k_hl) {
    ComplexTensor t = conv2d_real(avg_pool2(*high), *k_hl, spec);
    low_out = low_out ? add(*low_out, t) : std::move(t);
  }
  return {std::move(high_out), std::move(low_out)};
}

// Tape-side octave feature / kernel handles.
struct OctNodes {
  std::optional<NodeId> high;
  std::optional<NodeId> low;
};

struct DualOctKernelNodes {
  std::optional<NodeId> kr_hh, kr_hl, kr_lh, kr_ll;
  std::optional<NodeId> ki_hh, ki_hl, ki_lh, ki_ll;
};

inline DualOctKernelNodes kernel_leaves(Graph& g, const DualOctKernel& k) {
  DualOctKernelNodes n;
  auto put = [&](const std::optional<ComplexTensor>& t, std::optional<NodeId>& id) {
    if (t) id = g.leaf(*t, "kernel");
  };
  put(k.kr_hh, n.kr_hh);
  put(k.kr_hl, n.kr_hl);
  put(k.kr_lh, n.kr_lh);
  put(k.kr_ll, n.kr_ll);
  put(k.ki_hh, n.ki_hh);
  put(k.ki_hl, n.ki_hl);
  put(k.ki_lh, n.ki_lh);
  put(k.ki_ll, n.ki_ll);
  return n;
}

// Dual-octave complex convolution on the tape. Each routing path is one
// complex convolution; pooling and upsampling act on both planes, so the
// whole layer is complex-linear and reduces to complex_conv2d at alpha = 0.
inline OctNodes dual_octconv(Graph& g, const OctNodes& x, const DualOctKernelNodes& k,
                             const ConvSpec& spec) {
  if ((k.kr_hh || k.kr_hl) && !x.high)
    throw ShapeError("dual_octconv: kernel expects high input, absent");
  if ((k.kr_lh || k.kr_ll) && !x.low)
    throw ShapeError("dual_octconv: kernel expects low input, absent");
  if (x.high && !(k.kr_hh || k.kr_hl))
    throw ShapeError("dual_octconv: high input present but no consuming kernel group");
  if (x.low && !(k.kr_lh || k.kr_ll))
    throw ShapeError("dual_octconv: low input present but no consuming kernel group");
  if (x.high && (k.kr_hl || k.kr_ll)) {
    const ComplexTensor& hv = g.value(*x.high);
    if (hv.dim(1) % 2 != 0 || hv.dim(2) % 2 != 0)
      throw ShapeError("dual_octconv: odd spatial dims with low path requested: " +
                       shape_str(hv.shape));
  }
  OctNodes out;
  if (k.kr_hh) out.high = g.complex_conv2d(*x.high, *k.kr_hh, *k.ki_hh, spec);
  if (k.kr_lh) {
    NodeId t = g.upsample2_nearest(g.complex_conv2d(*x.low, *k.kr_lh, *k.ki_lh, spec));
    out.high = out.high ? g.add(*out.high, t) : t;
  }
  if (k.kr_ll) out.low = g.complex_conv2d(*x.low, *k.kr_ll, *k.ki_ll, spec);
  if (k.kr_hl) {
    NodeId t = g.complex_conv2d(g.avg_pool2(*x.high), *k.kr_hl, *k.ki_hl, spec);
    out.low = out.low ? g.add(*out.low, t) : t;
  }
  return out;
}

// Value-level dual-octave convolution (forward only, same code path as the
// tape version).
inline OctFeature dual_octconv(const OctFeature& x, const DualOctKernel& k, const ConvSpec& spec,
                               double alpha_out) {
  x.validate();
  k.validate();
  Graph g;
  OctNodes xn;
  if (x.high) xn.high = g.leaf(*x.high);
  if (x.low) xn.low = g.leaf(*x.low);
  OctNodes yn = dual_octconv(g, xn, kernel_leaves(g, k), spec);
  OctFeature y;
  y.alpha = alpha_out;
  if (yn.high) y.high = g.value(*yn.high);
  if (yn.low) y.low = g.value(*yn.low);
  y.validate();
  return y;
}

// Entry layer: input alpha = 0, output alpha > 0. The low branch is created
// from the pooled high input (k_hl); the high branch from k_hh.
inline OctFeature entry_layer(const ComplexTensor& x, const DualOctKernel& k, const ConvSpec& spec,
                              double alpha_out) {
  if (k.kr_lh || k.kr_ll)
    throw ShapeError("entry_layer: kernel must not contain L-input groups");
  OctFeature in;
  in.high = x;
  in.alpha = 0.0;
  return dual_octconv(in, k, spec, alpha_out);
}

// Exit layer: input alpha > 0, output alpha = 0. Low is merged back into the
// full-resolution output: high_out = conv(high,k_hh) + upsample2(conv(low,k_lh)).
inline OctFeature exit_layer(const OctFeature& x, const DualOctKernel& k, const ConvSpec& spec) {
  if (k.kr_hl || k.kr_ll)
    throw ShapeError("exit_layer: kernel must not contain L-output groups");
  return dual_octconv(x, k, spec, 0.0);
}

namespace octave_gradcheck {

inline bool register_all() {
  register_grad_check("dual_octconv", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    // c=4, alpha=0.25 -> 3 high + 1 low channel, 4x4 high resolution
    cs.leaves = {random_tensor({3, 4, 4}, rng), random_tensor({1, 2, 2}, rng),
                 random_tensor({3, 3, 3, 3}, rng), random_tensor({1, 3, 3, 3}, rng),
                 random_tensor({3, 1, 3, 3}, rng), random_tensor({1, 1, 3, 3}, rng),
                 random_tensor({3, 3, 3, 3}, rng), random_tensor({1, 3, 3, 3}, rng),
                 random_tensor({3, 1, 3, 3}, rng), random_tensor({1, 1, 3, 3}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) {
      OctNodes x{in[0], in[1]};
      DualOctKernelNodes k;
      k.kr_hh = in[2];
      k.kr_hl = in[3];
      k.kr_lh = in[4];
      k.kr_ll = in[5];
      k.ki_hh = in[6];
      k.ki_hl = in[7];
      k.ki_lh = in[8];
      k.ki_ll = in[9];
      OctNodes y = dual_octconv(g, x, k, ConvSpec(3));
      return g.add(g.sum(*y.high), g.sum(*y.low));
    };
    return cs;
  });
  return true;
}

inline const bool registered = register_all();

}  // namespace octave_gradcheck

}  // namespace octmri

#endif  // OCTMRI_OCTAVE_HPP_
