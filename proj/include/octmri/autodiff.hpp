#ifndef OCTMRI_AUTODIFF_HPP_
#define OCTMRI_AUTODIFF_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "octmri/fft.hpp"
#include "octmri/rng.hpp"
#include "octmri/tensor.hpp"

namespace octmri {

using NodeId = std::size_t;

// Gradient of a scalar loss w.r.t. each node's output; real and imaginary
// planes are treated as independent real variables (split-complex backprop).
struct GradientMap {
  std::unordered_map<NodeId, ComplexTensor> grads;

  bool has(NodeId id) const { return grads.count(id) != 0; }
  const ComplexTensor& at(NodeId id) const {
    auto it = grads.find(id);
    if (it == grads.end()) throw Error("GradientMap: no gradient for node " + std::to_string(id));
    return it->second;
  }
};

// Dynamic tape: append-only list of nodes recording forward ops. Acyclic by
// construction (inputs precede outputs). Rebuilt per forward pass.
class Graph {
 public:
  struct Node {
    const char* op;
    std::vector<NodeId> inputs;
    ComplexTensor value;
    // accumulates input gradients given the gradient of this node's output
    std::function<void(Graph&, const ComplexTensor&, std::vector<ComplexTensor>&, std::vector<char>&)> backward;
  };

  std::size_t size() const { return nodes_.size(); }

  const ComplexTensor& value(NodeId id) const { return node(id).value; }

  const Node& node(NodeId id) const {
    if (id >= nodes_.size()) throw Error("Graph: unknown node id " + std::to_string(id));
    return nodes_[id];
  }

  NodeId leaf(ComplexTensor v, const char* tag = "leaf") {
    return push({tag, {}, std::move(v), nullptr});
  }

  NodeId conv2d_real(NodeId x, NodeId k, ConvSpec spec) {
    ComplexTensor out = octmri::conv2d_real(value(x), value(k), spec);
    Node n{"conv2d_real", {x, k}, std::move(out), nullptr};
    n.backward = [x, k, spec](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                              std::vector<char>& tc) {
      const ComplexTensor& xv = g.value(x);
      const ComplexTensor& kv = g.value(k);
      const std::size_t h = xv.dim(1), w = xv.dim(2), ks = spec.kernel_size;
      const long pad = static_cast<long>(spec.padding());
      ComplexTensor gx = ComplexTensor::zeros(xv.shape);
      ComplexTensor gk = ComplexTensor::zeros(kv.shape);
      detail::conv_plane_back_input(go.real.data(), kv.dim(0), h, w, kv.real.data(), kv.dim(1),
                                    ks, ks, pad, 1.0, gx.real.data());
      detail::conv_plane_back_kernel(xv.real.data(), kv.dim(1), h, w, go.real.data(), kv.dim(0),
                                     ks, ks, pad, 1.0, gk.real.data());
      g.accum(gr, tc, x, gx);
      g.accum(gr, tc, k, gk);
    };
    return push(std::move(n));
  }

  NodeId complex_conv2d(NodeId x, NodeId kr, NodeId ki, ConvSpec spec) {
    ComplexTensor out = octmri::complex_conv2d(value(x), value(kr), value(ki), spec);
    Node n{"complex_conv2d", {x, kr, ki}, std::move(out), nullptr};
    n.backward = [x, kr, ki, spec](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                                   std::vector<char>& tc) {
      const ComplexTensor& xv = g.value(x);
      const ComplexTensor& krv = g.value(kr);
      const ComplexTensor& kiv = g.value(ki);
      const std::size_t h = xv.dim(1), w = xv.dim(2), ks = spec.kernel_size;
      const std::size_t cout = krv.dim(0), cin = krv.dim(1);
      const long pad = static_cast<long>(spec.padding());
      ComplexTensor gx = ComplexTensor::zeros(xv.shape);
      ComplexTensor gkr = ComplexTensor::zeros(krv.shape);
      ComplexTensor gki = ComplexTensor::zeros(kiv.shape);
      // y_r = kr*x_r - ki*x_i ; y_i = kr*x_i + ki*x_r
      detail::conv_plane_back_input(go.real.data(), cout, h, w, krv.real.data(), cin, ks, ks, pad, 1.0, gx.real.data());
      detail::conv_plane_back_input(go.imag.data(), cout, h, w, kiv.real.data(), cin, ks, ks, pad, 1.0, gx.real.data());
      detail::conv_plane_back_input(go.real.data(), cout, h, w, kiv.real.data(), cin, ks, ks, pad, -1.0, gx.imag.data());
      detail::conv_plane_back_input(go.imag.data(), cout, h, w, krv.real.data(), cin, ks, ks, pad, 1.0, gx.imag.data());
      detail::conv_plane_back_kernel(xv.real.data(), cin, h, w, go.real.data(), cout, ks, ks, pad, 1.0, gkr.real.data());
      detail::conv_plane_back_kernel(xv.imag.data(), cin, h, w, go.imag.data(), cout, ks, ks, pad, 1.0, gkr.real.data());
      detail::conv_plane_back_kernel(xv.imag.data(), cin, h, w, go.real.data(), cout, ks, ks, pad, -1.0, gki.real.data());
      detail::conv_plane_back_kernel(xv.real.data(), cin, h, w, go.imag.data(), cout, ks, ks, pad, 1.0, gki.real.data());
      g.accum(gr, tc, x, gx);
      g.accum(gr, tc, kr, gkr);
      g.accum(gr, tc, ki, gki);
    };
    return push(std::move(n));
  }

  NodeId avg_pool2(NodeId x) {
    ComplexTensor out = octmri::avg_pool2(value(x));
    Node n{"avg_pool2", {x}, std::move(out), nullptr};
    n.backward = [x](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                     std::vector<char>& tc) {
      const ComplexTensor& xv = g.value(x);
      ComplexTensor gx = ComplexTensor::zeros(xv.shape);
      const std::size_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < h; ++y)
          for (std::size_t xx = 0; xx < w; ++xx) {
            const std::size_t o = (ci * (h / 2) + y / 2) * (w / 2) + xx / 2;
            gx.real[gx.at3(ci, y, xx)] = 0.25 * go.real[o];
            gx.imag[gx.at3(ci, y, xx)] = 0.25 * go.imag[o];
          }
      g.accum(gr, tc, x, gx);
    };
    return push(std::move(n));
  }

  NodeId upsample2_nearest(NodeId x) {
    ComplexTensor out = octmri::upsample2_nearest(value(x));
    Node n{"upsample2_nearest", {x}, std::move(out), nullptr};
    n.backward = [x](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                     std::vector<char>& tc) {
      const ComplexTensor& xv = g.value(x);
      ComplexTensor gx = ComplexTensor::zeros(xv.shape);
      const std::size_t c = xv.dim(0), h = xv.dim(1), w = xv.dim(2);
      for (std::size_t ci = 0; ci < c; ++ci)
        for (std::size_t y = 0; y < 2 * h; ++y)
          for (std::size_t xx = 0; xx < 2 * w; ++xx) {
            const std::size_t i = gx.at3(ci, y / 2, xx / 2);
            const std::size_t o = (ci * 2 * h + y) * 2 * w + xx;
            gx.real[i] += go.real[o];
            gx.imag[i] += go.imag[o];
          }
      g.accum(gr, tc, x, gx);
    };
    return push(std::move(n));
  }

  NodeId crelu(NodeId x) {
    ComplexTensor out = octmri::crelu(value(x));
    Node n{"crelu", {x}, std::move(out), nullptr};
    n.backward = [x](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                     std::vector<char>& tc) {
      const ComplexTensor& xv = g.value(x);
      ComplexTensor gx = ComplexTensor::zeros(xv.shape);
      for (std::size_t i = 0; i < xv.numel(); ++i) {
        gx.real[i] = xv.real[i] > 0.0 ? go.real[i] : 0.0;
        gx.imag[i] = xv.imag[i] > 0.0 ? go.imag[i] : 0.0;
      }
      g.accum(gr, tc, x, gx);
    };
    return push(std::move(n));
  }

  NodeId add(NodeId a, NodeId b) {
    ComplexTensor out = octmri::add(value(a), value(b));
    Node n{"add", {a, b}, std::move(out), nullptr};
    n.backward = [a, b](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                        std::vector<char>& tc) {
      g.accum(gr, tc, a, go);
      g.accum(gr, tc, b, go);
    };
    return push(std::move(n));
  }

  NodeId subtract(NodeId a, NodeId b) {
    ComplexTensor out = octmri::subtract(value(a), value(b));
    Node n{"subtract", {a, b}, std::move(out), nullptr};
    n.backward = [a, b](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                        std::vector<char>& tc) {
      g.accum(gr, tc, a, go);
      g.accum(gr, tc, b, octmri::scale(go, -1.0));
    };
    return push(std::move(n));
  }

  NodeId scale(NodeId a, double s) {
    ComplexTensor out = octmri::scale(value(a), s);
    Node n{"scale", {a}, std::move(out), nullptr};
    n.backward = [a, s](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                        std::vector<char>& tc) { g.accum(gr, tc, a, octmri::scale(go, s)); };
    return push(std::move(n));
  }

  NodeId concat_channels(std::vector<NodeId> parts) {
    std::vector<ComplexTensor> vals;
    vals.reserve(parts.size());
    for (NodeId p : parts) vals.push_back(value(p));
    ComplexTensor out = octmri::concat_channels(vals);
    Node n{"concat_channels", parts, std::move(out), nullptr};
    n.backward = [parts](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                         std::vector<char>& tc) {
      std::size_t off = 0;
      for (NodeId p : parts) {
        const ComplexTensor& pv = g.value(p);
        ComplexTensor gp = ComplexTensor::zeros(pv.shape);
        std::copy(go.real.begin() + static_cast<long>(off),
                  go.real.begin() + static_cast<long>(off + pv.numel()), gp.real.begin());
        std::copy(go.imag.begin() + static_cast<long>(off),
                  go.imag.begin() + static_cast<long>(off + pv.numel()), gp.imag.begin());
        off += pv.numel();
        g.accum(gr, tc, p, gp);
      }
    };
    return push(std::move(n));
  }

  NodeId fft2(NodeId x) {
    ComplexTensor out = octmri::fft2(value(x));
    Node n{"fft2", {x}, std::move(out), nullptr};
    // unitary transform: adjoint = inverse
    n.backward = [x](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                     std::vector<char>& tc) { g.accum(gr, tc, x, octmri::ifft2(go)); };
    return push(std::move(n));
  }

  NodeId ifft2(NodeId x) {
    ComplexTensor out = octmri::ifft2(value(x));
    Node n{"ifft2", {x}, std::move(out), nullptr};
    n.backward = [x](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                     std::vector<char>& tc) { g.accum(gr, tc, x, octmri::fft2(go)); };
    return push(std::move(n));
  }

  // Hard k-space data replacement: out[c] = (1-m) .* k[c] + m .* y[c].
  // mask is a real [H,W] plane of 0/1; y is constant w.r.t. differentiation,
  // so gradients pass through unsampled frequencies only.
  NodeId kspace_replace(NodeId k, ComplexTensor mask, ComplexTensor y) {
    const ComplexTensor& kv = value(k);
    if (!kv.same_shape(y))
      throw ShapeError("kspace_replace: k " + shape_str(kv.shape) + " vs y " + shape_str(y.shape));
    if (mask.ndim() != 2 || mask.dim(0) != kv.dim(kv.ndim() - 2) || mask.dim(1) != kv.dim(kv.ndim() - 1))
      throw ShapeError("kspace_replace: mask " + shape_str(mask.shape) + " vs k " + shape_str(kv.shape));
    const std::size_t plane = mask.numel();
    ComplexTensor out = ComplexTensor::zeros(kv.shape);
    for (std::size_t i = 0; i < kv.numel(); ++i) {
      const double m = mask.real[i % plane];
      out.real[i] = (1.0 - m) * kv.real[i] + m * y.real[i];
      out.imag[i] = (1.0 - m) * kv.imag[i] + m * y.imag[i];
    }
    Node n{"kspace_replace", {k}, std::move(out), nullptr};
    n.backward = [k, mask = std::move(mask), plane](Graph& g, const ComplexTensor& go,
                                                    std::vector<ComplexTensor>& gr,
                                                    std::vector<char>& tc) {
      ComplexTensor gk = ComplexTensor::zeros(go.shape);
      for (std::size_t i = 0; i < go.numel(); ++i) {
        const double m = mask.real[i % plane];
        gk.real[i] = (1.0 - m) * go.real[i];
        gk.imag[i] = (1.0 - m) * go.imag[i];
      }
      g.accum(gr, tc, k, gk);
    };
    return push(std::move(n));
  }

  // Scalar sum of both planes.
  NodeId sum(NodeId x) {
    const ComplexTensor& xv = value(x);
    ComplexTensor out = ComplexTensor::zeros({1});
    for (double v : xv.real) out.real[0] += v;
    for (double v : xv.imag) out.real[0] += v;
    Node n{"sum", {x}, std::move(out), nullptr};
    n.backward = [x](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                     std::vector<char>& tc) {
      const ComplexTensor& xv = g.value(x);
      ComplexTensor gx = ComplexTensor::zeros(xv.shape);
      for (double& v : gx.real) v = go.real[0];
      for (double& v : gx.imag) v = go.real[0];
      g.accum(gr, tc, x, gx);
    };
    return push(std::move(n));
  }

  // Scalar sum of the real plane only.
  NodeId sum_real(NodeId x) {
    const ComplexTensor& xv = value(x);
    ComplexTensor out = ComplexTensor::zeros({1});
    for (double v : xv.real) out.real[0] += v;
    Node n{"sum_real", {x}, std::move(out), nullptr};
    n.backward = [x](Graph& g, const ComplexTensor& go, std::vector<ComplexTensor>& gr,
                     std::vector<char>& tc) {
      const ComplexTensor& xv = g.value(x);
      ComplexTensor gx = ComplexTensor::zeros(xv.shape);
      for (double& v : gx.real) v = go.real[0];
      g.accum(gr, tc, x, gx);
    };
    return push(std::move(n));
  }

  // factor * sum(|pred_r - t_r| + |pred_i - t_i|); subgradient 0 at exact zeros.
  NodeId l1(NodeId pred, ComplexTensor target, double factor = 1.0) {
    const ComplexTensor& pv = value(pred);
    if (!pv.same_shape(target))
      throw ShapeError("l1: pred " + shape_str(pv.shape) + " vs target " + shape_str(target.shape));
    ComplexTensor out = ComplexTensor::zeros({1});
    for (std::size_t i = 0; i < pv.numel(); ++i)
      out.real[0] += std::abs(pv.real[i] - target.real[i]) + std::abs(pv.imag[i] - target.imag[i]);
    out.real[0] *= factor;
    Node n{"l1", {pred}, std::move(out), nullptr};
    n.backward = [pred, target = std::move(target), factor](Graph& g, const ComplexTensor& go,
                                                            std::vector<ComplexTensor>& gr,
                                                            std::vector<char>& tc) {
      const ComplexTensor& pv = g.value(pred);
      ComplexTensor gp = ComplexTensor::zeros(pv.shape);
      const double s = factor * go.real[0];
      auto sgn = [](double d) { return d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0); };
      for (std::size_t i = 0; i < pv.numel(); ++i) {
        gp.real[i] = s * sgn(pv.real[i] - target.real[i]);
        gp.imag[i] = s * sgn(pv.imag[i] - target.imag[i]);
      }
      g.accum(gr, tc, pred, gp);
    };
    return push(std::move(n));
  }

  // Reverse sweep from a scalar loss node. Nodes consumed by several
  // downstream ops receive the sum of all contributions.
  GradientMap backward(NodeId loss) {
    if (loss >= nodes_.size()) throw Error("backward: unknown node id " + std::to_string(loss));
    const ComplexTensor& lv = nodes_[loss].value;
    if (lv.numel() != 1)
      throw Error("backward: loss node must be scalar, got shape " + shape_str(lv.shape));
    std::vector<ComplexTensor> grads(nodes_.size());
    std::vector<char> touched(nodes_.size(), 0);
    ComplexTensor seed = ComplexTensor::zeros(lv.shape);
    seed.real[0] = 1.0;
    grads[loss] = std::move(seed);
    touched[loss] = 1;
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (!touched[i] || !nodes_[i].backward) continue;
      nodes_[i].backward(*this, grads[i], grads, touched);
    }
    GradientMap out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
      if (touched[i]) out.grads.emplace(i, std::move(grads[i]));
    return out;
  }

  void accum(std::vector<ComplexTensor>& grads, std::vector<char>& touched, NodeId id,
             const ComplexTensor& delta) {
    if (!touched[id]) {
      grads[id] = delta;
      touched[id] = 1;
    } else {
      grads[id] = octmri::add(grads[id], delta);
    }
  }

 private:
  NodeId push(Node n) {
    nodes_.push_back(std::move(n));
    return nodes_.size() - 1;
  }

  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------
// Finite-difference gradient verification

struct GradCheckCase {
  std::vector<ComplexTensor> leaves;
  // builds the op under test; returns its output node
  std::function<NodeId(Graph&, const std::vector<NodeId>&)> build;
};

inline ComplexTensor random_tensor(Shape s, Rng& rng, double lo = 0.1, double hi = 1.0) {
  ComplexTensor t = ComplexTensor::zeros(std::move(s));
  for (double& v : t.real) v = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(lo, hi);
  for (double& v : t.imag) v = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform(lo, hi);
  return t;
}

// Central finite differences (eps = 1e-5) against the analytic backward pass
// over every coordinate of every leaf, both planes. Returns the worst
// relative error.
inline double grad_check_case(const GradCheckCase& cs, double eps = 1e-5) {
  auto eval_loss = [&](const std::vector<ComplexTensor>& leaves) {
    Graph g;
    std::vector<NodeId> ids;
    ids.reserve(leaves.size());
    for (const auto& t : leaves) ids.push_back(g.leaf(t));
    NodeId out = cs.build(g, ids);
    NodeId loss = g.sum(out);
    return g.value(loss).real[0];
  };

  Graph g;
  std::vector<NodeId> ids;
  for (const auto& t : cs.leaves) ids.push_back(g.leaf(t));
  NodeId out = cs.build(g, ids);
  NodeId loss = g.sum(out);
  GradientMap gm = g.backward(loss);

  double worst = 0.0;
  std::vector<ComplexTensor> work = cs.leaves;
  for (std::size_t li = 0; li < work.size(); ++li) {
    const ComplexTensor* analytic = gm.has(ids[li]) ? &gm.at(ids[li]) : nullptr;
    for (int plane = 0; plane < 2; ++plane) {
      auto& vec = plane == 0 ? work[li].real : work[li].imag;
      for (std::size_t i = 0; i < vec.size(); ++i) {
        const double orig = vec[i];
        vec[i] = orig + eps;
        const double fp = eval_loss(work);
        vec[i] = orig - eps;
        const double fm = eval_loss(work);
        vec[i] = orig;
        const double numeric = (fp - fm) / (2.0 * eps);
        const double a = analytic ? (plane == 0 ? analytic->real[i] : analytic->imag[i]) : 0.0;
        const double rel = std::abs(a - numeric) / std::max(1.0, std::abs(a) + std::abs(numeric));
        worst = std::max(worst, rel);
      }
    }
  }
  return worst;
}

// Registry of named gradient-check cases so ops declared in later modules
// (e.g. the dual-octave layer) can hook in.
inline std::map<std::string, std::function<GradCheckCase(std::uint64_t)>>& grad_check_registry() {
  static std::map<std::string, std::function<GradCheckCase(std::uint64_t)>> reg;
  return reg;
}

inline bool register_grad_check(const std::string& name,
                                std::function<GradCheckCase(std::uint64_t)> maker) {
  grad_check_registry()[name] = std::move(maker);
  return true;
}

// Perturbs every input coordinate of the named op by +/-eps and returns the
// worst relative error between central differences and the analytic gradient.
inline double grad_check(const std::string& op_name, std::uint64_t seed, double eps = 1e-5) {
  auto it = grad_check_registry().find(op_name);
  if (it == grad_check_registry().end())
    throw Error("grad_check: op '" + op_name + "' is not registered");
  return grad_check_case(it->second(seed), eps);
}

namespace gradcheck_builtin {

inline bool register_all() {
  register_grad_check("conv2d_real", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 4, 4}, rng), random_tensor({2, 2, 3, 3}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) {
      return g.conv2d_real(in[0], in[1], ConvSpec(3));
    };
    return cs;
  });
  register_grad_check("complex_conv2d", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 4, 4}, rng), random_tensor({3, 2, 3, 3}, rng),
                 random_tensor({3, 2, 3, 3}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) {
      return g.complex_conv2d(in[0], in[1], in[2], ConvSpec(3));
    };
    return cs;
  });
  register_grad_check("avg_pool2", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 4, 6}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.avg_pool2(in[0]); };
    return cs;
  });
  register_grad_check("upsample2_nearest", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 3, 3}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.upsample2_nearest(in[0]); };
    return cs;
  });
  register_grad_check("crelu", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 4, 4}, rng)};  // values bounded away from the kink
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.crelu(in[0]); };
    return cs;
  });
  register_grad_check("add", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 3, 3}, rng), random_tensor({2, 3, 3}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.add(in[0], in[1]); };
    return cs;
  });
  register_grad_check("subtract", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 3, 3}, rng), random_tensor({2, 3, 3}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.subtract(in[0], in[1]); };
    return cs;
  });
  register_grad_check("scale", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 3, 3}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.scale(in[0], 0.73); };
    return cs;
  });
  register_grad_check("concat_channels", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 3, 3}, rng), random_tensor({1, 3, 3}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) {
      return g.concat_channels({in[0], in[1]});
    };
    return cs;
  });
  register_grad_check("fft2", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({1, 4, 4}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.fft2(in[0]); };
    return cs;
  });
  register_grad_check("fft2_direct", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({1, 3, 5}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.fft2(in[0]); };
    return cs;
  });
  register_grad_check("ifft2", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({1, 4, 4}, rng)};
    cs.build = [](Graph& g, const std::vector<NodeId>& in) { return g.ifft2(in[0]); };
    return cs;
  });
  register_grad_check("data_fidelity", [](std::uint64_t seed) {
    Rng rng(seed);
    GradCheckCase cs;
    cs.leaves = {random_tensor({2, 4, 4}, rng)};
    ComplexTensor mask = ComplexTensor::zeros({4, 4});
    for (double& v : mask.real) v = rng.uniform01() < 0.5 ? 1.0 : 0.0;
    ComplexTensor y = random_tensor({2, 4, 4}, rng);
    cs.build = [mask = std::move(mask), y = std::move(y)](Graph& g, const std::vector<NodeId>& in) {
      return g.ifft2(g.kspace_replace(g.fft2(in[0]), mask, y));
    };
    return cs;
  });
  return true;
}

inline const bool registered = register_all();

}  // namespace gradcheck_builtin

}  // namespace octmri

#endif  // OCTMRI_AUTODIFF_HPP_
