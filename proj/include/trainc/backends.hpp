// SPDX-License-Identifier: Apache-2.0
//
// Kernel implementations for the two built-in dialects.
//
// ref: naive scalar loops over every base op; fixed left-to-right reduction
//      order makes it the bit-level ground truth for the whole system.
// opt: blocked matmul (tile 32) and fused matmul+add+{relu,tanh} epilogues.
//
// f16 is emulated: compute in f32, round to nearest-even after each op.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "trainc/ir.hpp"
#include "trainc/opreg.hpp"

namespace trainc::backends {

using ir::AttrMap;

// --- broadcast iteration -------------------------------------------------------

struct BcastIndex {
  // Maps a row-major flat index over `out` to a flat index over `in`,
  // aligning trailing dimensions and pinning size-1 dims.
  std::vector<std::int64_t> out_shape;
  std::vector<std::int64_t> in_strides;  // per out dim

  BcastIndex(const std::vector<std::int64_t>& out, const std::vector<std::int64_t>& in) {
    out_shape = out;
    in_strides.assign(out.size(), 0);
    std::int64_t stride = 1;
    for (size_t i = 0; i < in.size(); ++i) {
      size_t in_dim = in.size() - 1 - i;
      size_t out_dim = out.size() - 1 - i;
      in_strides[out_dim] = (in[in_dim] == 1) ? 0 : stride;
      stride *= in[in_dim];
    }
  }

  std::int64_t map(std::int64_t out_flat) const {
    std::int64_t in_flat = 0;
    for (size_t i = out_shape.size(); i-- > 0;) {
      std::int64_t d = out_shape[i];
      in_flat += (out_flat % d) * in_strides[i];
      out_flat /= d;
    }
    return in_flat;
  }
};

inline void round_if_f16(Tensor& t) {
  t.quantize();
}

// --- ref kernel semantics --------------------------------------------------------

namespace detail {

template <typename F>
Tensor elemwise_binary(const Tensor& a, const Tensor& b, const TensorType& out_ty, F&& f) {
  Tensor out(out_ty);
  const std::int64_t n = out.numel();
  if (a.ty.shape == out_ty.shape && b.ty.shape == out_ty.shape) {
    for (std::int64_t i = 0; i < n; ++i) out.data[i] = f(a.data[i], b.data[i]);
  } else if (b.numel() == 1 && a.ty.shape == out_ty.shape) {
    float s = b.data[0];
    for (std::int64_t i = 0; i < n; ++i) out.data[i] = f(a.data[i], s);
  } else if (a.numel() == 1 && b.ty.shape == out_ty.shape) {
    float s = a.data[0];
    for (std::int64_t i = 0; i < n; ++i) out.data[i] = f(s, b.data[i]);
  } else {
    BcastIndex ia(out_ty.shape, a.ty.shape), ib(out_ty.shape, b.ty.shape);
    for (std::int64_t i = 0; i < n; ++i) out.data[i] = f(a.data[ia.map(i)], b.data[ib.map(i)]);
  }
  round_if_f16(out);
  return out;
}

template <typename F>
Tensor elemwise_unary(const Tensor& a, const TensorType& out_ty, F&& f) {
  Tensor out(out_ty);
  for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] = f(a.data[i]);
  round_if_f16(out);
  return out;
}

inline Tensor reduce(const Tensor& x, const AttrMap& attrs, const TensorType& out_ty, bool mean) {
  std::string axes_s = ir::attr_string(attrs, "axes");
  std::vector<int> axes;
  if (axes_s.empty()) {
    for (int i = 0; i < x.ty.rank(); ++i) axes.push_back(i);
  } else {
    axes = opreg::parse_axes_attr(axes_s, x.ty.rank());
  }
  std::vector<bool> reduced(x.ty.shape.size(), false);
  for (int a : axes) reduced[a] = true;

  Tensor out(out_ty);
  std::fill(out.data.begin(), out.data.end(), 0.0f);
  // Row-major scan of the input gives a fixed (left-to-right) accumulation
  // order per output slot.
  std::vector<std::int64_t> out_stride(x.ty.shape.size(), 0);
  {
    std::int64_t stride = 1;
    for (size_t i = x.ty.shape.size(); i-- > 0;) {
      if (!reduced[i]) {
        out_stride[i] = stride;
        stride *= x.ty.shape[i];
      }
    }
  }
  std::int64_t count = 1;
  for (size_t i = 0; i < x.ty.shape.size(); ++i)
    if (reduced[i]) count *= x.ty.shape[i];

  const std::int64_t n = x.numel();
  std::vector<std::int64_t> idx(x.ty.shape.size(), 0);
  for (std::int64_t flat = 0; flat < n; ++flat) {
    std::int64_t o = 0, rem = flat;
    for (size_t i = x.ty.shape.size(); i-- > 0;) {
      std::int64_t d = x.ty.shape[i];
      o += (rem % d) * out_stride[i];
      rem /= d;
    }
    out.data[o] += x.data[flat];
  }
  if (mean) {
    float inv = 1.0f / static_cast<float>(count);
    for (auto& v : out.data) v *= inv;
  }
  round_if_f16(out);
  return out;
}

inline Tensor matmul_ref(const Tensor& a, const Tensor& b, const TensorType& out_ty) {
  const std::int64_t m = a.ty.shape[0], k = a.ty.shape[1], n = b.ty.shape[1];
  Tensor out(out_ty);
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      float acc = 0.0f;
      for (std::int64_t kk = 0; kk < k; ++kk) acc += a.data[i * k + kk] * b.data[kk * n + j];
      out.data[i * n + j] = acc;
    }
  }
  round_if_f16(out);
  return out;
}

}  // namespace detail

/// Ground-truth execution of a single base operator. Collectives with
/// world > 1 cannot run locally and are rejected; the simulation bus owns
/// them.
inline TensorList exec_base(const std::string& base_op, const AttrMap& attrs,
                            const TensorList& in, const Type& out_ty) {
  using detail::elemwise_binary;
  using detail::elemwise_unary;
  const TensorType* ot = out_ty.is_tensor() ? &out_ty.tensor() : nullptr;

  if (base_op == "add") return {elemwise_binary(in[0], in[1], *ot, [](float a, float b) { return a + b; })};
  if (base_op == "sub") return {elemwise_binary(in[0], in[1], *ot, [](float a, float b) { return a - b; })};
  if (base_op == "mul") return {elemwise_binary(in[0], in[1], *ot, [](float a, float b) { return a * b; })};
  if (base_op == "div") return {elemwise_binary(in[0], in[1], *ot, [](float a, float b) { return a / b; })};
  if (base_op == "tanh_dx")
    return {elemwise_binary(in[0], in[1], *ot, [](float y, float dy) { return dy * (1.0f - y * y); })};
  if (base_op == "neg") return {elemwise_unary(in[0], *ot, [](float a) { return -a; })};
  if (base_op == "tanh") return {elemwise_unary(in[0], *ot, [](float a) { return std::tanh(a); })};
  if (base_op == "relu") return {elemwise_unary(in[0], *ot, [](float a) { return a > 0.0f ? a : 0.0f; })};
  if (base_op == "gtz") return {elemwise_unary(in[0], *ot, [](float a) { return a > 0.0f ? 1.0f : 0.0f; })};
  if (base_op == "cast") {
    Tensor out(*ot);
    out.data = in[0].data;
    round_if_f16(out);
    return {out};
  }
  if (base_op == "bcast") {
    Tensor out(*ot);
    BcastIndex bi(ot->shape, in[0].ty.shape);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] = in[0].data[bi.map(i)];
    round_if_f16(out);
    return {out};
  }
  if (base_op == "transpose") {
    const std::int64_t r = in[0].ty.shape[0], c = in[0].ty.shape[1];
    Tensor out(*ot);
    for (std::int64_t i = 0; i < r; ++i)
      for (std::int64_t j = 0; j < c; ++j) out.data[j * r + i] = in[0].data[i * c + j];
    return {out};
  }
  if (base_op == "reshape") {
    Tensor out(*ot);
    out.data = in[0].data;
    return {out};
  }
  if (base_op == "sum") return {detail::reduce(in[0], attrs, *ot, false)};
  if (base_op == "mean") return {detail::reduce(in[0], attrs, *ot, true)};
  if (base_op == "mse") {
    float acc = 0.0f;
    for (size_t i = 0; i < in[0].data.size(); ++i) {
      float d = in[0].data[i] - in[1].data[i];
      acc += d * d;
    }
    Tensor out(*ot);
    out.data[0] = acc / static_cast<float>(in[0].numel());
    return {out};
  }
  if (base_op == "matmul") return {detail::matmul_ref(in[0], in[1], *ot)};
  if (base_op == "sgd_update") {
    float lr = static_cast<float>(ir::attr_double(attrs, "lr", 0.0));
    Tensor out(*ot);
    for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] = in[0].data[i] - lr * in[1].data[i];
    return {out};
  }
  if (base_op == "adam_update") {
    const double lr = ir::attr_double(attrs, "lr", 1e-3);
    const double b1 = ir::attr_double(attrs, "beta1", 0.9);
    const double b2 = ir::attr_double(attrs, "beta2", 0.999);
    const double eps = ir::attr_double(attrs, "eps", 1e-8);
    const double t = in[4].data[0];
    const auto& tt = out_ty.tuple();
    Tensor p(tt.fields[0]), m(tt.fields[1]), v(tt.fields[2]);
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    for (std::int64_t i = 0; i < p.numel(); ++i) {
      double g = in[1].data[i];
      double mi = b1 * in[2].data[i] + (1.0 - b1) * g;
      double vi = b2 * in[3].data[i] + (1.0 - b2) * g * g;
      double mhat = mi / bc1;
      double vhat = vi / bc2;
      p.data[i] = static_cast<float>(in[0].data[i] - lr * mhat / (std::sqrt(vhat) + eps));
      m.data[i] = static_cast<float>(mi);
      v.data[i] = static_cast<float>(vi);
    }
    return {p, m, v};
  }

  const auto& base = opreg::registry().base(base_op);
  if (base.collective || base_op == "shard") {
    std::int64_t world = ir::attr_int(attrs, "world", 1);
    if (world != 1)
      throw Error("collective op " + base_op + " requires the simulation bus (world=" +
                  std::to_string(world) + ")");
    // world=1 degenerate forms: identity up to flattening/padding.
    if (base_op == "allreduce") return {in[0]};
    if (base_op == "reduce_scatter" || base_op == "shard") {
      Tensor out(out_ty.tensor());
      for (size_t i = 0; i < in[0].data.size(); ++i) out.data[i] = in[0].data[i];
      return {out};
    }
    if (base_op == "all_gather") {
      Tensor out(out_ty.tensor());
      for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = in[0].data[i];
      return {out};
    }
    if (base_op == "reduce_scatter_batched" || base_op == "all_gather_batched") {
      TensorList out;
      for (size_t i = 0; i < in.size(); ++i) {
        Tensor t(out_ty.tuple().fields[i]);
        for (size_t j = 0; j < t.data.size() && j < in[i].data.size(); ++j)
          t.data[j] = in[i].data[j];
        out.push_back(std::move(t));
      }
      return out;
    }
  }
  throw Error("no ref kernel for op " + base_op);
}

// --- opt kernels -----------------------------------------------------------------

/// Blocked matmul, tile 32, f32 accumulation per output element.
inline Tensor matmul_blocked(const Tensor& a, const Tensor& b, const TensorType& out_ty,
                             std::int64_t tile = 32) {
  const std::int64_t m = a.ty.shape[0], k = a.ty.shape[1], n = b.ty.shape[1];
  Tensor out(out_ty);
  std::fill(out.data.begin(), out.data.end(), 0.0f);
  for (std::int64_t i0 = 0; i0 < m; i0 += tile) {
    const std::int64_t imax = std::min(i0 + tile, m);
    for (std::int64_t k0 = 0; k0 < k; k0 += tile) {
      const std::int64_t kmax = std::min(k0 + tile, k);
      for (std::int64_t j0 = 0; j0 < n; j0 += tile) {
        const std::int64_t jmax = std::min(j0 + tile, n);
        for (std::int64_t i = i0; i < imax; ++i) {
          for (std::int64_t kk = k0; kk < kmax; ++kk) {
            const float aik = a.data[i * k + kk];
            const float* brow = &b.data[kk * n];
            float* crow = &out.data[i * n];
            for (std::int64_t j = j0; j < jmax; ++j) crow[j] += aik * brow[j];
          }
        }
      }
    }
  }
  round_if_f16(out);
  return out;
}

enum class Epilogue { None, Relu, Tanh };

/// Fused (A.B + bias) followed by an elementwise activation; the opt dialect
/// kernel behind the matmul_add_{relu,tanh} fusion patterns. Inputs may have
/// been produced by absorbed casts; they arrive already converted.
inline Tensor matmul_add_act(const Tensor& a, const Tensor& b, const Tensor& bias,
                             const TensorType& out_ty, Epilogue epi) {
  Tensor out = matmul_blocked(a, b, TensorType{DType::F32, out_ty.shape});
  BcastIndex bi(out_ty.shape, bias.ty.shape);
  for (std::int64_t i = 0; i < out.numel(); ++i) {
    float v = out.data[i] + bias.data[bi.map(i)];
    if (epi == Epilogue::Relu) v = v > 0.0f ? v : 0.0f;
    if (epi == Epilogue::Tanh) v = std::tanh(v);
    out.data[i] = v;
  }
  out.ty = out_ty;
  round_if_f16(out);
  return out;
}

// --- kernel cache ------------------------------------------------------------------

struct Kernel {
  std::string key;
  std::function<TensorList(const TensorList&)> exec;
};

using KernelPtr = std::shared_ptr<Kernel>;

/// Process-wide shape-specialized kernel cache. First use per key compiles,
/// later uses hit; identical keys always produce identical kernels, so
/// concurrent insert is last-writer-wins.
class KernelCache {
 public:
  KernelPtr get(const std::string& key, const std::function<KernelPtr()>& compile) {
    {
      std::lock_guard<std::mutex> lock(mu_);
      auto it = cache_.find(key);
      if (it != cache_.end()) {
        ++hits_;
        return it->second;
      }
    }
    KernelPtr k = compile();
    std::lock_guard<std::mutex> lock(mu_);
    auto [it, inserted] = cache_.insert_or_assign(key, k);
    ++compiles_;
    return it->second;
  }

  void clear() {
    std::lock_guard<std::mutex> lock(mu_);
    cache_.clear();
    compiles_ = 0;
    hits_ = 0;
  }

  std::size_t compiles() const {
    return compiles_;
  }
  std::size_t hits() const {
    return hits_;
  }
  std::size_t size() const {
    return cache_.size();
  }

  static KernelCache& global() {
    static KernelCache c;
    return c;
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, KernelPtr> cache_;
  std::size_t compiles_ = 0;
  std::size_t hits_ = 0;
};

// --- priority derivation -----------------------------------------------------------

struct PriorityTable {
  std::map<std::string, int> priorities;  // "dialect.base" -> priority
};

struct LatencySample {
  std::string dialect;
  std::string op;
  std::string shape_class;
  double median_us = 0.0;
};

/// Lower median latency wins the higher priority per base op; single
/// implementations keep their registered defaults. The samples may come from
/// live vm.profile runs or a replay log (see vm.hpp for the measuring side).
inline PriorityTable derive_priorities(const std::vector<LatencySample>& samples) {
  PriorityTable table;
  std::map<std::string, std::map<std::string, std::vector<double>>> by_op;  // op -> dialect -> medians
  for (auto& s : samples) by_op[s.op][s.dialect].push_back(s.median_us);

  for (auto& [op, dialects] : by_op) {
    std::vector<std::pair<double, std::string>> ranked;
    for (auto& [dialect, meds] : dialects) {
      std::vector<double> sorted = meds;
      std::sort(sorted.begin(), sorted.end());
      double med = sorted[sorted.size() / 2];
      ranked.push_back({med, dialect});
    }
    std::sort(ranked.begin(), ranked.end());
    int prio = 10 + static_cast<int>(ranked.size());
    for (auto& [med, dialect] : ranked) table.priorities[dialect + "." + op] = prio--;
  }
  return table;
}

}  // namespace trainc::backends
