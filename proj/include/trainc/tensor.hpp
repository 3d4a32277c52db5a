// SPDX-License-Identifier: Apache-2.0
//
// Runtime tensor values. f16 tensors keep f32 storage whose elements are
// exactly f16-representable (see fp16.hpp). Also holds the TNSR binary file
// format and the deterministic RNG used by data generators.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "trainc/dtype.hpp"
#include "trainc/fp16.hpp"

namespace trainc {

struct Tensor {
  TensorType ty;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(TensorType t) : ty(std::move(t)), data(static_cast<size_t>(ty.numel()), 0.0f) {}
  Tensor(TensorType t, std::vector<float> d) : ty(std::move(t)), data(std::move(d)) {
    check(static_cast<std::int64_t>(data.size()) == ty.numel(), "tensor data size mismatch");
  }

  static Tensor scalar(float v, DType d = DType::F32) {
    Tensor t(TensorType{d, {1}});
    t.data[0] = d == DType::F16 ? quantize_f16(v) : v;
    return t;
  }

  std::int64_t numel() const {
    return ty.numel();
  }

  /// Quantize all elements to the f16 grid in place.
  void quantize() {
    if (ty.dtype == DType::F16) {
      for (auto& v : data) v = quantize_f16(v);
    }
  }

  bool bit_equal(const Tensor& o) const {
    if (!(ty == o.ty)) return false;
    return std::memcmp(data.data(), o.data.data(), data.size() * sizeof(float)) == 0;
  }
};

using TensorList = std::vector<Tensor>;

inline double max_rel_error(const Tensor& a, const Tensor& b) {
  check(a.data.size() == b.data.size(), "rel error on mismatched tensors");
  double worst = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    double x = a.data[i], y = b.data[i];
    double denom = std::max({std::abs(x), std::abs(y), 1e-9});
    worst = std::max(worst, std::abs(x - y) / denom);
  }
  return worst;
}

inline double max_abs_error(const Tensor& a, const Tensor& b) {
  check(a.data.size() == b.data.size(), "abs error on mismatched tensors");
  double worst = 0.0;
  for (size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(double(a.data[i]) - double(b.data[i])));
  return worst;
}

// --- TNSR binary format -----------------------------------------------------
// magic "TNSR", u8 dtype (0=f32, 1=f16), u8 rank, u64 dims[rank] (LE),
// then raw little-endian element data (4 B for f32, 2 B for f16).

inline void save_tensor(const Tensor& t, std::ostream& os) {
  os.write("TNSR", 4);
  std::uint8_t code = t.ty.dtype == DType::F32 ? 0 : 1;
  std::uint8_t rank = static_cast<std::uint8_t>(t.ty.rank());
  os.put(static_cast<char>(code));
  os.put(static_cast<char>(rank));
  for (auto d : t.ty.shape) {
    std::uint64_t u = static_cast<std::uint64_t>(d);
    os.write(reinterpret_cast<const char*>(&u), 8);
  }
  if (t.ty.dtype == DType::F32) {
    os.write(reinterpret_cast<const char*>(t.data.data()),
             static_cast<std::streamsize>(t.data.size() * 4));
  } else {
    for (float v : t.data) {
      std::uint16_t h = float_to_half_bits(v);
      os.write(reinterpret_cast<const char*>(&h), 2);
    }
  }
}

inline void save_tensor(const Tensor& t, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path + " for writing");
  save_tensor(t, f);
}

inline Tensor load_tensor(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "TNSR", 4) != 0) throw Error("bad tensor file magic");
  int code = is.get();
  int rank = is.get();
  if (code < 0 || code > 1 || rank < 0) throw Error("bad tensor file header");
  TensorType ty;
  ty.dtype = code == 0 ? DType::F32 : DType::F16;
  for (int i = 0; i < rank; ++i) {
    std::uint64_t u = 0;
    is.read(reinterpret_cast<char*>(&u), 8);
    ty.shape.push_back(static_cast<std::int64_t>(u));
  }
  Tensor t(ty);
  if (ty.dtype == DType::F32) {
    is.read(reinterpret_cast<char*>(t.data.data()), static_cast<std::streamsize>(t.data.size() * 4));
  } else {
    for (auto& v : t.data) {
      std::uint16_t h = 0;
      is.read(reinterpret_cast<char*>(&h), 2);
      v = half_bits_to_float(h);
    }
  }
  if (!is) throw Error("truncated tensor file");
  return t;
}

inline Tensor load_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path);
  return load_tensor(f);
}

// --- Deterministic RNG ------------------------------------------------------
// mt19937 raw draws only; std distributions are implementation-defined and
// would break cross-run byte determinism of generated data.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(static_cast<std::uint32_t>(seed ^ (seed >> 32))) {}

  /// Uniform in [0, 1).
  float uniform() {
    return static_cast<float>((gen_() >> 8) * (1.0 / 16777216.0));
  }

  float uniform(float lo, float hi) {
    return lo + (hi - lo) * uniform();
  }

  std::uint32_t next_u32() {
    return gen_();
  }

  /// Uniform integer in [0, n).
  std::uint32_t below(std::uint32_t n) {
    return n ? gen_() % n : 0;
  }

  Tensor tensor(TensorType ty, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(ty);
    for (auto& v : t.data) v = uniform(lo, hi);
    t.quantize();
    return t;
  }

 private:
  std::mt19937 gen_;
};

}  // namespace trainc
