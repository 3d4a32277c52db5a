// SPDX-License-Identifier: Apache-2.0
//
// Scalar dtypes and static tensor/tuple types.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace trainc {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};
struct TypeError : Error {
  using Error::Error;
};
struct RegistryError : Error {
  using Error::Error;
};
struct UnimplementedOp : Error {
  using Error::Error;
};
struct NonDifferentiable : Error {
  using Error::Error;
};
struct BudgetInfeasible : Error {
  using Error::Error;
};
struct ProtocolError : Error {
  using Error::Error;
};

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw Error("internal: " + msg);
}

enum class DType : std::uint8_t { F32 = 0, F16 = 1 };

inline int dtype_width(DType d) {
  return d == DType::F32 ? 4 : 2;
}

inline const char* dtype_name(DType d) {
  return d == DType::F32 ? "f32" : "f16";
}

struct TensorType {
  DType dtype = DType::F32;
  std::vector<std::int64_t> shape;

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (auto d : shape) {
      if (d < 1) throw TypeError("tensor dimension must be >= 1");
      if (n > (INT64_MAX / d)) throw TypeError("tensor size overflows 64-bit");
      n *= d;
    }
    return n;
  }

  std::int64_t size_bytes() const {
    std::int64_t n = numel();
    std::int64_t w = dtype_width(dtype);
    if (n > INT64_MAX / w) throw TypeError("tensor byte size overflows 64-bit");
    return n * w;
  }

  int rank() const {
    return static_cast<int>(shape.size());
  }

  bool operator==(const TensorType& o) const {
    return dtype == o.dtype && shape == o.shape;
  }
};

struct TupleType {
  std::vector<TensorType> fields;
  bool operator==(const TupleType& o) const {
    return fields == o.fields;
  }
};

struct Type {
  std::variant<std::monostate, TensorType, TupleType> v;

  Type() = default;
  Type(TensorType t) : v(std::move(t)) {}
  Type(TupleType t) : v(std::move(t)) {}

  bool defined() const {
    return !std::holds_alternative<std::monostate>(v);
  }
  bool is_tensor() const {
    return std::holds_alternative<TensorType>(v);
  }
  bool is_tuple() const {
    return std::holds_alternative<TupleType>(v);
  }
  const TensorType& tensor() const {
    if (!is_tensor()) throw TypeError("expected tensor type");
    return std::get<TensorType>(v);
  }
  const TupleType& tuple() const {
    if (!is_tuple()) throw TypeError("expected tuple type");
    return std::get<TupleType>(v);
  }
  std::int64_t size_bytes() const {
    if (is_tensor()) return tensor().size_bytes();
    if (is_tuple()) {
      std::int64_t s = 0;
      for (auto& f : tuple().fields) s += f.size_bytes();
      return s;
    }
    return 0;
  }
  bool operator==(const Type& o) const {
    if (v.index() != o.v.index()) return false;
    if (is_tensor()) return tensor() == o.tensor();
    if (is_tuple()) return tuple() == o.tuple();
    return true;
  }
};

inline std::string type_to_string(const TensorType& t) {
  std::string s = dtype_name(t.dtype);
  s += '[';
  for (size_t i = 0; i < t.shape.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(t.shape[i]);
  }
  s += ']';
  return s;
}

inline std::string type_to_string(const Type& t) {
  if (!t.defined()) return "?";
  if (t.is_tensor()) return type_to_string(t.tensor());
  std::string s = "(";
  for (size_t i = 0; i < t.tuple().fields.size(); ++i) {
    if (i) s += ", ";
    s += type_to_string(t.tuple().fields[i]);
  }
  s += ')';
  return s;
}

}  // namespace trainc
