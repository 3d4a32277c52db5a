// SPDX-License-Identifier: Apache-2.0
//
// Base operator registry, dialect operator registration with priorities and
// device gating, attribute inheritance, the dispatch pass, and type
// inference driven by per-op type relations.

#pragma once

#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "trainc/ir.hpp"

namespace trainc::opreg {

using ir::AttrMap;
using ir::AttrValue;

enum class OpCategory { Elemwise, Injective, Reduction, Opaque };

inline const char* category_name(OpCategory c) {
  switch (c) {
    case OpCategory::Elemwise: return "elemwise";
    case OpCategory::Injective: return "injective";
    case OpCategory::Reduction: return "reduction";
    case OpCategory::Opaque: return "opaque";
  }
  return "?";
}

using TypeRel = std::function<Type(const std::vector<Type>&, const AttrMap&)>;

struct BaseOp {
  std::string name;
  int arity = 1;  // -1: variadic
  OpCategory category = OpCategory::Opaque;
  TypeRel type_rel;
  AttrMap attr_table;       // common attributes shared by dialect ops
  bool collective = false;  // executed through the rank bus
  bool pure = true;         // replayable by rematerialization
};

struct DialectOp {
  std::string dialect;
  std::string base;
  int priority = 0;
  std::set<std::string> device_gate = {"cpu"};
  AttrMap overrides;             // replace base attr_table entries
  AttrMap extras;                // dialect-specific attributes
  std::optional<TypeRel> type_rel;  // optional type relation override

  std::string full_name() const {
    return dialect + "." + base;
  }
};

struct DispatchConfig {
  std::string device = "cpu";
  std::set<std::string> enabled_dialects = {"ref", "opt"};
  std::map<std::string, int> priority_overrides;  // "dialect.base" -> priority

  int effective_priority(const DialectOp& d) const {
    auto it = priority_overrides.find(d.full_name());
    return it == priority_overrides.end() ? d.priority : it->second;
  }
};

// --- shape helpers -------------------------------------------------------------

inline std::vector<std::int64_t> broadcast_shape(const std::vector<std::int64_t>& a,
                                                 const std::vector<std::int64_t>& b,
                                                 const std::string& op) {
  std::vector<std::int64_t> out(std::max(a.size(), b.size()));
  for (size_t i = 0; i < out.size(); ++i) {
    std::int64_t da = i < a.size() ? a[a.size() - 1 - i] : 1;
    std::int64_t db = i < b.size() ? b[b.size() - 1 - i] : 1;
    if (da != db && da != 1 && db != 1)
      throw TypeError(op + ": shapes are not broadcast-compatible");
    out[out.size() - 1 - i] = std::max(da, db);
  }
  return out;
}

inline bool is_scalar_shaped(const TensorType& t) {
  return t.numel() == 1;
}

inline std::vector<std::int64_t> parse_shape_attr(const std::string& s) {
  std::vector<std::int64_t> shape;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    std::int64_t d = 0;
    auto res = std::from_chars(s.data() + pos, s.data() + comma, d);
    if (res.ec != std::errc() || d < 1) throw TypeError("bad shape attr: " + s);
    shape.push_back(d);
    pos = comma + 1;
  }
  if (shape.empty()) throw TypeError("empty shape attr");
  return shape;
}

inline std::string shape_attr(const std::vector<std::int64_t>& shape) {
  std::string s;
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(shape[i]);
  }
  return s;
}

inline std::vector<int> parse_axes_attr(const std::string& s, int rank) {
  std::vector<int> axes;
  size_t pos = 0;
  while (pos < s.size()) {
    size_t comma = s.find(',', pos);
    if (comma == std::string::npos) comma = s.size();
    int a = 0;
    std::from_chars(s.data() + pos, s.data() + comma, a);
    if (a < 0 || a >= rank) throw TypeError("reduction axis out of range: " + s);
    axes.push_back(a);
    pos = comma + 1;
  }
  return axes;
}

inline std::int64_t ceil_div(std::int64_t a, std::int64_t b) {
  return (a + b - 1) / b;
}

// --- registry --------------------------------------------------------------------

class OpRegistry {
 public:
  void register_base_op(BaseOp op) {
    if (base_.count(op.name)) throw RegistryError("duplicate base op " + op.name);
    base_.emplace(op.name, std::move(op));
  }

  void register_dialect_op(DialectOp op) {
    if (!base_.count(op.base))
      throw RegistryError("dialect op " + op.full_name() + " names unknown base op " + op.base);
    if (dialect_.count(op.full_name()))
      throw RegistryError("duplicate dialect op " + op.full_name());
    dialect_.emplace(op.full_name(), std::move(op));
  }

  bool has_base(const std::string& name) const {
    return base_.count(name) > 0;
  }

  const BaseOp& base(const std::string& name) const {
    auto it = base_.find(name);
    if (it == base_.end()) throw RegistryError("unknown base op " + name);
    return it->second;
  }

  const DialectOp* find_dialect(const std::string& full) const {
    auto it = dialect_.find(full);
    return it == dialect_.end() ? nullptr : &it->second;
  }

  /// Splits "dialect.op" into the dialect op and its base; a bare name is a
  /// base op.
  const BaseOp& base_of(const std::string& op_name) const {
    auto dot = op_name.find('.');
    if (dot == std::string::npos) return base(op_name);
    auto* d = find_dialect(op_name);
    if (!d) throw RegistryError("unknown dialect op " + op_name);
    return base(d->base);
  }

  bool known(const std::string& op_name) const {
    auto dot = op_name.find('.');
    if (dot == std::string::npos) return has_base(op_name);
    return find_dialect(op_name) != nullptr;
  }

  /// Attribute lookup with Fig.6-style precedence: extras > overrides > base.
  std::optional<AttrValue> attr(const std::string& op_name, const std::string& key) const {
    auto dot = op_name.find('.');
    if (dot != std::string::npos) {
      auto* d = find_dialect(op_name);
      if (!d) throw RegistryError("unknown dialect op " + op_name);
      if (auto it = d->extras.find(key); it != d->extras.end()) return it->second;
      if (auto it = d->overrides.find(key); it != d->overrides.end()) return it->second;
      const auto& b = base(d->base).attr_table;
      if (auto it = b.find(key); it != b.end()) return it->second;
      return std::nullopt;
    }
    const auto& b = base(op_name).attr_table;
    if (auto it = b.find(key); it != b.end()) return it->second;
    return std::nullopt;
  }

  const TypeRel& type_rel_of(const std::string& op_name) const {
    auto dot = op_name.find('.');
    if (dot != std::string::npos) {
      auto* d = find_dialect(op_name);
      if (!d) throw RegistryError("unknown dialect op " + op_name);
      if (d->type_rel) return *d->type_rel;
      return base(d->base).type_rel;
    }
    return base(op_name).type_rel;
  }

  /// Highest-priority enabled dialect op for a base, ties broken by dialect
  /// name (lexicographic).
  const DialectOp& resolve(const std::string& base_name, const DispatchConfig& cfg) const {
    if (!has_base(base_name)) throw RegistryError("unknown base op " + base_name);
    const DialectOp* best = nullptr;
    int best_prio = 0;
    for (auto& [full, d] : dialect_) {
      if (d.base != base_name) continue;
      if (!cfg.enabled_dialects.count(d.dialect)) continue;
      if (!d.device_gate.count(cfg.device)) continue;
      int prio = cfg.effective_priority(d);
      if (!best || prio > best_prio || (prio == best_prio && d.dialect < best->dialect)) {
        best = &d;
        best_prio = prio;
      }
    }
    if (!best)
      throw UnimplementedOp("no enabled dialect implements op " + base_name + " on device " +
                            cfg.device);
    return *best;
  }

  std::vector<const DialectOp*> dialect_ops_of(const std::string& base_name) const {
    std::vector<const DialectOp*> out;
    for (auto& [full, d] : dialect_)
      if (d.base == base_name) out.push_back(&d);
    return out;
  }

 private:
  std::map<std::string, BaseOp> base_;
  std::map<std::string, DialectOp> dialect_;
};

// --- builtin operator set ----------------------------------------------------------

namespace rel {

inline TensorType expect_tensor(const Type& t, const std::string& op) {
  if (!t.is_tensor()) throw TypeError(op + ": expected a tensor input");
  return t.tensor();
}

inline Type elemwise_binary(const std::vector<Type>& in, const std::string& op) {
  auto a = expect_tensor(in[0], op);
  auto b = expect_tensor(in[1], op);
  DType dtype;
  if (a.dtype == b.dtype) {
    dtype = a.dtype;
  } else if (is_scalar_shaped(a)) {
    dtype = b.dtype;  // scalar constants are dtype-neutral
  } else if (is_scalar_shaped(b)) {
    dtype = a.dtype;
  } else {
    throw TypeError(op + ": dtype mismatch without explicit cast");
  }
  return TensorType{dtype, broadcast_shape(a.shape, b.shape, op)};
}

inline Type same_as_input(const std::vector<Type>& in, const std::string& op) {
  return expect_tensor(in[0], op);
}

}  // namespace rel

inline void register_builtin_base_ops(OpRegistry& r) {
  auto binary = [](const char* name) {
    return BaseOp{name, 2, OpCategory::Elemwise,
                  [name](const std::vector<Type>& in, const AttrMap&) {
                    return rel::elemwise_binary(in, name);
                  }};
  };
  auto unary = [](const char* name) {
    return BaseOp{name, 1, OpCategory::Elemwise,
                  [name](const std::vector<Type>& in, const AttrMap&) {
                    return rel::same_as_input(in, name);
                  }};
  };

  r.register_base_op(binary("add"));
  r.register_base_op(binary("sub"));
  r.register_base_op(binary("mul"));
  r.register_base_op(binary("div"));
  r.register_base_op(unary("neg"));
  r.register_base_op(unary("tanh"));
  r.register_base_op(unary("relu"));
  r.register_base_op(unary("gtz"));
  r.register_base_op(binary("tanh_dx"));  // (y, dy) -> dy * (1 - y*y), one kernel

  r.register_base_op(BaseOp{"cast", 1, OpCategory::Elemwise,
                            [](const std::vector<Type>& in, const AttrMap& attrs) {
                              auto t = rel::expect_tensor(in[0], "cast");
                              std::string to = ir::attr_string(attrs, "to");
                              if (to == "f16") {
                                t.dtype = DType::F16;
                              } else if (to == "f32") {
                                t.dtype = DType::F32;
                              } else {
                                throw TypeError("cast: bad 'to' attr '" + to + "'");
                              }
                              return t;
                            }});

  r.register_base_op(BaseOp{"bcast", 1, OpCategory::Elemwise,
                            [](const std::vector<Type>& in, const AttrMap& attrs) {
                              auto t = rel::expect_tensor(in[0], "bcast");
                              auto shape = parse_shape_attr(ir::attr_string(attrs, "shape"));
                              broadcast_shape(t.shape, shape, "bcast");  // validates
                              return TensorType{t.dtype, shape};
                            }});

  r.register_base_op(BaseOp{"transpose", 1, OpCategory::Injective,
                            [](const std::vector<Type>& in, const AttrMap&) {
                              auto t = rel::expect_tensor(in[0], "transpose");
                              if (t.rank() != 2) throw TypeError("transpose: rank-2 input required");
                              return TensorType{t.dtype, {t.shape[1], t.shape[0]}};
                            }});

  r.register_base_op(BaseOp{"reshape", 1, OpCategory::Injective,
                            [](const std::vector<Type>& in, const AttrMap& attrs) {
                              auto t = rel::expect_tensor(in[0], "reshape");
                              auto shape = parse_shape_attr(ir::attr_string(attrs, "shape"));
                              TensorType out{t.dtype, shape};
                              if (out.numel() != t.numel())
                                throw TypeError("reshape: element count mismatch");
                              return out;
                            }});

  auto reduce_rel = [](const char* name) {
    return [name](const std::vector<Type>& in, const AttrMap& attrs) -> Type {
      auto t = rel::expect_tensor(in[0], name);
      std::string axes_s = ir::attr_string(attrs, "axes");
      bool keepdims = ir::attr_int(attrs, "keepdims", 0) != 0;
      if (axes_s.empty()) return TensorType{t.dtype, {1}};  // full reduction
      auto axes = parse_axes_attr(axes_s, t.rank());
      std::vector<std::int64_t> shape;
      for (int i = 0; i < t.rank(); ++i) {
        bool reduced = std::find(axes.begin(), axes.end(), i) != axes.end();
        if (!reduced) {
          shape.push_back(t.shape[i]);
        } else if (keepdims) {
          shape.push_back(1);
        }
      }
      if (shape.empty()) shape.push_back(1);
      return TensorType{t.dtype, shape};
    };
  };
  r.register_base_op(BaseOp{"sum", 1, OpCategory::Reduction, reduce_rel("sum")});
  r.register_base_op(BaseOp{"mean", 1, OpCategory::Reduction, reduce_rel("mean")});

  r.register_base_op(BaseOp{"mse", 2, OpCategory::Reduction,
                            [](const std::vector<Type>& in, const AttrMap&) {
                              auto p = rel::expect_tensor(in[0], "mse");
                              auto l = rel::expect_tensor(in[1], "mse");
                              if (p.shape != l.shape)
                                throw TypeError("mse: prediction/label shape mismatch");
                              if (p.dtype != l.dtype)
                                throw TypeError("mse: dtype mismatch without explicit cast");
                              return TensorType{DType::F32, {1}};
                            }});

  r.register_base_op(BaseOp{"matmul", 2, OpCategory::Opaque,
                            [](const std::vector<Type>& in, const AttrMap&) {
                              auto a = rel::expect_tensor(in[0], "matmul");
                              auto b = rel::expect_tensor(in[1], "matmul");
                              if (a.rank() != 2 || b.rank() != 2)
                                throw TypeError("matmul: rank-2 inputs required");
                              if (a.shape[1] != b.shape[0])
                                throw TypeError("matmul: inner dimensions disagree (" +
                                                type_to_string(a) + " x " + type_to_string(b) + ")");
                              if (a.dtype != b.dtype)
                                throw TypeError("matmul: dtype mismatch without explicit cast");
                              return TensorType{a.dtype, {a.shape[0], b.shape[1]}};
                            }});

  r.register_base_op(BaseOp{"sgd_update", 2, OpCategory::Opaque,
                            [](const std::vector<Type>& in, const AttrMap&) {
                              auto p = rel::expect_tensor(in[0], "sgd_update");
                              auto g = rel::expect_tensor(in[1], "sgd_update");
                              if (p.dtype != DType::F32 || g.dtype != DType::F32)
                                throw TypeError("sgd_update: master params/grads must be f32");
                              if (p.shape != g.shape)
                                throw TypeError("sgd_update: param/grad shape mismatch");
                              return p;
                            }});

  r.register_base_op(
      BaseOp{"adam_update", 5, OpCategory::Opaque,
             [](const std::vector<Type>& in, const AttrMap&) -> Type {
               auto p = rel::expect_tensor(in[0], "adam_update");
               for (int i = 0; i < 4; ++i) {
                 auto t = rel::expect_tensor(in[i], "adam_update");
                 if (t.dtype != DType::F32)
                   throw TypeError("adam_update: master params/states must be f32");
                 if (t.shape != p.shape) throw TypeError("adam_update: shape mismatch");
               }
               auto step = rel::expect_tensor(in[4], "adam_update");
               if (step.numel() != 1) throw TypeError("adam_update: step must be a scalar");
               return TupleType{{p, p, p}};  // updated param, m, v
             }});

  // Collectives. world=1 degenerates to local math; n>1 requires the bus.
  r.register_base_op(BaseOp{"allreduce", 1, OpCategory::Opaque,
                            [](const std::vector<Type>& in, const AttrMap&) {
                              return rel::same_as_input(in, "allreduce");
                            },
                            {},
                            /*collective=*/true,
                            /*pure=*/false});

  r.register_base_op(BaseOp{"reduce_scatter", 1, OpCategory::Opaque,
                            [](const std::vector<Type>& in, const AttrMap& attrs) {
                              auto t = rel::expect_tensor(in[0], "reduce_scatter");
                              std::int64_t world = ir::attr_int(attrs, "world", 1);
                              if (world < 1) throw TypeError("reduce_scatter: world must be >= 1");
                              return TensorType{t.dtype, {ceil_div(t.numel(), world)}};
                            },
                            {},
                            true, false});

  r.register_base_op(BaseOp{"all_gather", 1, OpCategory::Opaque,
                            [](const std::vector<Type>& in, const AttrMap& attrs) {
                              auto t = rel::expect_tensor(in[0], "all_gather");
                              std::int64_t world = ir::attr_int(attrs, "world", 1);
                              auto shape = parse_shape_attr(ir::attr_string(attrs, "shape"));
                              TensorType out{t.dtype, shape};
                              if (t.numel() != ceil_div(out.numel(), world))
                                throw TypeError("all_gather: shard length mismatch");
                              return out;
                            },
                            {},
                            true, false});

  // Rank-local zero-padded shard of a replicated tensor.
  r.register_base_op(BaseOp{"shard", 1, OpCategory::Opaque,
                            [](const std::vector<Type>& in, const AttrMap& attrs) {
                              auto t = rel::expect_tensor(in[0], "shard");
                              std::int64_t world = ir::attr_int(attrs, "world", 1);
                              if (world < 1) throw TypeError("shard: world must be >= 1");
                              return TensorType{t.dtype, {ceil_div(t.numel(), world)}};
                            },
                            {},
                            false, false});  // rank-dependent, not replayable

  r.register_base_op(BaseOp{"reduce_scatter_batched", -1, OpCategory::Opaque,
                            [](const std::vector<Type>& in, const AttrMap& attrs) -> Type {
                              std::int64_t world = ir::attr_int(attrs, "world", 1);
                              TupleType out;
                              for (auto& t : in) {
                                auto tt = rel::expect_tensor(t, "reduce_scatter_batched");
                                out.fields.push_back(
                                    TensorType{tt.dtype, {ceil_div(tt.numel(), world)}});
                              }
                              return out;
                            },
                            {},
                            true, false});

  r.register_base_op(BaseOp{"all_gather_batched", -1, OpCategory::Opaque,
                            [](const std::vector<Type>& in, const AttrMap& attrs) -> Type {
                              std::int64_t world = ir::attr_int(attrs, "world", 1);
                              std::string shapes = ir::attr_string(attrs, "shapes");
                              TupleType out;
                              size_t pos = 0;
                              size_t idx = 0;
                              while (pos <= shapes.size() && idx < in.size()) {
                                size_t semi = shapes.find(';', pos);
                                if (semi == std::string::npos) semi = shapes.size();
                                auto shape = parse_shape_attr(shapes.substr(pos, semi - pos));
                                auto t = rel::expect_tensor(in[idx], "all_gather_batched");
                                TensorType full{t.dtype, shape};
                                if (t.numel() != ceil_div(full.numel(), world))
                                  throw TypeError("all_gather_batched: shard length mismatch");
                                out.fields.push_back(full);
                                pos = semi + 1;
                                ++idx;
                              }
                              if (out.fields.size() != in.size())
                                throw TypeError("all_gather_batched: shapes attr arity mismatch");
                              return out;
                            },
                            {},
                            true, false});
}

inline void register_builtin_dialect_ops(OpRegistry& r) {
  // ref implements every base op with naive scalar loops.
  static const char* kAllOps[] = {"add",        "sub",        "mul",
                                  "div",        "neg",        "tanh",
                                  "relu",       "gtz",        "tanh_dx",
                                  "cast",       "bcast",      "transpose",
                                  "reshape",    "sum",        "mean",
                                  "mse",        "matmul",     "sgd_update",
                                  "adam_update", "allreduce", "reduce_scatter",
                                  "all_gather", "shard",      "reduce_scatter_batched",
                                  "all_gather_batched"};
  for (const char* op : kAllOps)
    r.register_dialect_op(DialectOp{"ref", op, 5, {"cpu"}});

  // opt provides a blocked matmul; its fused epilogue kernels are selected by
  // the fusion pattern dialect tag rather than per-op dispatch.
  r.register_dialect_op(DialectOp{"opt", "matmul", 12, {"cpu"}, {}, {{"tile", std::int64_t(32)}}});
}

inline OpRegistry& registry() {
  static OpRegistry r = [] {
    OpRegistry reg;
    register_builtin_base_ops(reg);
    register_builtin_dialect_ops(reg);
    return reg;
  }();
  return r;
}

// --- cost model --------------------------------------------------------------------
// Deterministic per-op cost estimates, shared by the scheduler, the
// rematerializer, and the distributed timeline.

struct CostModel {
  double comm_alpha = 1000.0;  // per collective call
  double comm_beta = 1.0;      // per payload byte

  double op_cost(const std::string& op_name, const std::vector<Type>& in_types,
                 const Type& out_ty) const {
    const auto& reg = registry();
    const BaseOp& base = reg.base_of(op_name);
    if (base.name == "matmul") {
      auto a = in_types.at(0).tensor();
      auto b = in_types.at(1).tensor();
      return double(a.shape[0]) * double(a.shape[1]) * double(b.shape[1]);
    }
    if (base.category == OpCategory::Reduction) {
      double n = 1;
      for (auto& t : in_types)
        if (t.is_tensor()) n = std::max(n, double(t.tensor().numel()));
      return n;
    }
    double n = 1;
    if (out_ty.is_tensor()) {
      n = double(out_ty.tensor().numel());
    } else if (out_ty.is_tuple()) {
      n = 0;
      for (auto& f : out_ty.tuple().fields) n += double(f.numel());
    }
    return n;
  }

  double comm_cost(std::int64_t payload_bytes) const {
    return comm_alpha + comm_beta * double(payload_bytes);
  }
};

}  // namespace trainc::opreg

// --- type inference -------------------------------------------------------------
// Lives with the registry because every rule comes from it, but belongs to
// the IR surface.

namespace trainc::ir {

class TypeChecker {
 public:
  explicit TypeChecker(const opreg::OpRegistry& reg) : reg_(reg) {}

  void infer(ModuleIR& m) {
    for (auto& [name, fn] : m.functions) infer(*fn);
  }

  void infer(FunctionIR& fn) {
    for (auto& p : fn.params) {
      if (!p->ty.defined()) throw TypeError(fn.name + ": parameter %" + p->id + " lacks a type");
    }
    if (fn.form == Form::ANF) {
      std::map<std::string, Type> env;
      for (auto& p : fn.params) env[p->id] = p->ty;
      ExprPtr e = fn.body;
      while (e && e->kind == ExprKind::Let) {
        Type t = type_of(e->value, [&](const VarPtr& v) {
          auto it = env.find(v->id);
          if (it == env.end()) throw TypeError("use of undefined var %" + v->id);
          return it->second;
        });
        e->var->ty = t;
        e->ty = t;
        env[e->var->id] = t;
        e = e->body;
      }
      if (e) {
        e->ty = type_of(e, [&](const VarPtr& v) {
          auto it = env.find(v->id);
          if (it == env.end()) throw TypeError("use of undefined var %" + v->id);
          return it->second;
        });
      }
    } else {
      std::unordered_map<const Expr*, Type> memo;
      std::function<Type(const ExprPtr&)> rec = [&](const ExprPtr& n) -> Type {
        auto it = memo.find(n.get());
        if (it != memo.end()) return it->second;
        for (auto& a : n->args) rec(a);
        Type t = type_of(n, [&](const VarPtr& v) {
          if (!v->ty.defined()) throw TypeError("parameter %" + v->id + " lacks a type");
          return v->ty;
        });
        n->ty = t;
        if (n->bind) n->bind->ty = t;
        memo.emplace(n.get(), t);
        return t;
      };
      if (fn.body->kind == ExprKind::Tuple) {
        TupleType tt;
        for (auto& a : fn.body->args) tt.fields.push_back(rec(a).tensor());
        fn.body->ty = tt;
      } else {
        rec(fn.body);
      }
    }
  }

 private:
  template <typename VarTy>
  Type type_of(const ExprPtr& e, VarTy&& var_type) {
    switch (e->kind) {
      case ExprKind::VarRef:
        return var_type(e->var);
      case ExprKind::Const:
        return e->cval.value.ty;
      case ExprKind::Call: {
        const auto& base = reg_.base_of(e->op);
        if (base.arity >= 0 && static_cast<int>(e->args.size()) != base.arity)
          throw TypeError(e->op + ": expects " + std::to_string(base.arity) + " args, got " +
                          std::to_string(e->args.size()));
        std::vector<Type> in;
        for (auto& a : e->args) {
          Type t = a->kind == ExprKind::VarRef ? var_type(a->var) : a->ty;
          if (!t.defined()) t = a->ty;
          in.push_back(t);
        }
        Type out = reg_.type_rel_of(e->op)(in, e->call_attrs);
        e->ty = out;
        return out;
      }
      case ExprKind::Tuple: {
        TupleType tt;
        for (auto& a : e->args) {
          Type t = a->kind == ExprKind::VarRef ? var_type(a->var) : a->ty;
          tt.fields.push_back(t.tensor());
        }
        return tt;
      }
      case ExprKind::TupleGet: {
        Type t = e->args[0]->kind == ExprKind::VarRef ? var_type(e->args[0]->var) : e->args[0]->ty;
        const auto& tt = t.tuple();
        if (e->index < 0 || e->index >= static_cast<int>(tt.fields.size()))
          throw TypeError("tuple index " + std::to_string(e->index) + " out of range");
        return tt.fields[e->index];
      }
      case ExprKind::ClosureCall: {
        if (!e->closure) throw TypeError("unresolved closure call " + e->op);
        infer(*e->closure);
        if (e->closure->params.size() != e->args.size())
          throw TypeError(e->op + ": closure arity mismatch");
        for (size_t i = 0; i < e->args.size(); ++i) {
          Type t = e->args[i]->kind == ExprKind::VarRef ? var_type(e->args[i]->var) : e->args[i]->ty;
          if (!(t == e->closure->params[i]->ty))
            throw TypeError(e->op + ": closure argument " + std::to_string(i) + " type mismatch");
        }
        return return_type(*e->closure);
      }
      case ExprKind::Let:
        throw TypeError("unexpected let expression");
    }
    throw TypeError("unreachable");
  }

 public:
  static Type return_type(const FunctionIR& fn) {
    if (fn.form == Form::ANF) {
      ExprPtr e = fn.body;
      while (e->kind == ExprKind::Let) e = e->body;
      if (e->kind == ExprKind::Tuple) {
        TupleType tt;
        for (auto& a : e->args) tt.fields.push_back(element_type(a));
        return tt;
      }
      return element_type(e);
    }
    if (fn.body->kind == ExprKind::Tuple) {
      TupleType tt;
      for (auto& a : fn.body->args) tt.fields.push_back(element_type(a));
      return tt;
    }
    return element_type(fn.body);
  }

 private:
  static TensorType element_type(const ExprPtr& e) {
    if (e->kind == ExprKind::VarRef) return e->var->ty.tensor();
    if (e->kind == ExprKind::Const) return e->cval.value.ty;
    return e->ty.tensor();
  }

  const opreg::OpRegistry& reg_;
};

inline void infer_types(ModuleIR& m) {
  TypeChecker(opreg::registry()).infer(m);
}

inline void infer_types(FunctionIR& fn) {
  TypeChecker(opreg::registry()).infer(fn);
}

inline Type return_type(const FunctionIR& fn) {
  return TypeChecker::return_type(fn);
}

}  // namespace trainc::ir

// --- dispatch pass -----------------------------------------------------------------

namespace trainc::opreg {

/// Rewrites every base-op call to its resolved dialect op. Fused closures are
/// dispatched as a unit via their dialect tag (rule-based groups default to
/// ref). Idempotent.
inline ir::FunctionPtr dispatch_pass(const ir::FunctionIR& fn, const DispatchConfig& cfg,
                                     const OpRegistry& reg = registry()) {
  using namespace ir;
  check(fn.form == Form::Dataflow, "dispatch_pass expects dataflow form");
  auto out = clone_fn(fn);
  for (auto& node : dataflow_nodes(*out)) {
    if (node->kind == ExprKind::Call) {
      if (node->op.find('.') != std::string::npos) continue;  // already dispatched
      const BaseOp& base = reg.base(node->op);
      try {
        const DialectOp& d = reg.resolve(node->op, cfg);
        node->op = d.full_name();
      } catch (const UnimplementedOp& e) {
        std::string shapes;
        for (auto& a : node->args) {
          if (!shapes.empty()) shapes += ", ";
          shapes += a->ty.defined() ? type_to_string(a->ty) : std::string("?");
        }
        throw UnimplementedOp(std::string(e.what()) + " (inputs: " + shapes + ")");
      }
      (void)base;
    } else if (node->kind == ExprKind::ClosureCall) {
      if (!ir::has_attr(node->call_attrs, "dialect")) node->call_attrs["dialect"] = "ref";
    }
  }
  return out;
}

}  // namespace trainc::opreg
