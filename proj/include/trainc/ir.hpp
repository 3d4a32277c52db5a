// SPDX-License-Identifier: Apache-2.0
//
// Typed functional IR with two interchangeable forms:
//   ANF      — right-nested let chain; the let order is the execution order.
//   Dataflow — DAG; sharing is node identity, execution order is any topo
//              order. Let-bound var ids/attrs ride on `bind` so the two
//              forms convert without loss.

#pragma once

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "trainc/tensor.hpp"

namespace trainc::ir {

using AttrValue = std::variant<std::int64_t, double, std::string>;
using AttrMap = std::map<std::string, AttrValue>;

inline constexpr const char* kOrderIndex = "order_index";

inline std::int64_t attr_int(const AttrMap& m, const std::string& k, std::int64_t dflt) {
  auto it = m.find(k);
  if (it == m.end()) return dflt;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
  if (auto* d = std::get_if<double>(&it->second)) return static_cast<std::int64_t>(*d);
  throw Error("attr " + k + " is not numeric");
}

inline double attr_double(const AttrMap& m, const std::string& k, double dflt) {
  auto it = m.find(k);
  if (it == m.end()) return dflt;
  if (auto* d = std::get_if<double>(&it->second)) return *d;
  if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
  throw Error("attr " + k + " is not numeric");
}

inline std::string attr_string(const AttrMap& m, const std::string& k, const std::string& dflt = "") {
  auto it = m.find(k);
  if (it == m.end()) return dflt;
  if (auto* s = std::get_if<std::string>(&it->second)) return *s;
  throw Error("attr " + k + " is not a string");
}

inline bool has_attr(const AttrMap& m, const std::string& k) {
  return m.count(k) > 0;
}

struct Var {
  std::string id;  // without the leading '%'
  Type ty;
  AttrMap attrs;

  Var() = default;
  Var(std::string id_, Type ty_ = {}, AttrMap attrs_ = {})
      : id(std::move(id_)), ty(std::move(ty_)), attrs(std::move(attrs_)) {}
};

using VarPtr = std::shared_ptr<Var>;

inline VarPtr make_var(std::string id, Type ty = {}, AttrMap attrs = {}) {
  return std::make_shared<Var>(std::move(id), std::move(ty), std::move(attrs));
}

enum class ExprKind { VarRef, Const, Call, Tuple, TupleGet, ClosureCall, Let };

struct Expr;
using ExprPtr = std::shared_ptr<Expr>;

struct FunctionIR;
using FunctionPtr = std::shared_ptr<FunctionIR>;

struct Constant {
  Tensor value;
  bool is_scalar = true;  // printed as a bare float literal
};

namespace detail {
inline std::uint64_t next_serial() {
  static std::atomic<std::uint64_t> counter{1};
  return counter.fetch_add(1, std::memory_order_relaxed);
}
}  // namespace detail

struct Expr {
  ExprKind kind = ExprKind::VarRef;
  VarPtr var;                 // VarRef target; Let binding var
  ExprPtr value;              // Let value
  ExprPtr body;               // Let body
  std::string op;             // Call: op name ("add", "opt.matmul"); ClosureCall: callee name
  std::vector<ExprPtr> args;  // Call/Tuple/ClosureCall args; TupleGet: {arg}
  AttrMap call_attrs;         // Call attrs (lr, axes, to, world, ...)
  int index = -1;             // TupleGet
  Constant cval;              // Const
  FunctionPtr closure;        // ClosureCall resolved callee
  VarPtr bind;                // dataflow: the let var this node was bound to
  std::uint64_t serial = detail::next_serial();
  Type ty;                    // set by infer_types
};

enum class Form { ANF, Dataflow };

struct FunctionIR {
  std::string name;
  std::vector<VarPtr> params;
  ExprPtr body;
  Form form = Form::ANF;
};

struct ModuleIR {
  std::vector<std::pair<std::string, FunctionPtr>> functions;  // insertion order
  std::string entry = "main";

  FunctionPtr find(const std::string& n) const {
    for (auto& [name, fn] : functions)
      if (name == n) return fn;
    return nullptr;
  }
  FunctionPtr entry_fn() const {
    auto fn = find(entry);
    if (!fn) throw Error("module entry '" + entry + "' not found");
    return fn;
  }
  void add(FunctionPtr fn) {
    if (find(fn->name)) throw Error("duplicate function " + fn->name);
    functions.emplace_back(fn->name, std::move(fn));
  }
  void replace(const std::string& n, FunctionPtr fn) {
    for (auto& [name, f] : functions) {
      if (name == n) {
        f = std::move(fn);
        return;
      }
    }
    functions.emplace_back(n, std::move(fn));
  }
};

// --- Builders ----------------------------------------------------------------

inline ExprPtr var_ref(VarPtr v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::VarRef;
  e->var = std::move(v);
  if (e->var) e->ty = e->var->ty;
  return e;
}

inline ExprPtr const_scalar(double v) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Const;
  e->cval.value = Tensor::scalar(static_cast<float>(v));
  e->cval.is_scalar = true;
  e->ty = e->cval.value.ty;
  return e;
}

inline ExprPtr const_tensor(Tensor t) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Const;
  e->ty = t.ty;
  e->cval.value = std::move(t);
  e->cval.is_scalar = false;
  return e;
}

inline ExprPtr call(std::string op, std::vector<ExprPtr> args, AttrMap attrs = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Call;
  e->op = std::move(op);
  e->args = std::move(args);
  e->call_attrs = std::move(attrs);
  return e;
}

inline ExprPtr tuple(std::vector<ExprPtr> elems) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Tuple;
  e->args = std::move(elems);
  return e;
}

inline ExprPtr tuple_get(ExprPtr t, int i) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::TupleGet;
  e->args = {std::move(t)};
  e->index = i;
  return e;
}

inline ExprPtr closure_call(std::string name, FunctionPtr fn, std::vector<ExprPtr> args,
                            AttrMap attrs = {}) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::ClosureCall;
  e->op = std::move(name);
  e->closure = std::move(fn);
  e->args = std::move(args);
  e->call_attrs = std::move(attrs);
  return e;
}

inline ExprPtr let(VarPtr v, ExprPtr value, ExprPtr body) {
  auto e = std::make_shared<Expr>();
  e->kind = ExprKind::Let;
  e->var = std::move(v);
  e->value = std::move(value);
  e->body = std::move(body);
  return e;
}

// --- ANF let-sequence view ----------------------------------------------------

struct LetBinding {
  VarPtr var;
  ExprPtr value;
};

struct LetSeq {
  std::vector<LetBinding> lets;
  ExprPtr ret;
};

inline LetSeq flatten(const FunctionIR& fn) {
  check(fn.form == Form::ANF, "flatten expects ANF");
  LetSeq seq;
  ExprPtr e = fn.body;
  while (e && e->kind == ExprKind::Let) {
    seq.lets.push_back({e->var, e->value});
    e = e->body;
  }
  seq.ret = e;
  return seq;
}

inline ExprPtr nest(const LetSeq& seq) {
  ExprPtr body = seq.ret;
  for (auto it = seq.lets.rbegin(); it != seq.lets.rend(); ++it)
    body = let(it->var, it->value, body);
  return body;
}

inline FunctionPtr make_fn(std::string name, std::vector<VarPtr> params, const LetSeq& seq,
                           Form form = Form::ANF) {
  auto fn = std::make_shared<FunctionIR>();
  fn->name = std::move(name);
  fn->params = std::move(params);
  fn->body = nest(seq);
  fn->form = form;
  return fn;
}

/// Incremental ANF emitter used by graph-generation passes.
class AnfBuilder {
 public:
  explicit AnfBuilder(std::string prefix = "t") : prefix_(std::move(prefix)) {}

  void reserve_names(const FunctionIR& fn) {
    for (auto& p : fn.params) used_.insert(p->id);
    ExprPtr e = fn.body;
    while (e && e->kind == ExprKind::Let) {
      used_.insert(e->var->id);
      e = e->body;
    }
  }

  std::string fresh(const std::string& hint = "") {
    const std::string base = hint.empty() ? prefix_ : hint;
    while (true) {
      std::string cand = base + std::to_string(counter_++);
      if (!used_.count(cand)) {
        used_.insert(cand);
        return cand;
      }
    }
  }

  void reserve(const std::string& id) {
    used_.insert(id);
  }

  VarPtr emit(ExprPtr value, const std::string& hint = "", AttrMap attrs = {}) {
    auto v = make_var(fresh(hint), {}, std::move(attrs));
    seq_.lets.push_back({v, std::move(value)});
    return v;
  }

  void emit_bound(VarPtr v, ExprPtr value) {
    used_.insert(v->id);
    seq_.lets.push_back({std::move(v), std::move(value)});
  }

  LetSeq& seq() {
    return seq_;
  }

 private:
  std::string prefix_;
  std::set<std::string> used_;
  std::size_t counter_ = 0;
  LetSeq seq_;
};

// --- Deep clone ----------------------------------------------------------------

struct CloneMap {
  std::unordered_map<const Var*, VarPtr> vars;
  std::unordered_map<const Expr*, ExprPtr> exprs;
};

inline VarPtr clone_var(const VarPtr& v, CloneMap& m) {
  if (!v) return nullptr;
  auto it = m.vars.find(v.get());
  if (it != m.vars.end()) return it->second;
  auto nv = make_var(v->id, v->ty, v->attrs);
  m.vars.emplace(v.get(), nv);
  return nv;
}

inline ExprPtr clone_expr(const ExprPtr& e, CloneMap& m) {
  if (!e) return nullptr;
  auto it = m.exprs.find(e.get());
  if (it != m.exprs.end()) return it->second;  // preserves DAG sharing
  auto n = std::make_shared<Expr>();
  n->kind = e->kind;
  n->var = clone_var(e->var, m);
  n->op = e->op;
  n->call_attrs = e->call_attrs;
  n->index = e->index;
  n->cval = e->cval;
  n->closure = e->closure;  // closures are shared, not deep-cloned
  n->bind = clone_var(e->bind, m);
  n->ty = e->ty;
  m.exprs.emplace(e.get(), n);
  n->value = clone_expr(e->value, m);
  n->body = clone_expr(e->body, m);
  n->args.reserve(e->args.size());
  for (auto& a : e->args) n->args.push_back(clone_expr(a, m));
  return n;
}

inline FunctionPtr clone_fn(const FunctionIR& fn) {
  CloneMap m;
  auto n = std::make_shared<FunctionIR>();
  n->name = fn.name;
  n->form = fn.form;
  for (auto& p : fn.params) n->params.push_back(clone_var(p, m));
  n->body = clone_expr(fn.body, m);
  return n;
}

// --- ANF <-> Dataflow -----------------------------------------------------------

/// Converts well-formed ANF to a dataflow DAG. Each let becomes one node;
/// the node keeps the let var (id, type, attrs) on `bind` plus a dense
/// `order_index` attribute recording the let position.
inline FunctionPtr to_dataflow(const FunctionIR& fn) {
  check(fn.form == Form::ANF, "to_dataflow expects ANF input");
  auto src = clone_fn(fn);
  LetSeq seq = flatten(*src);

  std::unordered_map<std::string, ExprPtr> env;  // ids are unique per function
  for (auto& p : src->params) env.emplace(p->id, var_ref(p));

  auto resolve_arg = [&](const ExprPtr& a) -> ExprPtr {
    if (a->kind == ExprKind::VarRef) {
      auto it = env.find(a->var->id);
      check(it != env.end(), "use of undefined var %" + a->var->id);
      return it->second;
    }
    check(a->kind == ExprKind::Const, "non-atomic argument in ANF");
    return a;
  };

  std::int64_t order = 0;
  for (auto& lb : seq.lets) {
    ExprPtr node = lb.value;  // already a fresh clone; rewrite in place
    check(node->kind != ExprKind::Let, "nested let in ANF body");
    check(node->kind != ExprKind::VarRef, "alias let not allowed (let %a = %b)");
    for (auto& a : node->args) a = resolve_arg(a);
    node->bind = lb.var;
    node->bind->attrs[kOrderIndex] = order++;
    env.emplace(lb.var->id, node);
  }

  ExprPtr ret = seq.ret;
  if (ret->kind == ExprKind::VarRef) {
    ret = resolve_arg(ret);
  } else if (ret->kind == ExprKind::Tuple) {
    for (auto& a : ret->args) a = resolve_arg(a);
  } else {
    check(ret->kind == ExprKind::Const, "return must be var, tuple, or const");
  }

  auto out = std::make_shared<FunctionIR>();
  out->name = src->name;
  out->params = src->params;
  out->body = ret;
  out->form = Form::Dataflow;
  return out;
}

namespace detail {

inline void postorder(const ExprPtr& e, std::unordered_set<const Expr*>& seen,
                      std::vector<ExprPtr>& out) {
  if (!e || seen.count(e.get())) return;
  seen.insert(e.get());
  for (auto& a : e->args) postorder(a, seen, out);
  out.push_back(e);
}

}  // namespace detail

/// All interior nodes of a dataflow function (excludes param refs and inline
/// consts), in postorder of a deterministic DFS from the return expression.
inline std::vector<ExprPtr> dataflow_nodes(const FunctionIR& fn) {
  check(fn.form == Form::Dataflow, "dataflow_nodes expects dataflow form");
  std::unordered_set<const Expr*> seen;
  std::vector<ExprPtr> all;
  if (fn.body->kind == ExprKind::Tuple) {
    for (auto& a : fn.body->args) detail::postorder(a, seen, all);
  } else {
    detail::postorder(fn.body, seen, all);
  }
  std::vector<ExprPtr> nodes;
  for (auto& e : all) {
    if (e->kind == ExprKind::VarRef) continue;               // param leaf
    if (e->kind == ExprKind::Const && !e->bind) continue;    // inline const
    nodes.push_back(e);
  }
  return nodes;
}

/// Converts a dataflow DAG back to ANF. When every node carries `order_index`
/// the original let order is restored (and the attribute is consumed);
/// otherwise a deterministic topo sort ordered by node creation is used.
inline FunctionPtr to_anf(const FunctionIR& fn) {
  check(fn.form == Form::Dataflow, "to_anf expects dataflow input");
  auto src = clone_fn(fn);
  std::vector<ExprPtr> nodes = dataflow_nodes(*src);

  bool all_ordered = !nodes.empty();
  for (auto& n : nodes) {
    if (!n->bind || !has_attr(n->bind->attrs, kOrderIndex)) {
      all_ordered = false;
      break;
    }
  }

  std::vector<ExprPtr> order;
  if (all_ordered) {
    order = nodes;
    std::sort(order.begin(), order.end(), [](const ExprPtr& a, const ExprPtr& b) {
      return attr_int(a->bind->attrs, kOrderIndex, 0) < attr_int(b->bind->attrs, kOrderIndex, 0);
    });
  } else {
    // Kahn topological sort; ready set keyed by creation serial.
    std::unordered_map<const Expr*, int> pending;
    std::unordered_map<const Expr*, std::vector<ExprPtr>> consumers;
    std::set<std::pair<std::uint64_t, ExprPtr>> ready;
    auto is_node = [&](const ExprPtr& a) {
      return a->kind != ExprKind::VarRef && !(a->kind == ExprKind::Const && !a->bind);
    };
    for (auto& n : nodes) {
      int deps = 0;
      for (auto& a : n->args)
        if (is_node(a)) {
          ++deps;
          consumers[a.get()].push_back(n);
        }
      pending[n.get()] = deps;
      if (deps == 0) ready.insert({n->serial, n});
    }
    while (!ready.empty()) {
      ExprPtr n = ready.begin()->second;
      ready.erase(ready.begin());
      order.push_back(n);
      for (auto& c : consumers[n.get()])
        if (--pending[c.get()] == 0) ready.insert({c->serial, c});
    }
    check(order.size() == nodes.size(), "cycle detected in dataflow graph");
  }

  // Assign let vars: reuse bind vars, generate fresh names for new nodes.
  AnfBuilder names("t");
  for (auto& p : src->params) names.reserve(p->id);
  for (auto& n : order)
    if (n->bind) names.reserve(n->bind->id);

  std::unordered_map<const Expr*, VarPtr> bound;
  LetSeq seq;
  auto as_atom = [&](const ExprPtr& a) -> ExprPtr {
    if (a->kind == ExprKind::VarRef) return var_ref(a->var);
    if (a->kind == ExprKind::Const && !a->bind) return a;
    auto it = bound.find(a.get());
    check(it != bound.end(), "dataflow argument not yet emitted");
    return var_ref(it->second);
  };

  for (auto& n : order) {
    VarPtr v = n->bind ? n->bind : make_var(names.fresh());
    v->attrs.erase(kOrderIndex);  // position info is the let order again
    auto value = std::make_shared<Expr>(*n);
    value->bind = nullptr;
    value->args.clear();
    for (auto& a : n->args) value->args.push_back(as_atom(a));
    seq.lets.push_back({v, value});
    bound.emplace(n.get(), v);
  }

  if (src->body->kind == ExprKind::Tuple) {
    std::vector<ExprPtr> elems;
    for (auto& a : src->body->args) elems.push_back(as_atom(a));
    seq.ret = tuple(std::move(elems));
  } else {
    seq.ret = as_atom(src->body);
  }

  return make_fn(src->name, src->params, seq, Form::ANF);
}

// --- Well-formedness -----------------------------------------------------------

using OpPredicate = std::function<bool(const std::string&)>;

inline std::vector<std::string> check_wellformed(const FunctionIR& fn,
                                                 const OpPredicate& known_op = nullptr) {
  std::vector<std::string> diags;
  auto diag = [&](const std::string& msg) { diags.push_back(fn.name + ": " + msg); };

  std::set<std::string> defined;
  for (auto& p : fn.params) {
    if (!defined.insert(p->id).second) diag("duplicate parameter %" + p->id);
  }

  if (fn.form == Form::ANF) {
    auto check_atom = [&](const ExprPtr& a, const std::string& ctx) {
      if (a->kind == ExprKind::VarRef) {
        if (!defined.count(a->var->id)) diag("use of undefined var %" + a->var->id + " in " + ctx);
      } else if (a->kind != ExprKind::Const) {
        diag("non-atomic argument in " + ctx);
      }
    };
    ExprPtr e = fn.body;
    while (e && e->kind == ExprKind::Let) {
      const auto& v = e->var;
      const auto& val = e->value;
      std::string ctx = "let %" + v->id;
      switch (val->kind) {
        case ExprKind::Call:
          if (known_op && !known_op(val->op)) diag("unknown op " + val->op + " in " + ctx);
          [[fallthrough]];
        case ExprKind::ClosureCall:
          for (auto& a : val->args) check_atom(a, ctx);
          break;
        case ExprKind::TupleGet:
          check_atom(val->args[0], ctx);
          break;
        case ExprKind::Tuple:
          diag("tuple construction only allowed at function return (" + ctx + ")");
          break;
        case ExprKind::Const:
          break;
        case ExprKind::VarRef:
          diag("alias binding not allowed (" + ctx + ")");
          break;
        case ExprKind::Let:
          diag("nested let in value position (" + ctx + ")");
          break;
      }
      if (!defined.insert(v->id).second) diag("duplicate variable %" + v->id);
      e = e->body;
    }
    if (!e) {
      diag("missing return expression");
    } else if (e->kind == ExprKind::VarRef) {
      if (!defined.count(e->var->id)) diag("return of undefined var %" + e->var->id);
    } else if (e->kind == ExprKind::Tuple) {
      for (auto& a : e->args) check_atom(a, "return tuple");
    } else if (e->kind != ExprKind::Const) {
      diag("return must be a var, tuple of vars, or const");
    }
  } else {
    // Dataflow: no lets; acyclicity; args resolve to nodes/params/consts.
    std::unordered_set<const Expr*> onpath, done;
    std::function<void(const ExprPtr&)> visit = [&](const ExprPtr& e) {
      if (!e || done.count(e.get())) return;
      if (onpath.count(e.get())) {
        diag("cycle detected");
        return;
      }
      if (e->kind == ExprKind::Let) diag("let node in dataflow form");
      if (e->kind == ExprKind::Call && known_op && !known_op(e->op)) diag("unknown op " + e->op);
      if (e->kind == ExprKind::VarRef && !defined.count(e->var->id))
        diag("dangling reference %" + e->var->id);
      onpath.insert(e.get());
      for (auto& a : e->args) visit(a);
      onpath.erase(e.get());
      done.insert(e.get());
    };
    if (fn.body->kind == ExprKind::Tuple) {
      for (auto& a : fn.body->args) visit(a);
    } else {
      visit(fn.body);
    }
  }
  return diags;
}

inline std::vector<std::string> check_wellformed(const ModuleIR& m,
                                                 const OpPredicate& known_op = nullptr) {
  std::vector<std::string> diags;
  if (!m.find(m.entry)) diags.push_back("entry function '" + m.entry + "' missing");
  for (auto& [name, fn] : m.functions) {
    auto d = check_wellformed(*fn, known_op);
    diags.insert(diags.end(), d.begin(), d.end());
  }
  return diags;
}

// --- Structural equality ---------------------------------------------------------

inline bool structural_equal(const ExprPtr& a, const ExprPtr& b);

inline bool attrs_equal(const AttrMap& a, const AttrMap& b) {
  return a == b;
}

inline bool var_equal(const VarPtr& a, const VarPtr& b) {
  if (!a || !b) return a == b;
  return a->id == b->id && attrs_equal(a->attrs, b->attrs);
}

inline bool structural_equal(const ExprPtr& a, const ExprPtr& b) {
  if (!a || !b) return a == b;
  if (a->kind != b->kind) return false;
  switch (a->kind) {
    case ExprKind::VarRef:
      return a->var->id == b->var->id;
    case ExprKind::Const:
      return a->cval.is_scalar == b->cval.is_scalar && a->cval.value.bit_equal(b->cval.value);
    case ExprKind::Call:
    case ExprKind::ClosureCall: {
      if (a->op != b->op || a->args.size() != b->args.size()) return false;
      if (!attrs_equal(a->call_attrs, b->call_attrs)) return false;
      for (size_t i = 0; i < a->args.size(); ++i)
        if (!structural_equal(a->args[i], b->args[i])) return false;
      return true;
    }
    case ExprKind::Tuple: {
      if (a->args.size() != b->args.size()) return false;
      for (size_t i = 0; i < a->args.size(); ++i)
        if (!structural_equal(a->args[i], b->args[i])) return false;
      return true;
    }
    case ExprKind::TupleGet:
      return a->index == b->index && structural_equal(a->args[0], b->args[0]);
    case ExprKind::Let:
      return var_equal(a->var, b->var) && structural_equal(a->value, b->value) &&
             structural_equal(a->body, b->body);
  }
  return false;
}

inline bool structural_equal(const FunctionIR& a, const FunctionIR& b) {
  if (a.name != b.name || a.form != b.form || a.params.size() != b.params.size()) return false;
  for (size_t i = 0; i < a.params.size(); ++i) {
    if (a.params[i]->id != b.params[i]->id) return false;
    if (!(a.params[i]->ty == b.params[i]->ty)) return false;
  }
  return structural_equal(a.body, b.body);
}

inline bool structural_equal(const ModuleIR& a, const ModuleIR& b) {
  if (a.entry != b.entry || a.functions.size() != b.functions.size()) return false;
  for (size_t i = 0; i < a.functions.size(); ++i) {
    if (a.functions[i].first != b.functions[i].first) return false;
    if (!structural_equal(*a.functions[i].second, *b.functions[i].second)) return false;
  }
  return true;
}

// --- Small analyses --------------------------------------------------------------

/// var id -> indexes of lets using it (return uses index = lets.size()).
inline std::map<std::string, std::vector<int>> use_sites(const LetSeq& seq) {
  std::map<std::string, std::vector<int>> uses;
  auto scan = [&](const ExprPtr& e, int idx) {
    if (e->kind == ExprKind::VarRef) uses[e->var->id].push_back(idx);
  };
  for (size_t i = 0; i < seq.lets.size(); ++i) {
    auto& val = seq.lets[i].value;
    for (auto& a : val->args) scan(a, static_cast<int>(i));
  }
  int ret_idx = static_cast<int>(seq.lets.size());
  if (seq.ret->kind == ExprKind::VarRef) {
    scan(seq.ret, ret_idx);
  } else if (seq.ret->kind == ExprKind::Tuple) {
    for (auto& a : seq.ret->args) scan(a, ret_idx);
  }
  return uses;
}

}  // namespace trainc::ir
