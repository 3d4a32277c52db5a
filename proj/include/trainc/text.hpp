// SPDX-License-Identifier: Apache-2.0
//
// The textual IR format. This is the single interchange format; the printer
// is canonical, so print(parse(print(m))) == print(m) byte for byte.
//
//   fn main(%x: f32[2,2]) {
//     let %y @{note="hi"} = tanh(%x);
//     let %z = opt.matmul(%y, %y);
//     %z
//   }
//
// Call attributes are persisted as let attributes under an "op." prefix
// (e.g. @{op.lr=0.1}); parameter attrs are pipeline metadata and are not
// part of the text format.

#pragma once

#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include "trainc/ir.hpp"

namespace trainc::ir {

// --- number formatting -------------------------------------------------------

inline std::string format_float(float v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string format_double_attr(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  // Keep the int/float distinction through a reparse.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string quote_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '"';
  return out;
}

// --- printer -------------------------------------------------------------------

class Printer {
 public:
  std::string module(const ModuleIR& m) {
    std::string out;
    bool first = true;
    for (auto& [name, fn] : m.functions) {
      if (!first) out += '\n';
      first = false;
      out += function(*fn);
    }
    return out;
  }

  std::string function(const FunctionIR& fn) {
    if (fn.form == Form::Dataflow) return function(*to_anf(fn));
    std::string out = "fn " + fn.name + "(";
    for (size_t i = 0; i < fn.params.size(); ++i) {
      if (i) out += ", ";
      out += "%" + fn.params[i]->id + ": " + type_to_string(fn.params[i]->ty.tensor());
    }
    out += ") {\n";
    LetSeq seq = flatten(fn);
    for (auto& lb : seq.lets) {
      out += "  let %" + lb.var->id;
      AttrMap merged = lb.var->attrs;
      for (auto& [k, v] : lb.value->call_attrs) merged.emplace("op." + k, v);
      if (!merged.empty()) out += " @" + attrs(merged);
      out += " = " + expr(*lb.value) + ";\n";
    }
    out += "  " + expr(*seq.ret) + "\n}\n";
    return out;
  }

  std::string expr(const Expr& e) {
    switch (e.kind) {
      case ExprKind::VarRef:
        return "%" + e.var->id;
      case ExprKind::Const:
        return constant(e.cval);
      case ExprKind::Call:
      case ExprKind::ClosureCall: {
        std::string s = e.op + "(";
        for (size_t i = 0; i < e.args.size(); ++i) {
          if (i) s += ", ";
          s += expr(*e.args[i]);
        }
        return s + ")";
      }
      case ExprKind::Tuple: {
        std::string s = "(";
        for (size_t i = 0; i < e.args.size(); ++i) {
          if (i) s += ", ";
          s += expr(*e.args[i]);
        }
        return s + ")";
      }
      case ExprKind::TupleGet:
        return expr(*e.args[0]) + "." + std::to_string(e.index);
      case ExprKind::Let:
        throw Error("unexpected let in expression position");
    }
    return "";
  }

  std::string attrs(const AttrMap& m) {
    std::string s = "{";
    bool first = true;
    for (auto& [k, v] : m) {
      if (!first) s += ", ";
      first = false;
      s += k + "=";
      if (auto* i = std::get_if<std::int64_t>(&v)) {
        s += std::to_string(*i);
      } else if (auto* d = std::get_if<double>(&v)) {
        s += format_double_attr(*d);
      } else {
        s += quote_string(std::get<std::string>(v));
      }
    }
    return s + "}";
  }

  std::string constant(const Constant& c) {
    if (c.is_scalar) return format_float(c.value.data[0]);
    std::string s = "tensor(" + type_to_string(c.value.ty) + ":";
    for (size_t i = 0; i < c.value.data.size(); ++i) {
      s += i ? ", " : " ";
      s += format_float(c.value.data[i]);
    }
    return s + ")";
  }
};

inline std::string print_text(const ModuleIR& m) {
  return Printer().module(m);
}

inline std::string print_text(const FunctionIR& fn) {
  return Printer().function(fn);
}

// --- lexer -----------------------------------------------------------------------

enum class Tok {
  Ident,    // fn / let / tensor / op names (may contain '.')
  Percent,  // %
  Number,
  String,
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Comma,
  Semi,
  Colon,
  Eq,
  At,
  Dot,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  int line = 1, col = 1;
  bool is_float = false;  // Number: had '.', 'e', or 'E'
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  Token next() {
    skip_ws();
    Token t;
    t.line = line_;
    t.col = col_;
    if (pos_ >= src_.size()) {
      t.kind = Tok::End;
      return t;
    }
    char c = src_[pos_];
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      size_t start = pos_;
      while (pos_ < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[pos_])) ||
                                    src_[pos_] == '_' || src_[pos_] == '.')) {
        advance();
      }
      // Trailing dot belongs to punctuation, not the identifier.
      while (pos_ > start && src_[pos_ - 1] == '.') {
        --pos_;
        --col_;
      }
      t.kind = Tok::Ident;
      t.text = std::string(src_.substr(start, pos_ - start));
      return t;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+') {
      size_t start = pos_;
      advance();
      bool is_float = false;
      while (pos_ < src_.size()) {
        char d = src_[pos_];
        if (std::isdigit(static_cast<unsigned char>(d))) {
          advance();
        } else if (d == '.' && pos_ + 1 < src_.size() &&
                   std::isdigit(static_cast<unsigned char>(src_[pos_ + 1]))) {
          is_float = true;
          advance();
        } else if (d == 'e' || d == 'E') {
          is_float = true;
          advance();
          if (pos_ < src_.size() && (src_[pos_] == '-' || src_[pos_] == '+')) advance();
        } else if ((d == 'i' || d == 'n') && matches_special(start)) {
          // inf / nan continuation handled below
          break;
        } else {
          break;
        }
      }
      // Special literals: inf, -inf, nan.
      if (pos_ < src_.size() && (src_[pos_] == 'i' || src_[pos_] == 'n')) {
        size_t p = pos_;
        while (p < src_.size() && std::isalpha(static_cast<unsigned char>(src_[p]))) ++p;
        std::string_view word = src_.substr(pos_, p - pos_);
        if (word == "inf" || word == "nan") {
          while (pos_ < p) advance();
          is_float = true;
        }
      }
      t.kind = Tok::Number;
      t.text = std::string(src_.substr(start, pos_ - start));
      t.is_float = is_float;
      return t;
    }
    if (c == '"') {
      advance();
      std::string s;
      while (pos_ < src_.size() && src_[pos_] != '"') {
        char d = src_[pos_];
        if (d == '\\') {
          advance();
          if (pos_ >= src_.size()) throw parse_error("unterminated string", t);
          char esc = src_[pos_];
          switch (esc) {
            case '"': s += '"'; break;
            case '\\': s += '\\'; break;
            case 'n': s += '\n'; break;
            case 't': s += '\t'; break;
            default: throw parse_error(std::string("unknown escape \\") + esc, t);
          }
          advance();
        } else {
          s += d;
          advance();
        }
      }
      if (pos_ >= src_.size()) throw parse_error("unterminated string", t);
      advance();  // closing quote
      t.kind = Tok::String;
      t.text = s;
      return t;
    }
    advance();
    switch (c) {
      case '%': t.kind = Tok::Percent; return t;
      case '(': t.kind = Tok::LParen; return t;
      case ')': t.kind = Tok::RParen; return t;
      case '{': t.kind = Tok::LBrace; return t;
      case '}': t.kind = Tok::RBrace; return t;
      case '[': t.kind = Tok::LBracket; return t;
      case ']': t.kind = Tok::RBracket; return t;
      case ',': t.kind = Tok::Comma; return t;
      case ';': t.kind = Tok::Semi; return t;
      case ':': t.kind = Tok::Colon; return t;
      case '=': t.kind = Tok::Eq; return t;
      case '@': t.kind = Tok::At; return t;
      case '.': t.kind = Tok::Dot; return t;
      default: throw parse_error(std::string("unexpected character '") + c + "'", t);
    }
  }

  static ParseError parse_error(const std::string& msg, const Token& at) {
    return ParseError(std::to_string(at.line) + ":" + std::to_string(at.col) + ": " + msg);
  }

 private:
  bool matches_special(size_t) const {
    return false;
  }
  void skip_ws() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {  // comments to end of line
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        advance();
      } else {
        break;
      }
    }
  }
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  std::string_view src_;
  size_t pos_ = 0;
  int line_ = 1, col_ = 1;
};

// --- parser ----------------------------------------------------------------------

class Parser {
 public:
  explicit Parser(std::string_view src) : lex_(src) {
    bump();
  }

  ModuleIR module() {
    ModuleIR m;
    while (cur_.kind != Tok::End) {
      auto fn = function();
      if (m.find(fn->name)) throw err("duplicate function " + fn->name);
      m.functions.emplace_back(fn->name, fn);
    }
    if (m.functions.empty()) throw err("empty module");
    if (!m.find("main")) m.entry = m.functions.front().first;
    link_closures(m);
    return m;
  }

 private:
  FunctionPtr function() {
    expect_ident("fn");
    std::string name = expect(Tok::Ident).text;
    expect(Tok::LParen);
    std::vector<VarPtr> params;
    std::set<std::string> ids;
    if (cur_.kind != Tok::RParen) {
      while (true) {
        expect(Tok::Percent);
        std::string pid = expect(Tok::Ident).text;
        if (!ids.insert(pid).second) throw err("duplicate variable id %" + pid);
        expect(Tok::Colon);
        params.push_back(make_var(pid, tensor_type()));
        if (cur_.kind != Tok::Comma) break;
        bump();
      }
    }
    expect(Tok::RParen);
    expect(Tok::LBrace);

    LetSeq seq;
    while (cur_.kind == Tok::Ident && cur_.text == "let") {
      bump();
      expect(Tok::Percent);
      std::string vid = expect(Tok::Ident).text;
      if (!ids.insert(vid).second) throw err("duplicate variable id %" + vid);
      AttrMap var_attrs;
      if (cur_.kind == Tok::At) {
        bump();
        var_attrs = attrs();
      }
      expect(Tok::Eq);
      ExprPtr value = expression();
      expect(Tok::Semi);
      // split off op.* keys into call attributes
      AttrMap call_attrs;
      for (auto it = var_attrs.begin(); it != var_attrs.end();) {
        if (it->first.rfind("op.", 0) == 0) {
          call_attrs.emplace(it->first.substr(3), it->second);
          it = var_attrs.erase(it);
        } else {
          ++it;
        }
      }
      if (!call_attrs.empty()) {
        if (value->kind != ExprKind::Call && value->kind != ExprKind::ClosureCall)
          throw err("op.* attrs on a non-call binding");
        value->call_attrs = std::move(call_attrs);
      }
      seq.lets.push_back({make_var(vid, {}, std::move(var_attrs)), value});
    }
    if (cur_.kind == Tok::RBrace) throw err("missing return expression");
    seq.ret = expression();
    expect(Tok::RBrace);

    auto fn = make_fn(name, std::move(params), seq, Form::ANF);
    return fn;
  }

  TensorType tensor_type() {
    Token t = expect(Tok::Ident);
    TensorType ty;
    if (t.text == "f32") {
      ty.dtype = DType::F32;
    } else if (t.text == "f16") {
      ty.dtype = DType::F16;
    } else {
      throw err("unknown dtype " + t.text);
    }
    expect(Tok::LBracket);
    while (true) {
      Token d = expect(Tok::Number);
      if (d.is_float) throw err("dimension must be an integer");
      std::int64_t dim = 0;
      std::from_chars(d.text.data(), d.text.data() + d.text.size(), dim);
      if (dim < 1) throw err("dimension must be >= 1 (dynamic shapes are not supported)");
      ty.shape.push_back(dim);
      if (cur_.kind != Tok::Comma) break;
      bump();
    }
    expect(Tok::RBracket);
    return ty;
  }

  ExprPtr expression() {
    if (cur_.kind == Tok::Percent) {
      bump();
      std::string id = expect(Tok::Ident).text;
      ExprPtr v = var_ref(make_var(id));
      if (cur_.kind == Tok::Dot) {
        bump();
        Token idx = expect(Tok::Number);
        if (idx.is_float) throw err("tuple index must be an integer");
        int i = 0;
        std::from_chars(idx.text.data(), idx.text.data() + idx.text.size(), i);
        return tuple_get(v, i);
      }
      return v;
    }
    if (cur_.kind == Tok::Number) {
      Token n = bump();
      float f = 0.0f;
      parse_float(n, f);
      return const_scalar(f);
    }
    if (cur_.kind == Tok::LParen) {  // tuple
      bump();
      std::vector<ExprPtr> elems;
      if (cur_.kind != Tok::RParen) {
        while (true) {
          elems.push_back(expression());
          if (cur_.kind != Tok::Comma) break;
          bump();
        }
      }
      expect(Tok::RParen);
      return tuple(std::move(elems));
    }
    if (cur_.kind == Tok::Ident) {
      if (cur_.text == "tensor") return tensor_const();
      std::string op = bump().text;
      expect(Tok::LParen);
      std::vector<ExprPtr> args;
      if (cur_.kind != Tok::RParen) {
        while (true) {
          args.push_back(expression());
          if (cur_.kind != Tok::Comma) break;
          bump();
        }
      }
      expect(Tok::RParen);
      return call(std::move(op), std::move(args));
    }
    throw err("expected expression");
  }

  ExprPtr tensor_const() {
    bump();  // 'tensor'
    expect(Tok::LParen);
    if (cur_.kind == Tok::String) {
      std::string path = bump().text;
      expect(Tok::RParen);
      Tensor t = load_tensor(path);
      return const_tensor(std::move(t));
    }
    TensorType ty = tensor_type();
    expect(Tok::Colon);
    std::vector<float> vals;
    while (true) {
      Token n = expect(Tok::Number);
      float f;
      parse_float(n, f);
      vals.push_back(f);
      if (cur_.kind != Tok::Comma) break;
      bump();
    }
    expect(Tok::RParen);
    if (static_cast<std::int64_t>(vals.size()) != ty.numel())
      throw err("tensor literal has wrong element count");
    Tensor t(ty, std::move(vals));
    t.quantize();
    return const_tensor(std::move(t));
  }

  AttrMap attrs() {
    expect(Tok::LBrace);
    AttrMap m;
    while (true) {
      std::string key = expect(Tok::Ident).text;
      expect(Tok::Eq);
      if (cur_.kind == Tok::String) {
        m[key] = bump().text;
      } else if (cur_.kind == Tok::Number) {
        Token n = bump();
        if (n.is_float) {
          double d = 0;
          auto res = std::from_chars(n.text.data(), n.text.data() + n.text.size(), d);
          if (res.ec != std::errc()) d = parse_special(n.text);
          m[key] = d;
        } else {
          std::int64_t i = 0;
          std::from_chars(n.text.data(), n.text.data() + n.text.size(), i);
          m[key] = i;
        }
      } else {
        throw err("attr value must be a number or string");
      }
      if (cur_.kind != Tok::Comma) break;
      bump();
    }
    expect(Tok::RBrace);
    return m;
  }

  void parse_float(const Token& n, float& out) {
    auto res = std::from_chars(n.text.data(), n.text.data() + n.text.size(), out);
    if (res.ec != std::errc() || res.ptr != n.text.data() + n.text.size())
      out = static_cast<float>(parse_special(n.text));
  }

  static double parse_special(const std::string& s) {
    bool neg = !s.empty() && s[0] == '-';
    std::string_view body(s);
    if (neg || (!s.empty() && s[0] == '+')) body = body.substr(1);
    if (body == "inf") return neg ? -INFINITY : INFINITY;
    if (body == "nan") return NAN;
    throw ParseError("bad numeric literal: " + s);
  }

  // Calls whose name matches a module function become closure calls.
  static void link_closures(ModuleIR& m) {
    for (auto& [name, fn] : m.functions) {
      std::function<void(ExprPtr&)> walk = [&](ExprPtr& e) {
        if (!e) return;
        if (e->kind == ExprKind::Call) {
          if (auto callee = m.find(e->op)) {
            e->kind = ExprKind::ClosureCall;
            e->closure = callee;
          }
        }
        if (e->value) walk(e->value);
        if (e->body) walk(e->body);
        for (auto& a : e->args) walk(a);
      };
      walk(fn->body);
    }
  }

  Token bump() {
    Token t = cur_;
    cur_ = lex_.next();
    return t;
  }
  Token expect(Tok k) {
    if (cur_.kind != k) throw err("unexpected token '" + describe(cur_) + "'");
    return bump();
  }
  void expect_ident(const std::string& word) {
    if (cur_.kind != Tok::Ident || cur_.text != word) throw err("expected '" + word + "'");
    bump();
  }
  static std::string describe(const Token& t) {
    if (t.kind == Tok::End) return "<eof>";
    if (!t.text.empty()) return t.text;
    static const char* names[] = {"ident", "%", "number", "string", "(", ")", "{", "}",
                                  "[",     "]", ",",      ";",      ":", "=", "@", ".", "<eof>"};
    return names[static_cast<int>(t.kind)];
  }
  ParseError err(const std::string& msg) {
    return Lexer::parse_error(msg, cur_);
  }

  Lexer lex_;
  Token cur_;
};

inline ModuleIR parse_text(std::string_view source) {
  return Parser(source).module();
}

}  // namespace trainc::ir
