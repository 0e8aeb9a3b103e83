#include "sfi/fn_expr.h"

#include <algorithm>

namespace sfi {

namespace {

std::string op_symbol(FnOp op) {
  switch (op) {
    case FnOp::Or: return "||";
    case FnOp::And: return "&&";
    case FnOp::Eq: return "==";
    case FnOp::Ne: return "!=";
    case FnOp::Lt: return "<";
    case FnOp::Le: return "<=";
    case FnOp::Add: return "+";
    case FnOp::Sub: return "-";
    case FnOp::Mul: return "*";
    case FnOp::Min: return "min";
    case FnOp::Max: return "max";
  }
  return "?";
}

[[noreturn]] void mismatch(FnOp op, const Value& a, const Value& b) {
  throw EvalError("type mismatch: '" + op_symbol(op) + "' applied to " + kind_name(a.kind()) + " and " +
                  kind_name(b.kind()));
}

Value arith(FnOp op, const Value& a, const Value& b) {
  if (!a.is_numeric() || !b.is_numeric()) mismatch(op, a, b);
  if (a.is_int() && b.is_int()) {
    std::int64_t x = a.as_int(), y = b.as_int(), out = 0;
    bool overflow = false;
    switch (op) {
      case FnOp::Add: overflow = __builtin_add_overflow(x, y, &out); break;
      case FnOp::Sub: overflow = __builtin_sub_overflow(x, y, &out); break;
      case FnOp::Mul: overflow = __builtin_mul_overflow(x, y, &out); break;
      default: break;
    }
    if (overflow) throw EvalError("integer overflow in '" + op_symbol(op) + "'");
    return Value::integer(out);
  }
  try {
    Rational x = a.to_rational(), y = b.to_rational();
    switch (op) {
      case FnOp::Add: return Value::rational(x + y);
      case FnOp::Sub: return Value::rational(x - y);
      default: return Value::rational(x * y);
    }
  } catch (const ArithmeticOverflow&) {
    throw EvalError("rational overflow in '" + op_symbol(op) + "'");
  }
}

int precedence(const FnExpr& e) {
  switch (e.kind()) {
    case FnExpr::Kind::If: return 0;
    case FnExpr::Kind::Not: return 6;
    case FnExpr::Kind::Binary:
      switch (e.op()) {
        case FnOp::Or: return 1;
        case FnOp::And: return 2;
        case FnOp::Eq:
        case FnOp::Ne:
        case FnOp::Lt:
        case FnOp::Le: return 3;
        case FnOp::Add:
        case FnOp::Sub: return 4;
        case FnOp::Mul: return 5;
        case FnOp::Min:
        case FnOp::Max: return 7;
      }
      return 7;
    default: return 7;
  }
}

void print_expr(const FnExpr& e, const std::vector<std::string>& params, int min_prec, std::string& out) {
  bool paren = precedence(e) < min_prec;
  if (paren) out += "(";
  switch (e.kind()) {
    case FnExpr::Kind::Literal:
      out += e.value().literal();
      break;
    case FnExpr::Kind::Param:
      out += params.at(e.index());
      break;
    case FnExpr::Kind::Not:
      out += "!";
      print_expr(*e.children()[0], params, 6, out);
      break;
    case FnExpr::Kind::If:
      out += "if ";
      print_expr(*e.children()[0], params, 0, out);
      out += " then ";
      print_expr(*e.children()[1], params, 0, out);
      out += " else ";
      print_expr(*e.children()[2], params, 0, out);
      break;
    case FnExpr::Kind::Binary: {
      if (e.op() == FnOp::Min || e.op() == FnOp::Max) {
        out += op_symbol(e.op()) + "(";
        print_expr(*e.children()[0], params, 0, out);
        out += ", ";
        print_expr(*e.children()[1], params, 0, out);
        out += ")";
        break;
      }
      int p = precedence(e);
      bool comparison = p == 3;
      print_expr(*e.children()[0], params, comparison ? p + 1 : p, out);
      out += " " + op_symbol(e.op()) + " ";
      print_expr(*e.children()[1], params, p + 1, out);
      break;
    }
  }
  if (paren) out += ")";
}

}  // namespace

std::shared_ptr<const FnExpr> FnExpr::literal(Value v) {
  auto e = std::make_shared<FnExpr>();
  e->kind_ = Kind::Literal;
  e->value_ = std::move(v);
  return e;
}

std::shared_ptr<const FnExpr> FnExpr::param(std::size_t index) {
  auto e = std::make_shared<FnExpr>();
  e->kind_ = Kind::Param;
  e->index_ = index;
  return e;
}

std::shared_ptr<const FnExpr> FnExpr::negation(std::shared_ptr<const FnExpr> c) {
  auto e = std::make_shared<FnExpr>();
  e->kind_ = Kind::Not;
  e->children_ = {std::move(c)};
  return e;
}

std::shared_ptr<const FnExpr> FnExpr::binary(FnOp op, std::shared_ptr<const FnExpr> l,
                                             std::shared_ptr<const FnExpr> r) {
  auto e = std::make_shared<FnExpr>();
  e->kind_ = Kind::Binary;
  e->op_ = op;
  e->children_ = {std::move(l), std::move(r)};
  return e;
}

std::shared_ptr<const FnExpr> FnExpr::if_then_else(std::shared_ptr<const FnExpr> c,
                                                   std::shared_ptr<const FnExpr> t,
                                                   std::shared_ptr<const FnExpr> f) {
  auto e = std::make_shared<FnExpr>();
  e->kind_ = Kind::If;
  e->children_ = {std::move(c), std::move(t), std::move(f)};
  return e;
}

Value FnExpr::eval(std::span<const Value> args) const {
  switch (kind_) {
    case Kind::Literal:
      return value_;
    case Kind::Param:
      if (index_ >= args.size()) throw EvalError("parameter index out of range");
      return args[index_];
    case Kind::Not: {
      Value v = children_[0]->eval(args);
      if (!v.is_bool()) throw EvalError("type mismatch: '!' applied to " + kind_name(v.kind()));
      return Value::boolean(!v.as_bool());
    }
    case Kind::If: {
      Value c = children_[0]->eval(args);
      if (!c.is_bool()) throw EvalError("type mismatch: 'if' condition is " + kind_name(c.kind()));
      return c.as_bool() ? children_[1]->eval(args) : children_[2]->eval(args);
    }
    case Kind::Binary:
      break;
  }
  Value a = children_[0]->eval(args);
  Value b = children_[1]->eval(args);
  switch (op_) {
    case FnOp::Or:
    case FnOp::And:
      if (!a.is_bool() || !b.is_bool()) mismatch(op_, a, b);
      return Value::boolean(op_ == FnOp::Or ? (a.as_bool() || b.as_bool()) : (a.as_bool() && b.as_bool()));
    case FnOp::Eq:
    case FnOp::Ne: {
      bool eq = (a.is_numeric() && b.is_numeric()) ? a.to_rational() == b.to_rational() : a == b;
      return Value::boolean(op_ == FnOp::Eq ? eq : !eq);
    }
    case FnOp::Lt:
    case FnOp::Le: {
      if (!a.is_numeric() || !b.is_numeric()) mismatch(op_, a, b);
      auto c = a.to_rational() <=> b.to_rational();
      return Value::boolean(op_ == FnOp::Lt ? c < 0 : c <= 0);
    }
    case FnOp::Add:
    case FnOp::Sub:
    case FnOp::Mul:
      return arith(op_, a, b);
    case FnOp::Min:
    case FnOp::Max: {
      if (!a.is_numeric() || !b.is_numeric()) mismatch(op_, a, b);
      bool a_less = a.to_rational() < b.to_rational();
      if (op_ == FnOp::Min) return a_less ? a : b;
      return a_less ? b : a;
    }
  }
  return a;
}

std::size_t FnExpr::arity_needed() const {
  std::size_t n = kind_ == Kind::Param ? index_ + 1 : 0;
  for (const auto& c : children_) n = std::max(n, c->arity_needed());
  return n;
}

bool operator==(const FnExpr& a, const FnExpr& b) {
  if (a.kind_ != b.kind_) return false;
  switch (a.kind_) {
    case FnExpr::Kind::Literal:
      return a.value_ == b.value_;
    case FnExpr::Kind::Param:
      return a.index_ == b.index_;
    case FnExpr::Kind::Binary:
      if (a.op_ != b.op_) return false;
      break;
    default:
      break;
  }
  if (a.children_.size() != b.children_.size()) return false;
  for (std::size_t i = 0; i < a.children_.size(); ++i)
    if (!(*a.children_[i] == *b.children_[i])) return false;
  return true;
}

Value Lambda::operator()(std::span<const Value> args) const { return eval_fn(*this, args); }

bool operator==(const Lambda& a, const Lambda& b) {
  if (a.params != b.params) return false;
  if (!a.body || !b.body) return a.body == b.body;
  return *a.body == *b.body;
}

Value eval_fn(const Lambda& f, std::span<const Value> args) {
  if (args.size() != f.params.size())
    throw EvalError("arity mismatch: function takes " + std::to_string(f.params.size()) + " arguments, got " +
                    std::to_string(args.size()));
  return f.body->eval(args);
}

std::string print_lambda(const Lambda& f) {
  std::string out = "(";
  for (std::size_t i = 0; i < f.params.size(); ++i) {
    if (i) out += ", ";
    out += f.params[i];
  }
  out += ") => ";
  print_expr(*f.body, f.params, 0, out);
  return out;
}

}  // namespace sfi
