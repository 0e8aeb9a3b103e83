#include "sfi/parser.h"

#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace sfi {

namespace {

constexpr int kMaxNesting = 200;

enum class Tok {
  Name, Number, Symbol,
  Assign, Arrow, LParen, RParen, LBrace, RBrace, Comma, Colon, Slash,
  OrOr, AndAnd, Bang, EqEq, NotEq, Less, LessEq, Plus, Minus, Star,
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int column = 1;
};

std::string describe(const Token& t) {
  if (t.kind == Tok::End) return "end of input";
  return "'" + t.text + "'";
}

struct SyntaxFailure {
  Diagnostic diag;
};

class Lexer {
 public:
  Lexer(std::string_view text, std::string file) : text_(text), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    while (true) {
      skip_space();
      Token t;
      t.line = line_;
      t.column = col_;
      if (pos_ >= text_.size()) {
        out.push_back(t);
        return out;
      }
      char c = text_[pos_];
      if (is_alpha(c)) {
        t.kind = Tok::Name;
        while (pos_ < text_.size() && (is_alpha(text_[pos_]) || is_digit(text_[pos_]))) t.text += take();
      } else if (is_digit(c)) {
        t.kind = Tok::Number;
        lex_number(t);
      } else if (c == '`') {
        t.kind = Tok::Symbol;
        take();
        while (pos_ < text_.size() && text_[pos_] != '`' && text_[pos_] != '\n') t.text += take();
        if (pos_ >= text_.size() || text_[pos_] != '`') fail(t, "unterminated symbol literal");
        take();
        if (t.text.empty()) fail(t, "empty symbol literal");
      } else {
        lex_punct(t);
      }
      out.push_back(std::move(t));
    }
  }

 private:
  static bool is_alpha(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
  static bool is_digit(char c) { return c >= '0' && c <= '9'; }

  [[noreturn]] void fail(const Token& at, const std::string& msg) {
    throw SyntaxFailure{Diagnostic{Diagnostic::Kind::SyntaxError, file_, at.line, at.column, msg}};
  }

  char take() {
    char c = text_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  char peek(std::size_t ahead = 0) const { return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0'; }

  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        take();
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') take();
      } else {
        break;
      }
    }
  }

  void lex_number(Token& t) {
    while (is_digit(peek())) t.text += take();
    if (peek() == '.' && is_digit(peek(1))) {
      t.text += take();
      while (is_digit(peek())) t.text += take();
    }
    if ((peek() == 'e' || peek() == 'E') &&
        (is_digit(peek(1)) || ((peek(1) == '-' || peek(1) == '+') && is_digit(peek(2))))) {
      t.text += take();
      if (peek() == '-' || peek() == '+') t.text += take();
      while (is_digit(peek())) t.text += take();
    }
  }

  void lex_punct(Token& t) {
    char c = peek();
    char d = peek(1);
    auto two = [&](Tok k) {
      t.kind = k;
      t.text += take();
      t.text += take();
    };
    auto one = [&](Tok k) {
      t.kind = k;
      t.text += take();
    };
    switch (c) {
      case '=':
        if (d == '=') return two(Tok::EqEq);
        if (d == '>') return two(Tok::Arrow);
        return one(Tok::Assign);
      case '!':
        if (d == '=') return two(Tok::NotEq);
        return one(Tok::Bang);
      case '<':
        if (d == '=') return two(Tok::LessEq);
        return one(Tok::Less);
      case '&':
        if (d == '&') return two(Tok::AndAnd);
        break;
      case '|':
        if (d == '|') return two(Tok::OrOr);
        break;
      case '(': return one(Tok::LParen);
      case ')': return one(Tok::RParen);
      case '{': return one(Tok::LBrace);
      case '}': return one(Tok::RBrace);
      case ',': return one(Tok::Comma);
      case ':': return one(Tok::Colon);
      case '/': return one(Tok::Slash);
      case '+': return one(Tok::Plus);
      case '-': return one(Tok::Minus);
      case '*': return one(Tok::Star);
      default:
        break;
    }
    std::string shown;
    unsigned char u = static_cast<unsigned char>(c);
    if (u >= 0x20 && u < 0x7f) {
      shown = std::string(1, c);
    } else {
      char buf[8];
      std::snprintf(buf, sizeof buf, "\\x%02x", u);
      shown = buf;
    }
    fail(t, "unexpected character '" + shown + "'");
  }

  std::string_view text_;
  std::string file_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

const std::set<std::string>& keywords() {
  static const std::set<std::string> k = {"flip", "categorical", "uniform", "apply", "chain", "true",
                                          "false", "if", "then", "else", "min", "max"};
  return k;
}

class Parser {
 public:
  Parser(std::vector<Token> tokens, std::string file) : toks_(std::move(tokens)), file_(std::move(file)) {}

  Program parse_model() {
    std::vector<Definition> defs;
    std::set<std::string> available;
    std::set<std::string> defined;
    do {
      defs.push_back(parse_def(available, defined));
    } while (cur().kind != Tok::End);
    if (!semantic_.empty()) throw ParseError(semantic_);
    return Program({}, std::move(defs));
  }

 private:
  const Token& cur() const { return toks_[pos_]; }
  const Token& next() const { return toks_[std::min(pos_ + 1, toks_.size() - 1)]; }
  Token advance() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

  [[noreturn]] void fail(const Token& at, const std::string& msg) {
    throw SyntaxFailure{Diagnostic{Diagnostic::Kind::SyntaxError, file_, at.line, at.column, msg}};
  }

  void note(Diagnostic::Kind kind, const Token& at, const std::string& msg) {
    semantic_.push_back(Diagnostic{kind, file_, at.line, at.column, msg});
  }

  Token expect(Tok kind, const std::string& what) {
    if (cur().kind != kind) fail(cur(), "expected " + what + ", found " + describe(cur()));
    return advance();
  }

  bool is_keyword(const Token& t, const char* kw) const { return t.kind == Tok::Name && t.text == kw; }

  Token expect_name(const std::string& what) {
    const Token& t = cur();
    if (t.kind != Tok::Name || keywords().count(t.text)) fail(t, "expected " + what + ", found " + describe(t));
    return advance();
  }

  void enter(const Token& at) {
    if (++depth_ > kMaxNesting) fail(at, "nesting too deep");
  }
  void leave() { --depth_; }

  Definition parse_def(std::set<std::string>& available, std::set<std::string>& defined) {
    Token name = expect_name("a definition name");
    expect(Tok::Assign, "'='");
    Expression e = parse_expr(name, available);
    if (!defined.insert(name.text).second)
      note(Diagnostic::Kind::DuplicateName, name, "duplicate definition of '" + name.text + "'");
    available.insert(name.text);
    return Definition{name.text, std::move(e)};
  }

  void check_available(const Token& ref, const std::set<std::string>& available) {
    if (!available.count(ref.text))
      note(Diagnostic::Kind::UseBeforeDef, ref, "'" + ref.text + "' is used before it is defined");
  }

  Expression parse_expr(const Token& def_name, const std::set<std::string>& available) {
    const Token& t = cur();
    if (is_keyword(t, "flip")) {
      advance();
      expect(Tok::LParen, "'('");
      double p = parse_prob();
      expect(Tok::RParen, "')'");
      return flip(p);
    }
    if (is_keyword(t, "categorical")) {
      Token start = advance();
      expect(Tok::LParen, "'('");
      std::vector<std::pair<Value, double>> entries;
      std::set<Value> seen;
      do {
        Token at = cur();
        Value v = parse_value();
        if (!seen.insert(v).second) fail(at, "duplicate categorical value " + v.literal());
        expect(Tok::Colon, "':'");
        entries.emplace_back(v, parse_prob());
      } while (cur().kind == Tok::Comma && (advance(), true));
      expect(Tok::RParen, "')'");
      Expression e = categorical(std::move(entries));
      check_dist(std::get<PrimitiveExpr>(e).dist, start);
      return e;
    }
    if (is_keyword(t, "uniform")) {
      Token start = advance();
      expect(Tok::LParen, "'('");
      Rational lo = parse_number_value().to_rational();
      expect(Tok::Comma, "','");
      Rational hi = parse_number_value().to_rational();
      expect(Tok::Comma, "','");
      Token bins_tok = expect(Tok::Number, "a bin count");
      std::int64_t bins = 0;
      auto [ptr, ec] = std::from_chars(bins_tok.text.data(), bins_tok.text.data() + bins_tok.text.size(), bins);
      if (ec != std::errc() || ptr != bins_tok.text.data() + bins_tok.text.size() || bins < 1 || bins > 1000000)
        fail(bins_tok, "bin count must be a positive integer");
      expect(Tok::RParen, "')'");
      Expression e = uniform(lo, hi, static_cast<int>(bins));
      check_dist(std::get<PrimitiveExpr>(e).dist, start);
      return e;
    }
    if (is_keyword(t, "apply")) {
      advance();
      expect(Tok::LParen, "'('");
      std::vector<std::string> args;
      while (!(cur().kind == Tok::LParen)) {
        Token ref = expect_name("an argument name or '('");
        check_available(ref, available);
        args.push_back(ref.text);
        expect(Tok::Comma, "','");
      }
      if (args.empty()) fail(cur(), "apply needs at least one argument");
      Token lam_tok = cur();
      Lambda fn = parse_lambda();
      if (fn.params.size() != args.size())
        fail(lam_tok, "function takes " + std::to_string(fn.params.size()) + " parameters but apply passes " +
                          std::to_string(args.size()) + " arguments");
      expect(Tok::RParen, "')'");
      return apply(std::move(args), std::move(fn));
    }
    if (is_keyword(t, "chain")) {
      enter(t);
      advance();
      expect(Tok::LParen, "'('");
      Token parent = expect_name("a parent variable name");
      check_available(parent, available);
      expect(Tok::RParen, "')'");
      expect(Tok::LBrace, "'{'");
      std::map<Value, Program> branches;
      do {
        Token at = cur();
        Value v = parse_value();
        if (branches.count(v)) fail(at, "duplicate branch for value " + v.literal());
        expect(Tok::Arrow, "'=>'");
        expect(Tok::LBrace, "'{'");
        std::set<std::string> inner_available = available;
        std::set<std::string> inner_defined;
        std::vector<Definition> defs;
        Token last_name = cur();
        do {
          last_name = cur();
          defs.push_back(parse_def(inner_available, inner_defined));
        } while (cur().kind != Tok::RBrace);
        Token close = advance();
        if (defs.back().name != "outcome")
          note(Diagnostic::Kind::MissingOutcome, last_name,
               "branch " + v.literal() + " of '" + def_name.text + "' must end with a definition of 'outcome'");
        branches.emplace(v, Program({}, std::move(defs)));
      } while (cur().kind != Tok::RBrace);
      advance();
      leave();
      std::vector<std::pair<Value, Program>> list(branches.begin(), branches.end());
      return chain(parent.text, std::move(list));
    }
    if (t.kind == Tok::Name && !keywords().count(t.text))
      fail(t, "expected an expression, found name '" + t.text + "' (use apply to copy a variable)");
    if (t.kind == Tok::Name || t.kind == Tok::Number || t.kind == Tok::Symbol || t.kind == Tok::Minus)
      return value(parse_value());
    fail(t, "expected an expression, found " + describe(t));
  }

  void check_dist(const PrimitiveDist& d, const Token& at) {
    try {
      validate_distribution(d);
    } catch (const ModelError& e) {
      fail(at, e.what());
    }
  }

  double parse_prob() {
    Token t = expect(Tok::Number, "a probability");
    double p = 0.0;
    auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), p);
    if (ec != std::errc() || ptr != t.text.data() + t.text.size()) fail(t, "malformed probability '" + t.text + "'");
    if (!(p >= 0.0 && p <= 1.0)) fail(t, "probability " + t.text + " is outside [0, 1]");
    return p;
  }

  static bool parse_decimal(const std::string& text, bool negative, Rational& out) {
    // mantissa digits with an optional fraction and exponent, converted exactly
    std::size_t i = 0;
    __int128 mant = 0;
    int scale = 0;
    auto push_digit = [&](char c) {
      mant = mant * 10 + (c - '0');
      return mant <= static_cast<__int128>(INT64_MAX);
    };
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])))
      if (!push_digit(text[i++])) return false;
    if (i < text.size() && text[i] == '.') {
      ++i;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        if (!push_digit(text[i++])) return false;
        --scale;
      }
    }
    if (i < text.size() && (text[i] == 'e' || text[i] == 'E')) {
      ++i;
      bool neg = false;
      if (text[i] == '-' || text[i] == '+') neg = text[i++] == '-';
      int e = 0;
      while (i < text.size()) {
        e = e * 10 + (text[i++] - '0');
        if (e > 40) return false;
      }
      scale += neg ? -e : e;
    }
    __int128 num = mant, den = 1;
    for (; scale > 0; --scale) {
      num *= 10;
      if (num > static_cast<__int128>(INT64_MAX)) return false;
    }
    for (; scale < 0; ++scale) {
      den *= 10;
      if (den > static_cast<__int128>(INT64_MAX)) return false;
    }
    try {
      out = Rational(static_cast<std::int64_t>(negative ? -num : num), static_cast<std::int64_t>(den));
    } catch (const std::exception&) {
      return false;
    }
    return true;
  }

  // NUMBER, -NUMBER, NUMBER/NUMBER: integers stay integers, anything with a
  // fraction, exponent or slash becomes a rational.
  Value parse_number_value() {
    bool negative = false;
    if (cur().kind == Tok::Minus) {
      advance();
      negative = true;
    }
    Token t = expect(Tok::Number, "a number");
    bool plain = t.text.find_first_of(".eE") == std::string::npos;
    if (cur().kind == Tok::Slash) {
      advance();
      Token d = expect(Tok::Number, "a denominator");
      if (!plain || d.text.find_first_of(".eE") != std::string::npos) fail(t, "rational parts must be integers");
      std::int64_t n = 0, q = 0;
      auto r1 = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n);
      auto r2 = std::from_chars(d.text.data(), d.text.data() + d.text.size(), q);
      if (r1.ec != std::errc() || r2.ec != std::errc()) fail(t, "number out of range");
      if (q == 0) fail(d, "zero denominator");
      return Value::rational(Rational(negative ? -n : n, q));
    }
    if (plain) {
      std::int64_t n = 0;
      auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), n);
      if (r.ec != std::errc()) fail(t, "number out of range");
      return Value::integer(negative ? -n : n);
    }
    Rational r;
    if (!parse_decimal(t.text, negative, r)) fail(t, "number '" + t.text + "' cannot be represented exactly");
    return Value::rational(r);
  }

  Value parse_value() {
    const Token& t = cur();
    if (is_keyword(t, "true")) {
      advance();
      return Value::boolean(true);
    }
    if (is_keyword(t, "false")) {
      advance();
      return Value::boolean(false);
    }
    if (t.kind == Tok::Symbol) return Value::symbol(advance().text);
    if (t.kind == Tok::Number || t.kind == Tok::Minus) return parse_number_value();
    fail(t, "expected a value, found " + describe(t));
  }

  Lambda parse_lambda() {
    expect(Tok::LParen, "'(' starting a function");
    Lambda fn;
    std::map<std::string, std::size_t> index;
    do {
      Token p = expect_name("a parameter name");
      if (index.count(p.text)) fail(p, "duplicate parameter '" + p.text + "'");
      index[p.text] = fn.params.size();
      fn.params.push_back(p.text);
    } while (cur().kind == Tok::Comma && (advance(), true));
    expect(Tok::RParen, "')'");
    expect(Tok::Arrow, "'=>'");
    fn.body = parse_fn(index);
    return fn;
  }

  using Params = std::map<std::string, std::size_t>;
  using Node = std::shared_ptr<const FnExpr>;

  Node parse_fn(const Params& ps) {
    enter(cur());
    Node out;
    if (is_keyword(cur(), "if")) {
      advance();
      Node c = parse_fn(ps);
      if (!is_keyword(cur(), "then")) fail(cur(), "expected 'then', found " + describe(cur()));
      advance();
      Node a = parse_fn(ps);
      if (!is_keyword(cur(), "else")) fail(cur(), "expected 'else', found " + describe(cur()));
      advance();
      Node b = parse_fn(ps);
      out = FnExpr::if_then_else(c, a, b);
    } else {
      out = parse_or(ps);
    }
    leave();
    return out;
  }

  Node parse_or(const Params& ps) {
    Node l = parse_and(ps);
    while (cur().kind == Tok::OrOr) {
      advance();
      l = FnExpr::binary(FnOp::Or, l, parse_and(ps));
    }
    return l;
  }

  Node parse_and(const Params& ps) {
    Node l = parse_cmp(ps);
    while (cur().kind == Tok::AndAnd) {
      advance();
      l = FnExpr::binary(FnOp::And, l, parse_cmp(ps));
    }
    return l;
  }

  Node parse_cmp(const Params& ps) {
    Node l = parse_add(ps);
    FnOp op;
    switch (cur().kind) {
      case Tok::EqEq: op = FnOp::Eq; break;
      case Tok::NotEq: op = FnOp::Ne; break;
      case Tok::Less: op = FnOp::Lt; break;
      case Tok::LessEq: op = FnOp::Le; break;
      default: return l;
    }
    advance();
    return FnExpr::binary(op, l, parse_add(ps));
  }

  Node parse_add(const Params& ps) {
    Node l = parse_mul(ps);
    while (cur().kind == Tok::Plus || cur().kind == Tok::Minus) {
      FnOp op = advance().kind == Tok::Plus ? FnOp::Add : FnOp::Sub;
      l = FnExpr::binary(op, l, parse_mul(ps));
    }
    return l;
  }

  Node parse_mul(const Params& ps) {
    Node l = parse_unary(ps);
    while (cur().kind == Tok::Star) {
      advance();
      l = FnExpr::binary(FnOp::Mul, l, parse_unary(ps));
    }
    return l;
  }

  Node parse_unary(const Params& ps) {
    if (cur().kind == Tok::Bang) {
      enter(advance());
      Node n = FnExpr::negation(parse_unary(ps));
      leave();
      return n;
    }
    return parse_primary(ps);
  }

  Node parse_primary(const Params& ps) {
    const Token& t = cur();
    if (t.kind == Tok::LParen) {
      advance();
      Node n = parse_fn(ps);
      expect(Tok::RParen, "')'");
      return n;
    }
    if (is_keyword(t, "min") || is_keyword(t, "max")) {
      FnOp op = t.text == "min" ? FnOp::Min : FnOp::Max;
      advance();
      expect(Tok::LParen, "'('");
      Node a = parse_fn(ps);
      expect(Tok::Comma, "','");
      Node b = parse_fn(ps);
      expect(Tok::RParen, "')'");
      return FnExpr::binary(op, a, b);
    }
    if (t.kind == Tok::Name && !keywords().count(t.text)) {
      auto it = ps.find(t.text);
      if (it == ps.end()) fail(t, "'" + t.text + "' is not a parameter of this function");
      advance();
      return FnExpr::param(it->second);
    }
    if (is_keyword(t, "true") || is_keyword(t, "false") || t.kind == Tok::Number || t.kind == Tok::Symbol ||
        (t.kind == Tok::Minus && next().kind == Tok::Number))
      return FnExpr::literal(parse_value());
    fail(t, "expected an operand, found " + describe(t));
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::string file_;
  int depth_ = 0;
  std::vector<Diagnostic> semantic_;
};

std::string format_prob(double p) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, ptr);
}

std::string format_bound(const Rational& r) { return r.den() == 1 ? std::to_string(r.num()) : r.str(); }

void print_program(const Program& p, int indent, std::string& out);

void print_expr(const Expression& e, int indent, std::string& out) {
  if (const auto* v = std::get_if<ValueExpr>(&e)) {
    out += v->value.literal();
  } else if (const auto* prim = std::get_if<PrimitiveExpr>(&e)) {
    if (const auto* f = std::get_if<Flip>(&prim->dist)) {
      out += "flip(" + format_prob(f->p) + ")";
    } else if (const auto* c = std::get_if<Categorical>(&prim->dist)) {
      out += "categorical(";
      for (std::size_t i = 0; i < c->entries.size(); ++i) {
        if (i) out += ", ";
        out += c->entries[i].first.literal() + ": " + format_prob(c->entries[i].second);
      }
      out += ")";
    } else {
      const auto& u = std::get<UniformDiscretized>(prim->dist);
      out += "uniform(" + format_bound(u.lo) + ", " + format_bound(u.hi) + ", " + std::to_string(u.bins) + ")";
    }
  } else if (const auto* a = std::get_if<ApplyExpr>(&e)) {
    out += "apply(";
    for (const auto& arg : a->args) out += arg + ", ";
    out += print_lambda(a->fn) + ")";
  } else {
    const auto& c = std::get<ChainExpr>(e);
    std::string pad(static_cast<std::size_t>(indent), ' ');
    out += "chain(" + c.parent + ") {\n";
    for (const auto& [v, branch] : c.branches) {
      out += pad + "  " + v.literal() + " => {\n";
      print_program(*branch, indent + 4, out);
      out += pad + "  }\n";
    }
    out += pad + "}";
  }
}

void print_program(const Program& p, int indent, std::string& out) {
  std::string pad(static_cast<std::size_t>(indent), ' ');
  for (const auto& def : p.defs()) {
    out += pad + def.name + " = ";
    print_expr(def.expr, indent, out);
    out += "\n";
  }
}

}  // namespace

std::string Diagnostic::str() const {
  return file + ":" + std::to_string(line) + ":" + std::to_string(column) + ": error: " + message;
}

ParseError::ParseError(std::vector<Diagnostic> diagnostics)
    : std::runtime_error(diagnostics.empty() ? std::string("parse error") : diagnostics.front().str()),
      diagnostics_(std::move(diagnostics)) {}

Program parse(std::string_view text, std::string_view file) {
  std::string name(file);
  try {
    Lexer lexer(text, name);
    Parser parser(lexer.run(), name);
    return parser.parse_model();
  } catch (const SyntaxFailure& f) {
    throw ParseError({f.diag});
  }
}

Program parse_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError({Diagnostic{Diagnostic::Kind::SyntaxError, path, 0, 0, "cannot open file"}});
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

std::string print(const Program& program) {
  if (program.defs().empty()) throw ModelError(ModelError::Kind::EmptyProgram, "cannot print an empty program");
  std::string out;
  print_program(program, 0, out);
  return out;
}

}  // namespace sfi
