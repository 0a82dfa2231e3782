#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>

#include "vartool/error.hpp"
#include "vartool/frontend.hpp"
#include "vartool/metric_geom.hpp"

namespace vartool {

namespace {

struct Pos {
  int line = 1;
  int col = 1;
};

[[noreturn]] void fail(const Pos& p, const std::string& msg) { throw ParseError(msg, p.line, p.col); }

// ---------------------------------------------------------------------------
// Lexer

enum class Tok { Ident, Int, Sym, Newline, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
  Pos pos;

  bool is(char c) const { return kind == Tok::Sym && text.size() == 1 && text[0] == c; }
  bool is_word(std::string_view w) const { return kind == Tok::Ident && text == w; }
};

std::string describe(const Token& t) {
  switch (t.kind) {
    case Tok::Ident:
      return "'" + t.text + "'";
    case Tok::Int:
      return "number " + t.text;
    case Tok::Sym:
      return "'" + t.text + "'";
    case Tok::Newline:
      return "end of line";
    case Tok::End:
      break;
  }
  return "end of input";
}

// Newlines inside brackets are dropped, so statements can span lines there.
std::vector<Token> lex(std::string_view src) {
  std::vector<Token> out;
  int line = 1;
  int col = 1;
  int depth = 0;
  std::size_t i = 0;
  auto advance = [&](std::size_t k) {
    i += k;
    col += static_cast<int>(k);
  };
  while (i < src.size()) {
    char c = src[i];
    Pos p{line, col};
    if (c == '\n') {
      if (depth == 0) out.push_back({Tok::Newline, "\n", p});
      ++i;
      ++line;
      col = 1;
    } else if (c == ' ' || c == '\t' || c == '\r') {
      advance(1);
    } else if (c == '#') {
      while (i < src.size() && src[i] != '\n') advance(1);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t j = i;
      while (j < src.size() && std::isdigit(static_cast<unsigned char>(src[j]))) ++j;
      if (j < src.size() && (src[j] == '.' || src[j] == 'e' || src[j] == 'E'))
        fail(p, "floating-point literals are not allowed; write a rational p/q");
      if (j < src.size() && (std::isalpha(static_cast<unsigned char>(src[j])) || src[j] == '_'))
        fail(p, "malformed number '" + std::string(src.substr(i, j + 1 - i)) + "'");
      out.push_back({Tok::Int, std::string(src.substr(i, j - i)), p});
      advance(j - i);
    } else if (c == '.' && i + 1 < src.size() && std::isdigit(static_cast<unsigned char>(src[i + 1]))) {
      fail(p, "floating-point literals are not allowed; write a rational p/q");
    } else if (std::isalpha(static_cast<unsigned char>(c))) {
      std::size_t j = i + 1;
      auto alnum = [&](std::size_t k) { return k < src.size() && std::isalnum(static_cast<unsigned char>(src[k])); };
      while (alnum(j) || (j < src.size() && src[j] == '_' && alnum(j + 1))) ++j;
      out.push_back({Tok::Ident, std::string(src.substr(i, j - i)), p});
      advance(j - i);
    } else if (std::string_view("()[]{},=+-*/^_:").find(c) != std::string_view::npos) {
      if (c == '(' || c == '[' || c == '{') ++depth;
      if ((c == ')' || c == ']' || c == '}') && depth > 0) --depth;
      out.push_back({Tok::Sym, std::string(1, c), p});
      advance(1);
    } else {
      auto byte = static_cast<unsigned char>(c);
      if (byte >= 0x80) fail(p, "unexpected non-ASCII character");
      fail(p, std::string("unexpected character '") + c + "'");
    }
  }
  out.push_back({Tok::End, "", {line, col}});
  return out;
}

// ---------------------------------------------------------------------------
// Syntax tree

// Keeps expansions of integer powers of sums within reach.
constexpr long long kMaxExponent = 64;

struct Index {
  std::string var;  // empty for a literal
  int value = 0;
  Pos pos;
};

struct Node {
  enum class Kind { Num, Add, Sub, Mul, Div, Neg, Pow, Sum, Deriv, Ref, Sqrtg } kind = Kind::Num;
  Pos pos;
  Rational num;
  Exponent exp;
  std::string name;  // Ref name, or the bound variable of Sum
  std::optional<std::vector<Index>> up;
  std::optional<std::vector<Index>> down;
  std::vector<Index> derivs;
  std::vector<Node> kids;
};

struct Entry {
  Node lhs;
  Node rhs;
};

struct FieldDecl {
  BundleSpec spec;
  Pos pos;
};

struct Statement {
  enum class Kind { Lagrangian, Source, Rule, Variation, Section } kind;
  Pos pos;
  std::string name;
  std::vector<std::pair<std::string, Pos>> over;
  bool covariant = false;
  Node lhs;  // rule lhs, variation target
  Node rhs;  // lagrangian body, rule rhs
  std::vector<Entry> entries;
};

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : t_(std::move(toks)) {}

  const Token& peek(std::size_t k = 0) const { return t_[std::min(i_ + k, t_.size() - 1)]; }
  const Token& next() {
    const Token& t = t_[i_];
    if (i_ + 1 < t_.size()) ++i_;
    return t;
  }
  bool accept(char c) {
    if (!peek().is(c)) return false;
    next();
    return true;
  }
  const Token& expect(char c) {
    if (!peek().is(c)) fail(peek().pos, std::string("expected '") + c + "', found " + describe(peek()));
    return next();
  }
  const Token& expect_ident(const char* what) {
    if (peek().kind != Tok::Ident) fail(peek().pos, std::string("expected ") + what + ", found " + describe(peek()));
    return next();
  }
  void expect_word(std::string_view w) {
    if (!peek().is_word(w)) fail(peek().pos, "expected '" + std::string(w) + "', found " + describe(peek()));
    next();
  }
  long long expect_int(const char* what) {
    if (peek().kind != Tok::Int) fail(peek().pos, std::string("expected ") + what + ", found " + describe(peek()));
    const Token& t = next();
    if (t.text.size() > 9) fail(t.pos, "integer too large here");
    return std::stoll(t.text);
  }
  void end_statement() {
    if (peek().kind == Tok::End) return;
    if (peek().kind != Tok::Newline) fail(peek().pos, "expected end of line, found " + describe(peek()));
    while (peek().kind == Tok::Newline) next();
  }
  void skip_newlines() {
    while (peek().kind == Tok::Newline) next();
  }
  bool at_end() const { return peek().kind == Tok::End; }

  // [-]INT[/INT]
  Rational signed_rational() {
    bool neg = accept('-');
    long long p = expect_int("an integer");
    long long q = 1;
    if (accept('/')) {
      Pos at = peek().pos;
      q = expect_int("a denominator");
      if (q == 0) fail(at, "zero denominator");
    }
    return Rational(neg ? -p : p, q);
  }

  // ---- expressions
  Node expr() {
    Node a = term();
    while (peek().is('+') || peek().is('-')) {
      Pos p = peek().pos;
      Node::Kind k = next().text == "+" ? Node::Kind::Add : Node::Kind::Sub;
      Node b = term();
      Node n;
      n.kind = k;
      n.pos = p;
      n.kids = {std::move(a), std::move(b)};
      a = std::move(n);
    }
    return a;
  }

  Node term() {
    Node a = unary();
    while (peek().is('*') || peek().is('/')) {
      Pos p = peek().pos;
      Node::Kind k = next().text == "*" ? Node::Kind::Mul : Node::Kind::Div;
      Node b = unary();
      Node n;
      n.kind = k;
      n.pos = p;
      n.kids = {std::move(a), std::move(b)};
      a = std::move(n);
    }
    return a;
  }

  Node unary() {
    if (peek().is('-')) {
      Pos p = next().pos;
      Node n;
      n.kind = Node::Kind::Neg;
      n.pos = p;
      n.kids.push_back(unary());
      return n;
    }
    return power();
  }

  Node power() {
    Node base = primary();
    if (!peek().is('^')) return base;
    Pos p = next().pos;
    Node n;
    n.kind = Node::Kind::Pow;
    n.pos = p;
    if (peek().kind == Tok::Int) {
      n.exp = Exponent(expect_int("an exponent"));
    } else if (accept('(')) {
      Rational r = signed_rational();
      expect(')');
      n.exp = Exponent(r);
    } else {
      fail(peek().pos, "expected an exponent, found " + describe(peek()));
    }
    if (n.exp.num() > kMaxExponent || -n.exp.num() > kMaxExponent || n.exp.den() > kMaxExponent)
      fail(p, "exponent too large (limit " + std::to_string(kMaxExponent) + ")");
    n.kids.push_back(std::move(base));
    return n;
  }

  std::vector<Index> index_list() {
    expect('[');
    std::vector<Index> out;
    while (!peek().is(']')) {
      Index ix;
      ix.pos = peek().pos;
      if (peek().kind == Tok::Int) {
        long long v = expect_int("an index");
        ix.value = static_cast<int>(v);
      } else if (peek().kind == Tok::Ident) {
        ix.var = next().text;
      } else {
        fail(peek().pos, "expected an index, found " + describe(peek()));
      }
      out.push_back(std::move(ix));
    }
    expect(']');
    return out;
  }

  Node reference(const Token& name) {
    Node n;
    n.kind = Node::Kind::Ref;
    n.pos = name.pos;
    n.name = name.text;
    if (peek().is('^') && peek(1).is('[')) {
      next();
      n.up = index_list();
    }
    if (peek().is('_')) {
      next();
      if (!peek().is('[')) fail(peek().pos, "expected '[' after '_'");
      n.down = index_list();
    }
    return n;
  }

  Node primary() {
    const Token& t = peek();
    if (t.kind == Tok::Int) {
      Node n;
      n.kind = Node::Kind::Num;
      n.pos = t.pos;
      n.num = Rational::parse(next().text);
      return n;
    }
    if (t.is('(')) {
      next();
      Node n = expr();
      expect(')');
      return n;
    }
    if (t.kind == Tok::Ident) {
      Token name = next();
      if (name.text == "sum" && peek().is('(')) {
        next();
        Node n;
        n.kind = Node::Kind::Sum;
        n.pos = name.pos;
        n.name = expect_ident("an index variable").text;
        expect(',');
        n.kids.push_back(expr());
        expect(')');
        return n;
      }
      if (name.text == "D" && peek().is('[')) {
        next();
        Node n;
        n.kind = Node::Kind::Deriv;
        n.pos = name.pos;
        n.kids.push_back(expr());
        if (!peek().is(',')) fail(peek().pos, "expected ',' and a derivative index, found " + describe(peek()));
        while (accept(',')) {
          Index ix;
          ix.pos = peek().pos;
          if (peek().kind == Tok::Int) {
            ix.value = static_cast<int>(expect_int("an index"));
          } else {
            ix.var = expect_ident("a derivative index").text;
          }
          n.derivs.push_back(std::move(ix));
        }
        expect(']');
        return n;
      }
      if (name.text == "sqrtg") {
        Node n;
        n.kind = Node::Kind::Sqrtg;
        n.pos = name.pos;
        return n;
      }
      return reference(name);
    }
    fail(t.pos, "expected an expression, found " + describe(t));
  }

  std::vector<Entry> entry_block() {
    expect('{');
    std::vector<Entry> out;
    while (!peek().is('}')) {
      Token name = expect_ident("a field component");
      Entry e;
      e.lhs = reference(name);
      expect('=');
      e.rhs = expr();
      out.push_back(std::move(e));
      if (!accept(',') && !peek().is('}')) fail(peek().pos, "expected ',' or '}', found " + describe(peek()));
    }
    expect('}');
    return out;
  }

 private:
  std::vector<Token> t_;
  std::size_t i_ = 0;
};

const std::set<std::string>& reserved_names() {
  static const std::set<std::string> r = {"D",     "sum", "sqrtg", "xi", "t", "R", "Ric", "Gamma", "manifold",
                                          "field", "order", "jetcap", "lagrangian", "source", "rule",
                                          "variation", "section"};
  return r;
}

bool is_base_name(const std::string& s) {
  return s.size() >= 2 && s[0] == 'x' && std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

// ---------------------------------------------------------------------------
// Evaluation of syntax trees against a model

class Builder {
 public:
  explicit Builder(const ModelSpec& m) : m_(m) {}

  Expr eval(const Node& n) {
    try {
      return eval_inner(n);
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      fail(n.pos, e.what());
    }
  }

  int index(const Index& ix) const {
    int v = ix.value;
    if (!ix.var.empty()) {
      auto it = env_.find(ix.var);
      if (it == env_.end()) fail(ix.pos, "unknown index '" + ix.var + "'");
      v = it->second;
    }
    if (v < 0 || v >= m_.dim()) fail(ix.pos, "index " + std::to_string(v) + " out of range for dimension " + std::to_string(m_.dim()));
    return v;
  }

  std::vector<int> indices(const std::vector<Index>& ix) const {
    std::vector<int> out;
    out.reserve(ix.size());
    for (const Index& i : ix) out.push_back(index(i));
    return out;
  }

  struct Component {
    FieldId field = 0;
    std::vector<int> comps;
    bool lowered_metric = false;
  };

  // Field and component tuple named by a reference node.
  Component component(const Node& n) const {
    if (n.name == "xi") {
      if (!n.up || n.up->size() != 1 || n.down) fail(n.pos, "xi takes one upper index: xi^[i]");
      return {m_.xi_field(), indices(*n.up), false};
    }
    auto f = m_.find(n.name);
    if (!f) fail(n.pos, "unknown identifier '" + n.name + "'");
    const BundleSpec& b = m_.bundle(*f);
    auto want = [&](std::size_t p, std::size_t q, const char* shape) {
      std::size_t up = n.up ? n.up->size() : 0;
      std::size_t down = n.down ? n.down->size() : 0;
      bool up_ok = p == 0 ? !n.up : (n.up && up == p);
      bool down_ok = q == 0 ? !n.down : (n.down && down == q);
      if (!up_ok || !down_ok) fail(n.pos, "'" + n.name + "' is written " + shape);
    };
    Component c{*f, {}, false};
    switch (b.kind) {
      case BundleKind::Scalar:
        want(0, 0, "without indices");
        break;
      case BundleKind::Metric:
        if (n.down && !n.up) {
          want(0, 2, "g^[i j] or g_[i j]");
          c.lowered_metric = true;
          c.comps = indices(*n.down);
        } else {
          want(2, 0, "g^[i j] or g_[i j]");
          c.comps = indices(*n.up);
        }
        return c;
      case BundleKind::Tensor: {
        std::string shape = std::string(b.p > 0 ? "^[..]" : "") + (b.q > 0 ? "_[..]" : "");
        want(static_cast<std::size_t>(b.p), static_cast<std::size_t>(b.q),
             ("with " + std::to_string(b.p) + " upper and " + std::to_string(b.q) + " lower indices").c_str());
        break;
      }
      case BundleKind::Distortion:
        want(1, 2, "N^[m]_[h l]");
        break;
    }
    if (n.up) c.comps = indices(*n.up);
    if (n.down)
      for (int v : indices(*n.down)) c.comps.push_back(v);
    return c;
  }

  Expr component_expr(const Component& c) const {
    if (c.field == m_.xi_field()) return Expr(m_.xi(c.comps[0]));
    if (c.lowered_metric) return m_.metric_lowered(c.comps[0], c.comps[1]);
    return Expr(m_.atom(c.field, c.comps));
  }

  Atom key_atom(const Component& c) const { return m_.atom(c.field, c.comps); }

  std::map<std::string, int> env_;

 private:
  Expr reference(const Node& n) {
    if (is_base_name(n.name) && !m_.find(n.name)) {
      if (n.up || n.down) fail(n.pos, "base coordinates take no indices");
      if (n.name.size() > 3) fail(n.pos, "base coordinate '" + n.name + "' out of range");
      int i = std::stoi(n.name.substr(1));
      if (i >= m_.dim()) fail(n.pos, "base coordinate '" + n.name + "' out of range for dimension " + std::to_string(m_.dim()));
      return Expr(Atom::base(i));
    }
    if ((n.name == "R" || n.name == "Ric" || n.name == "Gamma") && !m_.find(n.name)) return curvature_ref(n);
    return component_expr(component(n));
  }

  Expr curvature_ref(const Node& n) {
    if (!m_.metric()) fail(n.pos, "'" + n.name + "' needs a metric field");
    if (n.name == "Gamma") {
      if (!n.up || n.up->size() != 1 || !n.down || n.down->size() != 2) fail(n.pos, "written Gamma^[i]_[j k]");
      if (!gamma_) gamma_ = christoffel(m_);
      return gamma_->at(index((*n.up)[0]), index((*n.down)[0]), index((*n.down)[1]));
    }
    if (!curv_) curv_ = curvature(m_);
    if (n.name == "R") {
      if (n.up || n.down) fail(n.pos, "R takes no indices");
      return curv_->scalar;
    }
    if (n.up || !n.down || n.down->size() != 2) fail(n.pos, "written Ric_[j l]");
    return curv_->ric(index((*n.down)[0]), index((*n.down)[1]));
  }

  Expr eval_inner(const Node& n) {
    switch (n.kind) {
      case Node::Kind::Num:
        return Expr(n.num);
      case Node::Kind::Add:
        return eval(n.kids[0]) + eval(n.kids[1]);
      case Node::Kind::Sub:
        return eval(n.kids[0]) - eval(n.kids[1]);
      case Node::Kind::Mul:
        return eval(n.kids[0]) * eval(n.kids[1]);
      case Node::Kind::Neg:
        return -eval(n.kids[0]);
      case Node::Kind::Div: {
        Expr a = eval(n.kids[0]);
        Expr b = eval(n.kids[1]);
        if (b.is_zero()) fail(n.pos, "division by zero");
        if (auto c = b.constant_value()) return a / *c;
        return a * pow(b, Exponent(-1));
      }
      case Node::Kind::Pow:
        return pow(eval(n.kids[0]), n.exp);
      case Node::Kind::Sum: {
        if (env_.count(n.name) != 0) fail(n.pos, "index '" + n.name + "' is already bound");
        if (m_.find(n.name) || is_base_name(n.name)) fail(n.pos, "index '" + n.name + "' shadows a name");
        std::vector<Expr> parts;
        for (int k = 0; k < m_.dim(); ++k) {
          env_[n.name] = k;
          parts.push_back(eval(n.kids[0]));
        }
        env_.erase(n.name);
        return sum(parts);
      }
      case Node::Kind::Deriv: {
        Expr e = eval(n.kids[0]);
        for (const Index& ix : n.derivs) e = total_derivative(m_, e, index(ix));
        return e;
      }
      case Node::Kind::Ref:
        return reference(n);
      case Node::Kind::Sqrtg:
        if (!m_.metric()) fail(n.pos, "sqrtg needs a metric field");
        return m_.sqrt_det();
    }
    fail(n.pos, "internal: unknown node");
  }

  const ModelSpec& m_;
  std::optional<Christoffel> gamma_;
  std::optional<Curvature> curv_;
};

// Free index variables of an entry's left side, in order of appearance.
std::vector<const Index*> free_vars(const Node& lhs) {
  std::vector<const Index*> out;
  auto scan = [&](const std::optional<std::vector<Index>>& l) {
    if (!l) return;
    for (const Index& ix : *l)
      if (!ix.var.empty() && std::none_of(out.begin(), out.end(), [&](const Index* o) { return o->var == ix.var; }))
        out.push_back(&ix);
  };
  scan(lhs.up);
  scan(lhs.down);
  return out;
}

// Calls `f` once per binding of the free index variables of `lhs`.
template <class F>
void for_each_binding(Builder& b, int n, const Node& lhs, F&& f) {
  auto vars = free_vars(lhs);
  for (const Index* v : vars) {
    if (b.env_.count(v->var) != 0) fail(v->pos, "index '" + v->var + "' is already bound");
  }
  std::vector<int> cur(vars.size(), 0);
  while (true) {
    for (std::size_t k = 0; k < vars.size(); ++k) b.env_[vars[k]->var] = cur[k];
    f();
    std::size_t k = 0;
    while (k < cur.size() && ++cur[k] == n) cur[k++] = 0;
    if (k == cur.size()) break;
  }
  for (const Index* v : vars) b.env_.erase(v->var);
}

Section build_section(const ModelSpec& m, Builder& b, const Statement& st) {
  Section s;
  s.name = st.name;
  const int n = m.dim();
  std::optional<bool> lowered;
  std::vector<std::vector<Expr>> low(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
  std::vector<std::vector<bool>> given(static_cast<std::size_t>(n), std::vector<bool>(static_cast<std::size_t>(n)));
  for (const Entry& e : st.entries) {
    for_each_binding(b, n, e.lhs, [&] {
      Builder::Component c = b.component(e.lhs);
      if (c.field == m.xi_field()) fail(e.lhs.pos, "sections cannot define xi");
      Expr v = b.eval(e.rhs);
      if (v.contains_if([](const Atom& a) { return a.is_jet() || a.is_external(); }))
        fail(e.rhs.pos, "section components must be functions of the base coordinates");
      if (m.bundle(c.field).kind == BundleKind::Metric) {
        if (lowered && *lowered != c.lowered_metric) fail(e.lhs.pos, "a section gives the metric either as g^[i j] or as g_[i j]");
        lowered = c.lowered_metric;
        if (c.lowered_metric) {
          auto i = static_cast<std::size_t>(c.comps[0]);
          auto j = static_cast<std::size_t>(c.comps[1]);
          if (given[i][j] && !(low[i][j] == v)) fail(e.lhs.pos, "g_[i j] must be symmetric and given once");
          low[i][j] = v;
          low[j][i] = v;
          given[i][j] = given[j][i] = true;
        }
      }
      s.fields.insert(c.field);
      if (!c.lowered_metric) s.values[b.key_atom(c)] = v;
    });
  }
  if (lowered && *lowered) {
    Expr det = determinant(low);
    if (det.is_zero()) fail(st.pos, "section metric is singular");
    Expr inv = pow(det, Exponent(-1));
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j) {
        std::vector<std::vector<Expr>> minor;
        for (int r = 0; r < n; ++r) {
          if (r == j) continue;
          std::vector<Expr> row;
          for (int c = 0; c < n; ++c)
            if (c != i) row.push_back(low[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
          minor.push_back(std::move(row));
        }
        Expr cof = minor.empty() ? Expr(1) : determinant(minor);
        if ((i + j) % 2 != 0) cof = -cof;
        s.values[m.atom(*m.metric(), {i, j})] = cof * inv;
      }
  }
  return s;
}

struct Document {
  std::optional<ManifoldSpec> manifold;
  Pos manifold_pos;
  int order = 2;
  int jetcap = kDefaultJetCap;
  Pos order_pos;
  std::vector<FieldDecl> fields;
  std::vector<Statement> statements;
};

void parse_manifold(Parser& p, Document& d, Pos at) {
  if (d.manifold) fail(at, "duplicate manifold declaration");
  ManifoldSpec ms;
  bool have_dim = false;
  while (p.peek().kind == Tok::Ident) {
    Token key = p.next();
    p.expect('=');
    if (key.text == "dim") {
      Pos vp = p.peek().pos;
      long long v = p.expect_int("a dimension");
      if (v < 1 || v > kMaxDim) fail(vp, "dimension must be between 1 and " + std::to_string(kMaxDim));
      ms.dim = static_cast<int>(v);
      have_dim = true;
    } else if (key.text == "signature") {
      p.expect('(');
      while (!p.peek().is(')')) {
        if (p.accept('+')) {
          ms.signature.push_back(1);
        } else if (p.accept('-')) {
          ms.signature.push_back(-1);
        } else {
          fail(p.peek().pos, "expected '+' or '-' in the signature, found " + describe(p.peek()));
        }
        if (!p.accept(',') && !p.peek().is(')')) fail(p.peek().pos, "expected ',' or ')', found " + describe(p.peek()));
      }
      p.expect(')');
    } else {
      fail(key.pos, "unknown manifold attribute '" + key.text + "'");
    }
  }
  if (!have_dim) fail(at, "manifold needs dim=<n>");
  if (!ms.signature.empty() && static_cast<int>(ms.signature.size()) != ms.dim)
    fail(at, "signature has " + std::to_string(ms.signature.size()) + " entries for dimension " + std::to_string(ms.dim));
  d.manifold = ms;
  d.manifold_pos = at;
}

void parse_field(Parser& p, Document& d, Pos at) {
  const Token& name = p.expect_ident("a field name");
  if (reserved_names().count(name.text) != 0 || is_base_name(name.text)) fail(name.pos, "'" + name.text + "' is reserved");
  for (const FieldDecl& f : d.fields)
    if (f.spec.name == name.text) fail(name.pos, "field '" + name.text + "' is declared twice");
  p.expect(':');
  const Token& kind = p.expect_ident("a field kind");
  BundleSpec b;
  if (kind.text == "scalar") {
    b = BundleSpec::scalar(name.text);
  } else if (kind.text == "metric") {
    b = BundleSpec::metric(name.text);
  } else if (kind.text == "distortion") {
    b = BundleSpec::distortion(name.text);
  } else if (kind.text == "tensor") {
    p.expect('(');
    long long r = p.expect_int("a contravariant rank");
    p.expect(',');
    long long s = p.expect_int("a covariant rank");
    p.expect(')');
    if (r + s > kMaxComps) fail(kind.pos, "tensor rank above " + std::to_string(kMaxComps));
    b = BundleSpec::tensor(name.text, static_cast<int>(r), static_cast<int>(s));
  } else {
    fail(kind.pos, "unknown field kind '" + kind.text + "'");
  }
  while (p.peek().kind == Tok::Ident) {
    Token opt = p.next();
    if (opt.text == "matter") {
      b.role = Role::Matter;
    } else if (opt.text == "background") {
      b.role = Role::Background;
    } else if (opt.text == "external") {
      b.external = true;
    } else if (opt.text == "positive") {
      b.positive = true;
    } else if (opt.text == "weight") {
      p.expect('=');
      b.weight = p.signed_rational();
    } else {
      fail(opt.pos, "unknown field option '" + opt.text + "'");
    }
  }
  d.fields.push_back({b, at});
}

std::vector<std::pair<std::string, Pos>> parse_over(Parser& p) {
  std::vector<std::pair<std::string, Pos>> over;
  p.expect_word("over");
  do {
    const Token& f = p.expect_ident("a field name");
    over.emplace_back(f.text, f.pos);
  } while (p.accept(','));
  return over;
}

Document parse_document(std::string_view text) {
  Parser p(lex(text));
  Document d;
  std::set<std::string> names[5];
  p.skip_newlines();
  while (!p.at_end()) {
    const Token& kw = p.expect_ident("a statement");
    Pos at = kw.pos;
    std::string word = kw.text;
    auto unique_name = [&](int slot, const char* what) {
      const Token& n = p.expect_ident(what);
      if (!names[slot].insert(n.text).second) fail(n.pos, std::string(what) + " '" + n.text + "' is defined twice");
      return n.text;
    };
    if (word == "manifold") {
      parse_manifold(p, d, at);
    } else if (word == "order" || word == "jetcap") {
      Pos vp = p.peek().pos;
      long long v = p.expect_int("an order");
      if (v < 0 || v > kMaxJetOrder) fail(vp, "order out of range");
      (word == "order" ? d.order : d.jetcap) = static_cast<int>(v);
      d.order_pos = at;
    } else if (word == "field") {
      parse_field(p, d, at);
    } else if (word == "lagrangian") {
      Statement s{Statement::Kind::Lagrangian, at, unique_name(0, "lagrangian"), {}, false, {}, {}, {}};
      p.expect('=');
      s.rhs = p.expr();
      d.statements.push_back(std::move(s));
    } else if (word == "source") {
      Statement s{Statement::Kind::Source, at, unique_name(1, "source"), {}, false, {}, {}, {}};
      s.over = parse_over(p);
      if (p.peek().is_word("covariant")) {
        p.next();
        s.covariant = true;
      }
      p.expect('=');
      s.entries = p.entry_block();
      d.statements.push_back(std::move(s));
    } else if (word == "rule") {
      Statement s{Statement::Kind::Rule, at, {}, {}, false, {}, {}, {}};
      s.lhs = p.expr();
      p.expect('=');
      s.rhs = p.expr();
      d.statements.push_back(std::move(s));
    } else if (word == "variation") {
      Statement s{Statement::Kind::Variation, at, {}, {}, false, {}, {}, {}};
      s.lhs = p.reference(p.expect_ident("an external symbol"));
      p.expect('=');
      s.entries = p.entry_block();
      d.statements.push_back(std::move(s));
    } else if (word == "section") {
      Statement s{Statement::Kind::Section, at, unique_name(2, "section"), {}, false, {}, {}, {}};
      s.entries = p.entry_block();
      d.statements.push_back(std::move(s));
    } else {
      fail(at, "unknown statement '" + word + "'");
    }
    p.end_statement();
  }
  return d;
}

ModelPtr build_model(const Document& d) {
  if (!d.manifold) fail({1, 1}, "missing manifold declaration");
  std::vector<BundleSpec> bundles;
  // Declaring prefix by prefix pins a rejected declaration to its own line.
  for (const FieldDecl& f : d.fields) {
    bundles.push_back(f.spec);
    try {
      declare_model(*d.manifold, bundles, d.order, d.jetcap);
    } catch (const ModelError& e) {
      fail(f.pos, e.what());
    }
  }
  try {
    return declare_model(*d.manifold, bundles, d.order, d.jetcap);
  } catch (const ModelError& e) {
    fail(d.order_pos, e.what());
  }
}

}  // namespace

ModelFile parse_model(std::string_view text) {
  Document d = parse_document(text);
  ModelFile out;
  out.model = build_model(d);
  const ModelSpec& m = *out.model;
  const int n = m.dim();
  Builder b(m);
  for (const Statement& st : d.statements) {
    switch (st.kind) {
      case Statement::Kind::Lagrangian:
        out.lagrangians.emplace_back(st.name, b.eval(st.rhs));
        break;
      case Statement::Kind::Rule:
        out.rules.push_back(b.eval(st.lhs) - b.eval(st.rhs));
        break;
      case Statement::Kind::Source: {
        NamedSource ns{st.name, SourceSpec{out.model, {}, {}, st.covariant}};
        for (const auto& [name, pos] : st.over) {
          auto f = m.find(name);
          if (!f) fail(pos, "unknown field '" + name + "'");
          if (m.is_external(*f)) fail(pos, "cannot vary the external symbol '" + name + "'");
          if (std::find(ns.spec.over.begin(), ns.spec.over.end(), *f) != ns.spec.over.end()) fail(pos, "field '" + name + "' listed twice");
          ns.spec.over.push_back(*f);
        }
        for (const Entry& e : st.entries) {
          for_each_binding(b, n, e.lhs, [&] {
            Builder::Component c = b.component(e.lhs);
            if (std::find(ns.spec.over.begin(), ns.spec.over.end(), c.field) == ns.spec.over.end())
              fail(e.lhs.pos, "'" + e.lhs.name + "' is not among the varied fields");
            ns.spec.eps[b.key_atom(c)] = b.eval(e.rhs);
          });
        }
        out.sources.push_back(std::move(ns));
        break;
      }
      case Statement::Kind::Variation: {
        Builder::Component target = b.component(st.lhs);
        if (target.field == m.xi_field() || !m.is_external(target.field))
          fail(st.lhs.pos, "variation rules are declared for external symbols");
        Atom sym = b.key_atom(target);
        auto& row = out.variations[sym];
        for (const Entry& e : st.entries) {
          for_each_binding(b, n, e.lhs, [&] {
            Builder::Component c = b.component(e.lhs);
            if (c.field == m.xi_field() || m.is_external(c.field)) fail(e.lhs.pos, "variations are taken with respect to field components");
            Atom y = b.key_atom(c);
            // Entries are written per index pair; a metric coordinate g^{ij}
            // with i < j stands for both orderings.
            row[y] = Rational(m.multiplicity(c.field, y.comps())) * b.eval(e.rhs);
          });
        }
        break;
      }
      case Statement::Kind::Section:
        out.sections.push_back(build_section(m, b, st));
        break;
    }
  }
  return out;
}

Expr parse_expression(const ModelSpec& m, std::string_view text) {
  Parser p(lex(text));
  p.skip_newlines();
  Node n = p.expr();
  p.skip_newlines();
  if (!p.at_end()) fail(p.peek().pos, "unexpected " + describe(p.peek()) + " after the expression");
  Builder b(m);
  return b.eval(n);
}

const Expr& ModelFile::lagrangian(const std::string& name) const {
  if (lagrangians.empty()) throw ModelError("the model defines no lagrangian");
  if (name.empty()) return lagrangians.front().second;
  for (const auto& [k, v] : lagrangians)
    if (k == name) return v;
  throw ModelError("no lagrangian named '" + name + "'");
}

const NamedSource& ModelFile::source(const std::string& name) const {
  if (sources.empty()) throw ModelError("the model defines no source");
  if (name.empty()) return sources.front();
  for (const auto& s : sources)
    if (s.name == name) return s;
  throw ModelError("no source named '" + name + "'");
}

const Section& ModelFile::section(const std::string& name) const {
  if (sections.empty()) throw ModelError("the model defines no section");
  if (name.empty()) return sections.front();
  for (const auto& s : sections)
    if (s.name == name) return s;
  throw ModelError("no section named '" + name + "'");
}

}  // namespace vartool
