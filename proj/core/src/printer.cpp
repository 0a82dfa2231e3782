#include <sstream>

#include "expr_internal.hpp"

namespace vartool {

namespace {

std::string join_ints(const std::vector<int>& v, const char* sep) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k > 0) s += sep;
    s += std::to_string(v[k]);
  }
  return s;
}

std::string generic_text(const Atom& a) {
  switch (a.kind()) {
    case AtomKind::Base:
      return "x" + std::to_string(a.index());
    case AtomKind::Jet: {
      std::string s = "f" + std::to_string(a.field());
      if (a.rank() > 0) s += "^[" + join_ints(a.comps(), " ") + "]";
      if (a.order() == 0) return s;
      return "D[" + s + ", " + join_ints(a.derivs(), ", ") + "]";
    }
    case AtomKind::External:
      if (a.ext_comps().empty()) return a.name();
      return a.name() + "^[" + join_ints(a.ext_comps(), " ") + "]";
    case AtomKind::Power:
      break;
  }
  return "?";
}

std::string generic_latex(const Atom& a) {
  switch (a.kind()) {
    case AtomKind::Base:
      return "x^{" + std::to_string(a.index()) + "}";
    case AtomKind::Jet: {
      std::string s = "y_{" + std::to_string(a.field()) + "}";
      if (a.rank() > 0) s += "^{" + join_ints(a.comps(), "") + "}";
      if (a.order() > 0) s += "_{," + join_ints(a.derivs(), "") + "}";
      return s;
    }
    case AtomKind::External:
      if (a.ext_comps().empty()) return a.name();
      return a.name() + "^{" + join_ints(a.ext_comps(), "") + "}";
    case AtomKind::Power:
      break;
  }
  return "?";
}

std::string exp_text(const Exponent& e) {
  if (e.is_one()) return "";
  if (e.is_integer() && e.num() > 0) return "^" + e.str();
  return "^(" + e.str() + ")";
}

std::string exp_latex(const Exponent& e) {
  if (e.is_one()) return "";
  if (e.is_integer()) return "^{" + e.str() + "}";
  std::string s = e.num() < 0 ? "-" : "";
  return "^{" + s + "\\frac{" + std::to_string(e.num() < 0 ? -e.num() : e.num()) + "}{" +
         std::to_string(e.den()) + "}}";
}

std::string rational_latex(const Rational& r) {
  if (r.is_integer()) return r.str();
  mpq_class q = r.to_mpq();
  mpz_class n = q.get_num();
  std::string sign = n < 0 ? "-" : "";
  if (n < 0) n = -n;
  return sign + "\\frac{" + n.get_str() + "}{" + q.get_den().get_str() + "}";
}

struct Printer {
  const AtomNamer& namer;
  bool latex;

  std::string atom(const Atom& a) const {
    if (latex) return namer.latex ? namer.latex(a) : generic_latex(a);
    return namer.text ? namer.text(a) : generic_text(a);
  }

  std::string factor(const Factor& f) const {
    std::string base;
    if (f.atom.is_power()) {
      const Expr& b = f.atom.body();
      if (b.is_constant()) {
        base = latex ? rational_latex(*b.constant_value()) : b.constant_value()->str();
      } else {
        base = latex ? "\\left(" + expr(b) + "\\right)" : "(" + expr(b) + ")";
      }
    } else {
      base = atom(f.atom);
      if (latex && !f.exp.is_one() && base.find_first_of("^_") != std::string::npos) base = "\\left(" + base + "\\right)";
    }
    return base + (latex ? exp_latex(f.exp) : exp_text(f.exp));
  }

  std::string term(const Term& t) const {
    if (t.mono.empty()) return latex ? rational_latex(t.coef) : t.coef.str();
    std::string body;
    for (std::size_t k = 0; k < t.mono.size(); ++k) {
      if (k > 0) body += latex ? " " : "*";
      body += factor(t.mono[k]);
    }
    if (t.coef.is_one()) return body;
    if (t.coef == Rational(-1)) return "-" + body;
    return (latex ? rational_latex(t.coef) + " " : t.coef.str() + "*") + body;
  }

  std::string expr(const Expr& e) const {
    if (e.is_zero()) return "0";
    std::string s;
    for (std::size_t k = 0; k < e.size(); ++k) {
      std::string t = term(e.terms()[k]);
      if (k == 0) {
        s = t;
      } else if (t[0] == '-') {
        s += " - " + t.substr(1);
      } else {
        s += " + " + t;
      }
    }
    return s;
  }
};

}  // namespace

std::string to_text(const Expr& e, const AtomNamer& namer) { return Printer{namer, false}.expr(e); }

std::string to_latex(const Expr& e, const AtomNamer& namer) { return Printer{namer, true}.expr(e); }

std::string Expr::str() const { return to_text(*this); }

}  // namespace vartool
