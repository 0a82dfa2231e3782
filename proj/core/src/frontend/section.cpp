#include <map>

#include "vartool/error.hpp"
#include "vartool/frontend.hpp"

namespace vartool {

Expr evaluate_on_section(const ModelSpec& m, const Expr& e, const Section& s) {
  Bindings b;
  for (const Atom& a : e.free_atoms()) {
    if (a.is_base()) continue;
    auto f = m.field_of(a);
    if (a.is_external()) {
      if (auto it = s.values.find(a); it != s.values.end()) {
        b.emplace(a, it->second);
      } else if (f && s.fields.count(*f) != 0) {
        b.emplace(a, Expr());
      }
      continue;
    }
    if (m.is_xi(a)) throw ModelError("section '" + s.name + "' cannot define xi");
    if (!f || s.fields.count(*f) == 0)
      throw ModelError("section '" + s.name + "' does not define field '" + (f ? m.bundle(*f).name : std::string("?")) + "'");
    Expr v;
    if (auto it = s.values.find(a.underived()); it != s.values.end()) v = it->second;
    for (int d : a.derivs()) v = partial_derivative(v, Atom::base(d));
    b.emplace(a, std::move(v));
  }
  return substitute(e, b);
}

namespace {

std::string join(const std::vector<int>& v, const char* sep) {
  std::string s;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (k > 0) s += sep;
    s += std::to_string(v[k]);
  }
  return s;
}

// Split of a component tuple into upper and lower index groups.
std::pair<std::vector<int>, std::vector<int>> split(const ModelSpec& m, std::optional<FieldId> f, const std::vector<int>& comps) {
  int p = static_cast<int>(comps.size());
  if (f && *f != m.xi_field()) {
    const BundleSpec& b = m.bundle(*f);
    if (b.kind == BundleKind::Tensor) p = b.p;
    if (b.kind == BundleKind::Distortion) p = 1;
  }
  return {std::vector<int>(comps.begin(), comps.begin() + p), std::vector<int>(comps.begin() + p, comps.end())};
}

const std::map<std::string, std::string>& greek() {
  static const std::map<std::string, std::string> g = {
      {"alpha", "\\alpha"}, {"beta", "\\beta"},   {"gamma", "\\gamma"}, {"delta", "\\delta"}, {"epsilon", "\\epsilon"},
      {"zeta", "\\zeta"},   {"eta", "\\eta"},     {"theta", "\\theta"}, {"kappa", "\\kappa"}, {"lambda", "\\lambda"},
      {"mu", "\\mu"},       {"nu", "\\nu"},       {"xi", "\\xi"},       {"pi", "\\pi"},       {"rho", "\\rho"},
      {"sigma", "\\sigma"}, {"tau", "\\tau"},     {"phi", "\\phi"},     {"chi", "\\chi"},     {"psi", "\\psi"},
      {"omega", "\\omega"}, {"Phi", "\\Phi"},     {"Psi", "\\Psi"},     {"Omega", "\\Omega"}, {"Lambda", "\\Lambda"}};
  return g;
}

std::string latex_symbol(const std::string& name) {
  if (auto it = greek().find(name); it != greek().end()) return it->second;
  if (name.size() == 1) return name;
  return "\\mathrm{" + name + "}";
}

}  // namespace

AtomNamer model_namer(const ModelSpec& m) {
  ModelPtr keep = m.shared_from_this();
  auto name_of = [keep](const Atom& a) -> std::pair<std::string, std::optional<FieldId>> {
    if (keep->is_xi(a)) return {"xi", keep->xi_field()};
    auto f = keep->field_of(a);
    if (f) return {keep->bundle(*f).name, f};
    return {a.is_external() ? a.name() : "f" + std::to_string(a.field()), std::nullopt};
  };
  AtomNamer n;
  n.text = [keep, name_of](const Atom& a) -> std::string {
    if (a.is_base()) return "x" + std::to_string(a.index());
    auto [name, f] = name_of(a);
    auto [up, down] = split(*keep, f, a.is_jet() ? a.comps() : a.ext_comps());
    std::string s = name;
    if (!up.empty()) s += "^[" + join(up, " ") + "]";
    if (!down.empty()) s += "_[" + join(down, " ") + "]";
    if (a.is_jet() && a.order() > 0) return "D[" + s + ", " + join(a.derivs(), ", ") + "]";
    return s;
  };
  n.latex = [keep, name_of](const Atom& a) -> std::string {
    if (a.is_base()) return "x^{" + std::to_string(a.index()) + "}";
    auto [name, f] = name_of(a);
    auto [up, down] = split(*keep, f, a.is_jet() ? a.comps() : a.ext_comps());
    std::string s = latex_symbol(name);
    if (!up.empty()) s += "^{" + join(up, "") + "}";
    std::string low = join(down, "");
    if (a.is_jet() && a.order() > 0) low += "," + join(a.derivs(), "");
    if (!low.empty()) s += "_{" + low + "}";
    return s;
  };
  return n;
}

}  // namespace vartool
