#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "vartool/error.hpp"
#include "vartool/frontend.hpp"
#include "vartool/metric_geom.hpp"
#include "vartool/numcheck.hpp"

namespace vartool {

namespace {

class UsageError : public Error {
 public:
  using Error::Error;
};

struct Options {
  std::string model_path;
  std::string format = "text";
  std::string out;
  std::optional<std::uint64_t> seed;
  bool timings = false;
  std::string lagrangian;

  std::vector<std::string> fields;
  bool assert_zero = false;
  std::string mode = "symbolic";
  std::optional<int> trials;
  std::optional<double> tol;
  bool covariant_form = false;
  std::string xi;
  std::string source;
  std::string law = "auto";
  std::string expect;
  int points = 20;
  double einstein_tol = 1e-9;
  double bianchi_tol = 1e-7;
  std::string section;
  std::vector<std::string> exprs;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read model file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::uint64_t default_seed() {
  const char* env = std::getenv("VARTOOL_SEED");
  if (env == nullptr || *env == '\0') return 1;
  try {
    std::size_t used = 0;
    unsigned long long v = std::stoull(env, &used);
    if (used != std::char_traits<char>::length(env)) throw std::invalid_argument(env);
    return v;
  } catch (const std::exception&) {
    throw UsageError(std::string("VARTOOL_SEED is not an unsigned integer: '") + env + "'");
  }
}

// Splits "a, b, c" at commas outside brackets.
std::vector<std::string> split_top_level(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char c : s) {
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (c == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

Verdict symbolic_verdict(std::string name, const Expr& residual, const AtomNamer& namer) {
  Verdict v;
  v.name = std::move(name);
  v.zero = is_zero_symbolic(residual);
  v.symbolic_zero = v.zero;
  if (!v.zero) {
    std::string w = to_text(residual, namer);
    if (w.size() > 200) w = w.substr(0, 200) + "...";
    v.detail = "residual " + w;
  }
  return v;
}

struct Context {
  const ModelFile& file;
  const ModelSpec& m;
  AtomNamer namer;
  std::uint64_t seed;
};

std::string index_name(const std::string& head, const std::vector<int>& up, const std::vector<int>& down) {
  auto j = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t k = 0; k < v.size(); ++k) s += (k ? " " : "") + std::to_string(v[k]);
    return s;
  };
  std::string s = head;
  if (!up.empty()) s += "^[" + j(up) + "]";
  if (!down.empty()) s += "_[" + j(down) + "]";
  return s;
}

std::string index_latex(const std::string& head, const std::vector<int>& up, const std::vector<int>& down) {
  auto j = [](const std::vector<int>& v) {
    std::string s;
    for (int x : v) s += std::to_string(x);
    return s;
  };
  std::string s = head;
  if (!up.empty()) s += "^{" + j(up) + "}";
  if (!down.empty()) s += "_{" + j(down) + "}";
  return s;
}

void run_el(const Context& c, const Options& o, Report& r) {
  Lagrangian l{c.file.model, c.file.lagrangian(o.lagrangian)};
  std::vector<FieldId> fields;
  if (o.fields.empty()) {
    for (FieldId f = 0; f < static_cast<FieldId>(c.m.bundles().size()); ++f)
      if (!c.m.is_external(f)) fields.push_back(f);
  } else {
    for (const std::string& name : o.fields) {
      auto f = c.m.find(name);
      if (!f || c.m.is_external(*f)) throw UsageError("'" + name + "' is not a varied field of the model");
      fields.push_back(*f);
    }
  }
  bool all_zero = true;
  for (FieldId f : fields)
    for (const Atom& y : c.m.component_atoms(f)) {
      Expr e = euler_lagrange(l, y, c.file.variations);
      all_zero = all_zero && e.is_zero();
      r.results.push_back({"E[" + c.namer.text(y) + "]", "E_{" + c.namer.latex(y) + "}", e});
    }
  if (o.assert_zero) {
    Verdict v;
    v.name = "euler-lagrange-vanishes";
    v.zero = all_zero;
    v.symbolic_zero = all_zero;
    r.verdicts.push_back(v);
  }
}

void run_covariance(const Context& c, const Options& o, Report& r) {
  Lagrangian l{c.file.model, c.file.lagrangian(o.lagrangian)};
  CovarianceReport cr = check_covariance(l);
  for (const auto& [mono, coef] : cr.failing)
    r.results.push_back({"obstruction[" + to_text(monomial_expr(mono), c.namer) + "]", "", coef});
  Verdict v;
  v.name = "covariant";
  v.zero = cr.covariant;
  v.symbolic_zero = cr.covariant;
  if (!cr.covariant) v.detail = std::to_string(cr.failing.size()) + " nonzero coefficients of xi jets";
  r.verdicts.push_back(v);
}

void run_emt(const Context& c, const Options& o, Report& r) {
  Lagrangian l{c.file.model, c.file.lagrangian(o.lagrangian)};
  EMTensor dens = em_tensor(l, c.file.variations);
  const int n = c.m.dim();
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      r.results.push_back({index_name("Tdens", {j}, {i}), index_latex("\\mathcal{T}", {j}, {i}), dens.at(j, i)});
  if (!c.m.metric()) return;
  auto low = lower_second(c.m, tensorial(c.m, dens));
  Expr asym;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Expr& t = low[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      r.results.push_back({index_name("T", {}, {i, j}), index_latex("T", {}, {i, j}), t});
      if (i < j) asym += (t - low[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) * (t - low[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
    }
  Verdict v;
  v.name = "symmetric";
  v.zero = asym.is_zero();
  v.symbolic_zero = v.zero;
  v.asserted = false;
  r.verdicts.push_back(v);
}

void run_balance(const Context& c, const Options& o, Report& r) {
  Lagrangian l{c.file.model, c.file.lagrangian(o.lagrangian)};
  NoetherIdentity id;
  try {
    id = total_noether_identity(l);
  } catch (const ModelError& e) {
    Verdict v;
    v.name = "covariant";
    v.zero = false;
    v.symbolic_zero = false;
    v.detail = e.what();
    r.verdicts.push_back(v);
    return;
  }
  const int n = c.m.dim();
  for (int i = 0; i < n; ++i)
    r.results.push_back({index_name("balance", {}, {i}), index_latex("B", {}, {i}), id.onshell[static_cast<std::size_t>(i)]});
  for (int i = 0; i < n; ++i) {
    const Expr& res = id.residual[static_cast<std::size_t>(i)];
    std::string name = index_name("noether-identity", {}, {i});
    if (o.mode == "symbolic") {
      r.verdicts.push_back(symbolic_verdict(name, res, c.namer));
      continue;
    }
    ZeroReport z = is_zero_numeric(res, c.m, o.trials.value_or(20), o.tol.value_or(1e-9), c.seed);
    Verdict v;
    v.name = name;
    v.zero = z.zero;
    v.max_abs_residual = z.max_abs;
    if (z.inconclusive) {
      v.detail = "inconclusive: " + std::to_string(z.skipped) + " of " + std::to_string(z.trials) + " trials skipped";
    } else if (!z.zero) {
      std::ostringstream w;
      w << "witness seed " << z.witness_seed << " value " << z.witness_value;
      v.detail = w.str();
    }
    r.verdicts.push_back(v);
  }
  if (o.covariant_form) {
    if (!c.m.metric()) throw UsageError("--covariant-form needs a metric field");
    SourceForm tau = em_source_form(l, c.file.variations);
    auto raw = raw_balance(c.m, tau);
    auto cov = covariant_balance(c.m, tau);
    for (int i = 0; i < n; ++i)
      r.verdicts.push_back(symbolic_verdict(index_name("covariant-form", {}, {i}),
                                            cov[static_cast<std::size_t>(i)] - raw[static_cast<std::size_t>(i)], c.namer));
  }
}

void run_noether(const Context& c, const Options& o, Report& r) {
  Lagrangian l{c.file.model, c.file.lagrangian(o.lagrangian)};
  const int n = c.m.dim();
  if (o.xi.empty() || o.xi == "generic") {
    NoetherEquivalence ne = noether_equivalence_check(l);
    for (int j = 0; j < n; ++j)
      r.results.push_back({index_name("D", {j}, {}), index_latex("D", {j}, {}), ne.difference[static_cast<std::size_t>(j)]});
    r.verdicts.push_back(symbolic_verdict("noether-equivalence", ne.divergence, c.namer));
    return;
  }
  auto parts = split_top_level(o.xi);
  if (static_cast<int>(parts.size()) != n)
    throw UsageError("--xi needs " + std::to_string(n) + " comma-separated components");
  VectorField v = VectorField::zero(n);
  for (int i = 0; i < n; ++i) {
    Expr e = parse_expression(c.m, parts[static_cast<std::size_t>(i)]);
    if (e.contains_if([](const Atom& a) { return a.is_jet() || a.is_external(); }))
      throw UsageError("--xi components must be functions of the base coordinates");
    v.xi[static_cast<std::size_t>(i)] = e;
  }
  // Canonical lift: Xi^A = C^{Aj}_i d_j xi^i.
  for (FieldId f = 0; f < static_cast<FieldId>(c.m.bundles().size()); ++f) {
    if (c.m.is_external(f)) continue;
    for (const Atom& y : c.m.component_atoms(f)) {
      Expr xa;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          Expr cij = lift_coefficient(c.m, y, i, j);
          if (!cij.is_zero()) xa += cij * partial_derivative(v.xi[static_cast<std::size_t>(i)], Atom::base(j));
        }
      if (!xa.is_zero()) v.vertical[y] = xa;
    }
  }
  Prolongation pr(c.m, v);
  auto current = noether_current(l, pr);
  for (int i = 0; i < n; ++i)
    r.results.push_back({index_name("J", {i}, {}), index_latex("J", {i}, {}), current[static_cast<std::size_t>(i)]});
  r.verdicts.push_back(symbolic_verdict("first-variation", first_variation_residual(l, v), c.namer));
  Verdict sym = symbolic_verdict("symmetry", lie_derivative_lagrangian(l, pr), c.namer);
  sym.asserted = false;
  r.verdicts.push_back(sym);
}

void run_complete(const Context& c, const Options& o, Report& r) {
  const NamedSource& ns = c.file.source(o.source);
  std::optional<ScalingLaw> law;
  bool metric_over = c.m.metric() && std::find(ns.spec.over.begin(), ns.spec.over.end(), *c.m.metric()) != ns.spec.over.end();
  if (o.law == "metric" || (o.law == "auto" && (ns.spec.covariant || metric_over))) {
    if (!c.m.metric()) throw UsageError("--law metric needs a metric field");
    law = ScalingLaw::metric(c.m);
  } else {
    law = ScalingLaw::fiber(ns.spec.over);
  }
  CompletionResult res;
  try {
    res = canonical_completion(ns.spec, law, c.file.rules, c.file.variations);
  } catch (const NonIntegrableHomotopy& e) {
    Verdict v;
    v.name = "integrable";
    v.zero = false;
    v.detail = e.what();
    r.verdicts.push_back(v);
    return;
  }
  r.results.push_back({"lambda", "\\lambda", res.vt_lagrangian.density});
  bool variational = true;
  for (const auto& [a, k] : res.kappa) {
    if (k.is_zero()) continue;
    variational = false;
    r.results.push_back({"kappa[" + c.namer.text(a) + "]", "\\kappa_{" + c.namer.latex(a) + "}", k});
  }
  Verdict v;
  v.name = "variational";
  v.zero = variational;
  v.symbolic_zero = variational;
  v.asserted = false;
  r.verdicts.push_back(v);
  if (!o.expect.empty()) {
    Expr want = parse_expression(c.m, o.expect);
    r.verdicts.push_back(symbolic_verdict("expected-lagrangian", res.vt_lagrangian.density - want, c.namer));
  }
}

void run_einstein(const Context& c, const Options& o, Report& r) {
  if (!c.m.metric()) throw UsageError("einstein-check needs a metric field");
  EinsteinReport e = einstein_check(c.m, o.points, c.seed, o.einstein_tol, o.bianchi_tol);
  Verdict oracle;
  oracle.name = "einstein-oracle";
  Verdict bianchi;
  bianchi.name = "bianchi";
  if (e.symbolic) {
    oracle.zero = bianchi.zero = e.ok;
    oracle.symbolic_zero = bianchi.symbolic_zero = e.ok;
    oracle.detail = "n = " + std::to_string(e.dim) + ": Euler-Lagrange expressions vanish identically";
  } else {
    oracle.zero = e.ok && e.max_rel_error < o.einstein_tol;
    bianchi.zero = e.ok && e.max_bianchi < o.bianchi_tol;
    oracle.max_abs_residual = e.max_rel_error;
    bianchi.max_abs_residual = e.max_bianchi;
    oracle.detail = std::to_string(e.points) + " points, " + std::to_string(e.skipped) + " skipped, relative error";
    bianchi.detail = "normalized residual";
  }
  r.verdicts.push_back(oracle);
  r.verdicts.push_back(bianchi);
}

void run_section_eval(const Context& c, const Options& o, Report& r) {
  if (o.exprs.empty() && o.lagrangian.empty()) throw UsageError("section-eval needs --expr or --lagrangian");
  const Section& s = c.file.section(o.section);
  if (!o.lagrangian.empty())
    r.results.push_back({o.lagrangian, "\\mathcal{L}", evaluate_on_section(c.m, c.file.lagrangian(o.lagrangian), s)});
  for (const std::string& text : o.exprs)
    r.results.push_back({text, "", evaluate_on_section(c.m, parse_expression(c.m, text), s)});
}

}  // namespace

int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Symbolic calculus of variations on jet bundles", "vartool"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "latex", "json"}));
  app.add_option("--out", o.out, "Write the report to a file");
  app.add_option("--seed", o.seed, "Seed for numeric checks (default: $VARTOOL_SEED or 1)");
  app.add_flag("--timings", o.timings, "Include timings in the report");

  auto model_arg = [&](CLI::App* s) { s->add_option("model", o.model_path, "Model file (.vl)")->required(); };
  auto lagr_arg = [&](CLI::App* s) { s->add_option("-l,--lagrangian", o.lagrangian, "Lagrangian name (default: first)"); };

  auto* el = app.add_subcommand("el", "Euler-Lagrange expressions");
  model_arg(el);
  lagr_arg(el);
  el->add_option("--field", o.fields, "Fields to vary (default: all non-external)");
  el->add_flag("--assert-zero", o.assert_zero, "Assert that every expression vanishes");

  auto* cov = app.add_subcommand("covariance", "Check invariance under lifted diffeomorphisms");
  model_arg(cov);
  lagr_arg(cov);

  auto* emt = app.add_subcommand("emt", "Energy-momentum density and tensor");
  model_arg(emt);
  lagr_arg(emt);

  auto* bal = app.add_subcommand("balance", "Total Noether identity and balance law");
  model_arg(bal);
  lagr_arg(bal);
  bal->add_option("--mode", o.mode, "symbolic or numeric")->check(CLI::IsMember({"symbolic", "numeric"}));
  bal->add_option("--trials", o.trials, "Numeric trials")->check(CLI::PositiveNumber);
  bal->add_option("--tol", o.tol, "Numeric tolerance")->check(CLI::PositiveNumber);
  bal->add_flag("--covariant-form", o.covariant_form, "Also compare the covariant and raw balance");

  auto* noe = app.add_subcommand("noether", "Noether current or the generic equivalence check");
  model_arg(noe);
  lagr_arg(noe);
  noe->add_option("--xi", o.xi, "Comma-separated components of xi in x0.., or 'generic'");

  auto* comp = app.add_subcommand("complete", "Vainberg-Tonti Lagrangian and completion");
  model_arg(comp);
  comp->add_option("--source", o.source, "Source name (default: first)");
  comp->add_option("--law", o.law, "Homothety: auto, fiber or metric")->check(CLI::IsMember({"auto", "fiber", "metric"}));
  comp->add_option("--expect", o.expect, "Assert the Lagrangian equals this expression");

  auto* ein = app.add_subcommand("einstein-check", "Hilbert Lagrangian against the Einstein tensor");
  model_arg(ein);
  ein->add_option("--points", o.points, "Sample points")->check(CLI::PositiveNumber);
  ein->add_option("--tol", o.einstein_tol, "Relative tolerance")->check(CLI::PositiveNumber);
  ein->add_option("--bianchi-tol", o.bianchi_tol, "Bianchi tolerance")->check(CLI::PositiveNumber);

  auto* sec = app.add_subcommand("section-eval", "Evaluate expressions on a section");
  model_arg(sec);
  lagr_arg(sec);
  sec->add_option("--section", o.section, "Section name (default: first)");
  sec->add_option("--expr", o.exprs, "Expression to evaluate (repeatable)");

  std::vector<std::string> args(argv.rbegin(), argv.rend());
  try {
    app.parse(args);
    if (o.mode == "symbolic" && (o.trials || o.tol)) throw CLI::ValidationError("--trials/--tol apply only to --mode numeric");
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Report r;
    r.command = sub->get_name();
    r.model = o.model_path;
    r.seed = o.seed ? *o.seed : default_seed();
    auto t0 = Clock::now();
    ModelFile file;
    try {
      file = parse_model(read_file(o.model_path));
    } catch (const ParseError& e) {
      err << o.model_path << ":" << e.what() << "\n";
      return 2;
    }
    r.timings.emplace_back("parse", seconds_since(t0));
    Context c{file, *file.model, model_namer(*file.model), r.seed};
    auto t1 = Clock::now();
    const std::string& cmd = r.command;
    if (cmd == "el") run_el(c, o, r);
    else if (cmd == "covariance") run_covariance(c, o, r);
    else if (cmd == "emt") run_emt(c, o, r);
    else if (cmd == "balance") run_balance(c, o, r);
    else if (cmd == "noether") run_noether(c, o, r);
    else if (cmd == "complete") run_complete(c, o, r);
    else if (cmd == "einstein-check") run_einstein(c, o, r);
    else run_section_eval(c, o, r);
    r.timings.emplace_back(cmd, seconds_since(t1));

    Format f = o.format == "json" ? Format::Json : o.format == "latex" ? Format::Latex : Format::Text;
    std::string text = emit(r, f, c.namer, o.timings);
    if (o.out.empty()) {
      out << text;
    } else {
      std::ofstream file_out(o.out, std::ios::binary);
      if (!file_out || !(file_out << text)) {
        err << "cannot write '" << o.out << "'\n";
        return 2;
      }
    }
    if (!r.ok())
      for (const Verdict& v : r.verdicts)
        if (v.asserted && !v.zero) err << "failed: " << v.name << (v.detail.empty() ? "" : ": " + v.detail) << "\n";
    return r.ok() ? 0 : 1;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    err << "argument:" << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace vartool
