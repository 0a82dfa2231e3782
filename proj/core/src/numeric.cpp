#include "vartool/numeric.hpp"

#include <set>

#include "vartool/error.hpp"

namespace vartool::numeric {

namespace {

void enumerate(int vars, int left, int v, std::array<int, kMaxDim>& cur, std::vector<std::array<int, kMaxDim>>& out) {
  if (v == vars) {
    out.push_back(cur);
    return;
  }
  for (int k = 0; k <= left; ++k) {
    cur[static_cast<std::size_t>(v)] = k;
    enumerate(vars, left - k, v + 1, cur, out);
  }
  cur[static_cast<std::size_t>(v)] = 0;
}

int degree_of(const std::array<int, kMaxDim>& e) {
  int d = 0;
  for (int x : e) d += x;
  return d;
}

double factorial(int k) {
  double r = 1.0;
  for (int i = 2; i <= k; ++i) r *= i;
  return r;
}

}  // namespace

SeriesSpace::SeriesSpace(int vars, int degree) : vars_(vars), degree_(degree) {
  if (vars < 1 || vars > kMaxDim || degree < 0) throw ModelError("bad series space");
  std::array<int, kMaxDim> cur{};
  enumerate(vars, degree, 0, cur, exps_);
  std::stable_sort(exps_.begin(), exps_.end(), [](const auto& a, const auto& b) { return degree_of(a) < degree_of(b); });
  for (std::size_t k = 0; k < exps_.size(); ++k) {
    index_.emplace(exps_[k], static_cast<int>(k));
    deg_.push_back(degree_of(exps_[k]));
  }
  for (int a = 0; a < size(); ++a)
    for (int b = 0; b < size(); ++b) {
      if (deg_[static_cast<std::size_t>(a)] + deg_[static_cast<std::size_t>(b)] > degree) continue;
      std::array<int, kMaxDim> e{};
      for (int v = 0; v < kMaxDim; ++v)
        e[static_cast<std::size_t>(v)] = exps_[static_cast<std::size_t>(a)][static_cast<std::size_t>(v)] +
                                         exps_[static_cast<std::size_t>(b)][static_cast<std::size_t>(v)];
      products_.push_back({a, b, index(e)});
    }
  raised_.assign(static_cast<std::size_t>(size() * vars), -1);
  for (int k = 0; k < size(); ++k)
    for (int v = 0; v < vars; ++v) {
      auto e = exps_[static_cast<std::size_t>(k)];
      ++e[static_cast<std::size_t>(v)];
      raised_[static_cast<std::size_t>(k * vars + v)] = index(e);
    }
}

int SeriesSpace::index(const std::array<int, kMaxDim>& e) const {
  auto it = index_.find(e);
  return it == index_.end() ? -1 : it->second;
}

Series::Series(const SeriesSpace& sp, double c0) : sp_(&sp), c_(static_cast<std::size_t>(sp.size()), 0.0) { c_[0] = c0; }

double Series::derivative_at_origin(const std::vector<int>& multi) const {
  if (c_.empty()) return 0.0;
  std::array<int, kMaxDim> e{};
  for (int i : multi) ++e[static_cast<std::size_t>(i)];
  int k = sp_->index(e);
  if (k < 0) throw ModelError("derivative beyond the series truncation");
  double f = 1.0;
  for (int x : e) f *= factorial(x);
  return c_[static_cast<std::size_t>(k)] * f;
}

Series Series::partial(int v) const {
  if (c_.empty()) return *this;
  Series out(*sp_);
  for (int k = 0; k < sp_->size(); ++k) {
    int r = sp_->raised(k, v);
    if (r >= 0) out.c_[static_cast<std::size_t>(k)] = c_[static_cast<std::size_t>(r)] * (sp_->exponents(k)[static_cast<std::size_t>(v)] + 1);
  }
  return out;
}

Series& Series::operator+=(const Series& o) {
  if (o.c_.empty()) return *this;
  if (c_.empty()) return *this = o;
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
  return *this;
}

Series& Series::operator-=(const Series& o) {
  if (o.c_.empty()) return *this;
  if (c_.empty()) return *this = -o;
  for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
  return *this;
}

Series& Series::operator*=(double s) {
  for (double& x : c_) x *= s;
  return *this;
}

Series operator*(const Series& a, const Series& b) {
  if (a.c_.empty() || b.c_.empty()) return {};
  Series out(*a.sp_);
  for (const auto& p : a.sp_->products())
    out.c_[static_cast<std::size_t>(p.out)] += a.c_[static_cast<std::size_t>(p.a)] * b.c_[static_cast<std::size_t>(p.b)];
  return out;
}

Series pow(const Series& s, double q) {
  if (s.empty()) {
    if (q > 0) return s;
    throw DomainError("0 to a non-positive power");
  }
  const double c0 = s.value();
  const bool integral = q == std::floor(q);
  if (c0 == 0.0 || (c0 < 0.0 && !integral)) throw DomainError("power of a series with non-positive constant term");
  Series h = s;
  h[0] = 0.0;
  // sum_k binom(q, k) c0^(q-k) h^k; h is nilpotent beyond the truncation.
  Series out(s.space(), std::pow(c0, q));
  Series hk = h;
  double binom = 1.0;
  for (int k = 1; k <= s.space().degree(); ++k) {
    binom *= (q - (k - 1)) / k;
    out += (binom * std::pow(c0, q - k)) * hk;
    hk = hk * h;
  }
  return out;
}

// ---- tape ------------------------------------------------------------------------

const Series& Var::value() const { return t_->value(id_); }

Var Tape::push(Series v, Op op, int a, int b, double q) {
  nodes_.push_back(Node{std::move(v), op, a, b, q});
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::input(Series v) { return push(std::move(v), Op::Leaf, -1, -1, 0.0); }
Var Tape::constant(double c) { return push(Series(sp_, c), Op::Leaf, -1, -1, 0.0); }

Var operator+(const Var& a, const Var& b) {
  if (a.id_ < 0) return b;
  if (b.id_ < 0) return a;
  return a.t_->push(a.value() + b.value(), Tape::Op::Add, a.id_, b.id_, 0.0);
}

Var operator-(const Var& a, const Var& b) {
  if (b.id_ < 0) return a;
  if (a.id_ < 0) return -b;
  return a.t_->push(a.value() - b.value(), Tape::Op::Sub, a.id_, b.id_, 0.0);
}

Var operator*(const Var& a, const Var& b) {
  if (a.id_ < 0 || b.id_ < 0) return {};
  return a.t_->push(a.value() * b.value(), Tape::Op::Mul, a.id_, b.id_, 0.0);
}

Var operator*(double s, const Var& a) {
  if (a.id_ < 0) return a;
  return a.t_->push(s * a.value(), Tape::Op::Scale, a.id_, -1, s);
}

Var operator+(const Var& a, double s) {
  if (a.id_ < 0) throw ModelError("constant shift of an unbound tape variable");
  Series v = a.value();
  v[0] += s;
  return a.t_->push(std::move(v), Tape::Op::Shift, a.id_, -1, s);
}

Var pow(const Var& a, double q) {
  if (a.id_ < 0) {
    if (q > 0) return a;
    throw DomainError("0 to a non-positive power");
  }
  return a.t_->push(pow(a.value(), q), Tape::Op::Pow, a.id_, -1, q);
}

std::vector<Series> Tape::gradient(const Var& out, const std::vector<Var>& inputs) const {
  std::vector<Series> adj(nodes_.size());
  if (out.id() >= 0) adj[static_cast<std::size_t>(out.id())] = Series(sp_, 1.0);
  for (int k = out.id(); k >= 0; --k) {
    const Series& g = adj[static_cast<std::size_t>(k)];
    if (g.empty()) continue;
    const Node& n = nodes_[static_cast<std::size_t>(k)];
    auto& aa = n.a >= 0 ? adj[static_cast<std::size_t>(n.a)] : adj[static_cast<std::size_t>(k)];
    switch (n.op) {
      case Op::Leaf:
        break;
      case Op::Add:
        aa += g;
        adj[static_cast<std::size_t>(n.b)] += g;
        break;
      case Op::Sub:
        aa += g;
        adj[static_cast<std::size_t>(n.b)] -= g;
        break;
      case Op::Mul: {
        Series ga = g * nodes_[static_cast<std::size_t>(n.b)].val;
        Series gb = g * nodes_[static_cast<std::size_t>(n.a)].val;
        aa += ga;
        adj[static_cast<std::size_t>(n.b)] += gb;
        break;
      }
      case Op::Scale:
        aa += n.q * g;
        break;
      case Op::Shift:
        aa += g;
        break;
      case Op::Pow:
        aa += g * (n.q * pow(nodes_[static_cast<std::size_t>(n.a)].val, n.q - 1.0));
        break;
    }
  }
  std::vector<Series> out_grad;
  out_grad.reserve(inputs.size());
  for (const Var& v : inputs) {
    Series g = adj[static_cast<std::size_t>(v.id())];
    out_grad.push_back(g.empty() ? Series(sp_) : g);
  }
  return out_grad;
}

// ---- sections and Euler-Lagrange ------------------------------------------------------

Series section_series(const SeriesSpace& sp, const PointAssignment& p, const Atom& a) {
  Series s(sp);
  switch (a.kind()) {
    case AtomKind::Base: {
      s[0] = p.value(a).to_double();
      std::array<int, kMaxDim> e{};
      e[static_cast<std::size_t>(a.index())] = 1;
      if (int k = sp.index(e); k >= 0) s[k] = 1.0;
      return s;
    }
    case AtomKind::External:
      s[0] = p.value(a).to_double();
      return s;
    case AtomKind::Jet: {
      const std::vector<int> comps = a.comps();
      for (int k = 0; k < sp.size(); ++k) {
        std::vector<int> d = a.derivs();
        double f = 1.0;
        for (int v = 0; v < sp.vars(); ++v) {
          int e = sp.exponents(k)[static_cast<std::size_t>(v)];
          for (int r = 0; r < e; ++r) d.push_back(v);
          f *= factorial(e);
        }
        std::sort(d.begin(), d.end());
        s[k] = p.value(Atom::jet(a.field(), comps, d)).to_double() / f;
      }
      return s;
    }
    case AtomKind::Power:
      break;
  }
  throw ModelError("power atoms have no section series");
}

std::map<Atom, Series> euler_lagrange(const SeriesSpace& sp, const PointAssignment& p,
                                      const std::vector<Atom>& components,
                                      const std::function<Var(Tape&, const SlotFn&)>& build) {
  Tape tape(sp);
  std::map<Atom, Var> slots;
  SlotFn slot = [&](const Atom& a) -> Var {
    auto it = slots.find(a);
    if (it != slots.end()) return it->second;
    Var v = tape.input(section_series(sp, p, a));
    slots.emplace(a, v);
    return v;
  };
  Var out = build(tape, slot);
  const std::set<Atom> comps(components.begin(), components.end());
  std::vector<Atom> varied;
  std::vector<Var> inputs;
  for (const auto& [a, v] : slots)
    if (a.is_jet() && comps.count(a.underived()) != 0U) {
      varied.push_back(a);
      inputs.push_back(v);
    }
  std::vector<Series> grads = tape.gradient(out, inputs);
  std::map<Atom, Series> e;
  for (const Atom& y : components) e.emplace(y, Series(sp));
  for (std::size_t k = 0; k < varied.size(); ++k) {
    Series g = grads[k];
    for (int i : varied[k].derivs()) g = g.partial(i);
    if (varied[k].order() % 2 == 1) g *= -1.0;
    e[varied[k].underived()] += g;
  }
  return e;
}

std::map<Atom, Series> euler_lagrange(const SeriesSpace& sp, const PointAssignment& p,
                                      const std::vector<Atom>& components, const Expr& density) {
  return euler_lagrange(sp, p, components, [&](Tape& t, const SlotFn& slot) {
    return evaluate(density, slot, t.constant(1.0));
  });
}

}  // namespace vartool::numeric
