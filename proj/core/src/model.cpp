#include "vartool/model.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "vartool/error.hpp"

namespace vartool {

BundleSpec BundleSpec::scalar(std::string name, Role role) {
  BundleSpec b;
  b.name = std::move(name);
  b.role = role;
  return b;
}

BundleSpec BundleSpec::tensor(std::string name, int p, int q, Role role) {
  BundleSpec b;
  b.name = std::move(name);
  b.kind = BundleKind::Tensor;
  b.p = p;
  b.q = q;
  b.role = role;
  return b;
}

BundleSpec BundleSpec::metric(std::string name) {
  BundleSpec b;
  b.name = std::move(name);
  b.kind = BundleKind::Metric;
  b.p = 2;
  b.role = Role::Background;
  return b;
}

BundleSpec BundleSpec::distortion(std::string name) {
  BundleSpec b;
  b.name = std::move(name);
  b.kind = BundleKind::Distortion;
  b.p = 1;
  b.q = 2;
  b.role = Role::Background;
  return b;
}

namespace {

void enumerate(int n, int rank, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == rank) {
    out.push_back(cur);
    return;
  }
  for (int i = 0; i < n; ++i) {
    cur.push_back(i);
    enumerate(n, rank, cur, out);
    cur.pop_back();
  }
}

}  // namespace

ModelPtr declare_model(ManifoldSpec manifold, std::vector<BundleSpec> bundles, int max_order, int jet_cap) {
  if (manifold.dim < 1 || manifold.dim > kMaxDim)
    throw ModelError("manifold dimension must lie in [1, " + std::to_string(kMaxDim) + "]");
  if (manifold.signature.empty()) manifold.signature.assign(static_cast<std::size_t>(manifold.dim), 1);
  if (static_cast<int>(manifold.signature.size()) != manifold.dim)
    throw ModelError("signature length differs from the dimension");
  for (int s : manifold.signature)
    if (s != 1 && s != -1) throw ModelError("signature entries must be +1 or -1");
  if (max_order < 1) throw ModelError("order must be at least 1");
  if (jet_cap < max_order + 1 || jet_cap > kMaxJetOrder)
    throw ModelError("jet-order cap must lie in [order + 1, " + std::to_string(kMaxJetOrder) + "]");

  auto m = std::shared_ptr<ModelSpec>(new ModelSpec());
  m->manifold_ = std::move(manifold);
  m->max_order_ = max_order;
  m->jet_cap_ = jet_cap;
  for (std::size_t k = 0; k < bundles.size(); ++k) {
    BundleSpec& b = bundles[k];
    const auto f = static_cast<FieldId>(k);
    if (b.name.empty()) throw ModelError("field without a name");
    if (b.name == "t" || b.name == "xi") throw ModelError("'" + b.name + "' is a reserved name");
    if (!m->by_name_.emplace(b.name, f).second) throw ModelError("duplicate field name '" + b.name + "'");
    if (b.weight && !b.external) throw ModelError("weight declared on non-external field '" + b.name + "'");
    switch (b.kind) {
      case BundleKind::Scalar:
        b.p = b.q = 0;
        break;
      case BundleKind::Tensor:
        if (b.p < 0 || b.q < 0 || b.p + b.q > kMaxComps)
          throw ModelError("tensor rank of '" + b.name + "' must be at most " + std::to_string(kMaxComps));
        break;
      case BundleKind::Metric:
        if (m->metric_) throw ModelError("more than one metric declared");
        if (b.external) throw ModelError("the metric cannot be external");
        b.p = 2;
        b.q = 0;
        b.role = Role::Background;
        m->metric_ = f;
        break;
      case BundleKind::Distortion:
        if (m->distortion_) throw ModelError("more than one distortion declared");
        if (b.external) throw ModelError("the distortion cannot be external");
        b.p = 1;
        b.q = 2;
        b.role = Role::Background;
        m->distortion_ = f;
        break;
    }
  }
  if (bundles.size() >= (1U << 16) - 1) throw ModelError("too many fields");
  m->bundles_ = std::move(bundles);
  if (m->metric_) m->build_metric_cache();
  return m;
}

int ModelSpec::signature_sign() const {
  int s = 1;
  for (int v : manifold_.signature) s *= v;
  return s;
}

std::optional<FieldId> ModelSpec::find(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) return std::nullopt;
  return it->second;
}

FieldId ModelSpec::id(const std::string& name) const {
  if (auto f = find(name)) return *f;
  throw ModelError("unknown field '" + name + "'");
}

int ModelSpec::rank(FieldId f) const {
  if (f == xi_field()) return 1;
  const BundleSpec& b = bundle(f);
  return b.p + b.q;
}

std::vector<std::vector<int>> ModelSpec::components(FieldId f) const {
  std::vector<std::vector<int>> out;
  std::vector<int> cur;
  enumerate(dim(), rank(f), cur, out);
  if (f != xi_field() && bundle(f).kind == BundleKind::Metric)
    std::erase_if(out, [](const std::vector<int>& c) { return c[0] > c[1]; });
  return out;
}

int ModelSpec::multiplicity(FieldId f, const std::vector<int>& comps) const {
  if (f != xi_field() && bundle(f).kind == BundleKind::Metric && comps[0] != comps[1]) return 2;
  return 1;
}

bool ModelSpec::is_external(FieldId f) const { return f != xi_field() && bundle(f).external; }

bool ModelSpec::is_background(FieldId f) const { return f != xi_field() && bundle(f).role == Role::Background; }

Atom ModelSpec::atom(FieldId f, std::vector<int> comps, std::vector<int> derivs) const {
  if (f < 0 || f > xi_field()) throw ModelError("unknown field id " + std::to_string(f));
  if (static_cast<int>(comps.size()) != rank(f))
    throw ModelError("wrong number of indices on '" + (f == xi_field() ? std::string("xi") : bundle(f).name) + "'");
  for (int c : comps)
    if (c < 0 || c >= dim()) throw ModelError("component index out of range");
  for (int d : derivs)
    if (d < 0 || d >= dim()) throw ModelError("derivative index out of range");
  if (f != xi_field() && bundle(f).kind == BundleKind::Metric && comps[0] > comps[1]) std::swap(comps[0], comps[1]);
  if (is_external(f)) {
    if (!derivs.empty()) throw ModelError("external symbol '" + bundle(f).name + "' has no jets");
    return Atom::external(bundle(f).name, std::move(comps));
  }
  if (static_cast<int>(derivs.size()) > jet_cap_)
    throw JetOrderError("jet order " + std::to_string(derivs.size()) + " exceeds the cap " + std::to_string(jet_cap_));
  return Atom::jet(f, comps, derivs);
}

std::vector<Atom> ModelSpec::component_atoms(FieldId f) const {
  std::vector<Atom> out;
  for (auto& c : components(f)) out.push_back(atom(f, c));
  return out;
}

std::optional<FieldId> ModelSpec::field_of(const Atom& a) const {
  if (a.is_jet()) {
    if (a.field() > xi_field()) return std::nullopt;
    return a.field();
  }
  if (a.is_external()) return find(a.name());
  return std::nullopt;
}

Atom ModelSpec::xi(int i, std::vector<int> derivs) const { return atom(xi_field(), {i}, std::move(derivs)); }

Expr ModelSpec::metric_upper(int i, int j) const {
  if (!metric_) throw ModelError("model has no metric");
  return Expr(atom(*metric_, {i, j}));
}

const Expr& ModelSpec::metric_lowered(int i, int j) const {
  if (!metric_) throw ModelError("model has no metric");
  return lowered_.at(static_cast<std::size_t>(i * dim() + j));
}

const Expr& ModelSpec::det_body() const {
  if (!metric_) throw ModelError("model has no metric");
  return det_body_;
}

const Expr& ModelSpec::sqrt_det() const {
  if (!metric_) throw ModelError("model has no metric");
  return sqrt_det_;
}

namespace {

// Determinant of the rows `rows` restricted to the columns in `mask`,
// expanded along the first row with memoization on the column set.
Expr det_minor(const std::vector<std::vector<Expr>>& a, int row, unsigned mask, std::map<unsigned, Expr>& memo) {
  if (row == static_cast<int>(a.size())) return Expr(1);
  if (auto it = memo.find(mask); it != memo.end()) return it->second;
  std::vector<Expr> parts;
  int sign = 1;
  for (int c = 0; c < static_cast<int>(a.size()); ++c) {
    if ((mask & (1U << c)) == 0U) continue;
    const Expr& x = a[static_cast<std::size_t>(row)][static_cast<std::size_t>(c)];
    if (!x.is_zero()) {
      Expr minor = det_minor(a, row + 1, mask & ~(1U << c), memo);
      parts.push_back(sign > 0 ? x * minor : -(x * minor));
    }
    sign = -sign;
  }
  Expr d = sum(parts);
  memo.emplace(mask, d);
  return d;
}

}  // namespace

Expr determinant(const std::vector<std::vector<Expr>>& a) {
  std::map<unsigned, Expr> memo;
  return det_minor(a, 0, (1U << a.size()) - 1U, memo);
}

void ModelSpec::build_metric_cache() {
  const int n = dim();
  std::vector<std::vector<Expr>> g(static_cast<std::size_t>(n), std::vector<Expr>(static_cast<std::size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = metric_upper(i, j);
  const int s = signature_sign();
  det_body_ = s * determinant(g);
  Expr inv = pow(det_body_, Exponent(-1));
  sqrt_det_ = pow(det_body_, Exponent(-1, 2));
  lowered_.assign(static_cast<std::size_t>(n * n), Expr());
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      // adj_{ij} = (-1)^{i+j} det(minor without row j and column i)
      std::vector<std::vector<Expr>> minor;
      for (int r = 0; r < n; ++r) {
        if (r == j) continue;
        std::vector<Expr> row;
        for (int c = 0; c < n; ++c)
          if (c != i) row.push_back(g[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
        minor.push_back(std::move(row));
      }
      Expr adj = determinant(minor);
      if ((i + j) % 2 != 0) adj = -adj;
      Expr low = s * adj * inv;
      lowered_[static_cast<std::size_t>(i * n + j)] = low;
      lowered_[static_cast<std::size_t>(j * n + i)] = low;
    }
  }
}

Expr lift_coefficient(const ModelSpec& m, const Atom& y, int i, int j) {
  auto f = m.field_of(y);
  if (!f || *f == m.xi_field() || m.is_external(*f)) return Expr();
  const BundleSpec& b = m.bundle(*f);
  std::vector<int> comps = y.is_jet() ? y.comps() : y.ext_comps();
  // A canonical metric pair stands for both orderings; the tensor rule is
  // applied to the ordered tuple (a, b) and the pair coordinate collects it.
  Expr c;
  for (int k = 0; k < b.p; ++k) {
    if (comps[static_cast<std::size_t>(k)] != i) continue;
    std::vector<int> t = comps;
    t[static_cast<std::size_t>(k)] = j;
    c += Expr(m.atom(*f, t));
  }
  for (int k = b.p; k < b.p + b.q; ++k) {
    if (comps[static_cast<std::size_t>(k)] != j) continue;
    std::vector<int> t = comps;
    t[static_cast<std::size_t>(k)] = i;
    c -= Expr(m.atom(*f, t));
  }
  return c;
}

}  // namespace vartool
