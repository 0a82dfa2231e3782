#include "vartool/atom.hpp"

#include <algorithm>

#include "expr_internal.hpp"
#include "vartool/error.hpp"

namespace vartool {

namespace {

// Jet key layout, most significant first:
// field:16 | ncomp:2 | comps:3x3 | nder:4 | derivs:8x3 | pad:9
constexpr int kFieldShift = 48;
constexpr int kNcompShift = 46;
constexpr int kCompShift = 37;
constexpr int kNderShift = 33;
constexpr int kDerivShift = 9;

std::uint64_t pack_jet(int field, std::span<const int> comps, std::span<const int> derivs) {
  if (field < 0 || field >= (1 << 16)) throw ExprError("jet field id out of range");
  if (comps.size() > kMaxComps) throw ExprError("jet atom with more than 3 component indices");
  if (derivs.size() > kMaxJetOrder) throw JetOrderError("jet order above " + std::to_string(kMaxJetOrder));
  std::uint64_t key = static_cast<std::uint64_t>(field) << kFieldShift;
  key |= static_cast<std::uint64_t>(comps.size()) << kNcompShift;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    if (comps[k] < 0 || comps[k] >= kMaxIndex) throw ExprError("component index out of range");
    key |= static_cast<std::uint64_t>(comps[k]) << (kCompShift + 3 * (2 - k));
  }
  std::vector<int> d(derivs.begin(), derivs.end());
  std::sort(d.begin(), d.end());
  key |= static_cast<std::uint64_t>(d.size()) << kNderShift;
  for (std::size_t k = 0; k < d.size(); ++k) {
    if (d[k] < 0 || d[k] >= kMaxIndex) throw ExprError("derivative index out of range");
    key |= static_cast<std::uint64_t>(d[k]) << (kDerivShift + 3 * (7 - k));
  }
  return key;
}

std::size_t fnv(const std::string& s, std::size_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

Atom::Atom() : Atom(base(0)) {}

Atom Atom::base(int i) {
  if (i < 0 || i >= kMaxIndex) throw ExprError("base coordinate index out of range");
  Atom a{Blank{}};
  a.kind_ = AtomKind::Base;
  a.key_ = static_cast<std::uint64_t>(i);
  a.hash_ = mix_hash(0x1234, a.key_);
  return a;
}

Atom Atom::jet(int field, std::span<const int> comps, std::span<const int> derivs) {
  Atom a{Blank{}};
  a.kind_ = AtomKind::Jet;
  a.key_ = pack_jet(field, comps, derivs);
  a.hash_ = mix_hash(0x5678, a.key_);
  return a;
}

Atom Atom::jet(int field, std::initializer_list<int> comps, std::initializer_list<int> derivs) {
  return jet(field, std::span<const int>(comps.begin(), comps.size()),
             std::span<const int>(derivs.begin(), derivs.size()));
}

Atom Atom::external(std::string name, std::vector<int> comps) {
  Atom a{Blank{}};
  a.kind_ = AtomKind::External;
  std::size_t h = fnv(name);
  for (int c : comps) h = mix_hash(h, static_cast<std::size_t>(c) + 17);
  a.hash_ = mix_hash(0x9abc, h);
  auto p = std::make_shared<AtomPayload>();
  p->name = std::move(name);
  p->comps = std::move(comps);
  a.payload_ = std::move(p);
  return a;
}

Atom make_power_atom(const Expr& body) {
  Atom a{Atom::Blank{}};
  a.kind_ = AtomKind::Power;
  auto p = std::make_shared<AtomPayload>();
  p->body = body;
  const Rational& lc = body.terms().front().coef;
  p->sign = lc.sign() < 0 ? -1 : 1;
  p->normal = p->sign < 0 ? -body : body;
  p->normal_hash = p->normal.hash();
  if (p->sign < 0) p->normal_atom.push_back(make_power_atom(p->normal));
  a.hash_ = mix_hash(0xdef0, body.hash());
  a.payload_ = std::move(p);
  return a;
}

const AtomPayload& payload_of(const Atom& a) { return *a.payload_; }

int Atom::index() const { return static_cast<int>(key_); }

int Atom::field() const { return static_cast<int>(key_ >> kFieldShift); }

int Atom::rank() const { return static_cast<int>((key_ >> kNcompShift) & 3); }

int Atom::comp(int k) const { return static_cast<int>((key_ >> (kCompShift + 3 * (2 - k))) & 7); }

std::vector<int> Atom::comps() const {
  std::vector<int> c(static_cast<std::size_t>(rank()));
  for (int k = 0; k < rank(); ++k) c[static_cast<std::size_t>(k)] = comp(k);
  return c;
}

int Atom::order() const { return static_cast<int>((key_ >> kNderShift) & 15); }

int Atom::deriv(int k) const { return static_cast<int>((key_ >> (kDerivShift + 3 * (7 - k))) & 7); }

std::vector<int> Atom::derivs() const {
  std::vector<int> d(static_cast<std::size_t>(order()));
  for (int k = 0; k < order(); ++k) d[static_cast<std::size_t>(k)] = deriv(k);
  return d;
}

Atom Atom::promoted(int i) const {
  std::vector<int> d = derivs();
  d.push_back(i);
  std::vector<int> c = comps();
  return jet(field(), c, d);
}

Atom Atom::underived() const {
  std::vector<int> c = comps();
  return jet(field(), c, {});
}

const std::string& Atom::name() const { return payload_->name; }
const std::vector<int>& Atom::ext_comps() const { return payload_->comps; }
const Expr& Atom::body() const { return payload_->body; }
const Expr& Atom::normal_body() const { return payload_->normal; }
int Atom::body_sign() const { return payload_->sign; }
std::size_t Atom::normal_hash() const { return payload_->normal_hash; }

bool operator==(const Atom& a, const Atom& b) {
  if (a.kind_ != b.kind_ || a.hash_ != b.hash_ || a.key_ != b.key_) return false;
  switch (a.kind_) {
    case AtomKind::Base:
    case AtomKind::Jet:
      return true;
    case AtomKind::External:
      return a.payload_ == b.payload_ ||
             (a.payload_->name == b.payload_->name && a.payload_->comps == b.payload_->comps);
    case AtomKind::Power:
      return a.payload_ == b.payload_ || a.payload_->body == b.payload_->body;
  }
  return false;
}

std::strong_ordering operator<=>(const Atom& a, const Atom& b) {
  if (a.kind_ != b.kind_) return a.kind_ <=> b.kind_;
  switch (a.kind_) {
    case AtomKind::Base:
    case AtomKind::Jet:
      return a.key_ <=> b.key_;
    case AtomKind::External: {
      if (a.payload_ == b.payload_) return std::strong_ordering::equal;
      if (auto c = a.payload_->name <=> b.payload_->name; c != 0) return c;
      return a.payload_->comps <=> b.payload_->comps;
    }
    case AtomKind::Power: {
      if (a.payload_ == b.payload_) return std::strong_ordering::equal;
      if (a.hash_ != b.hash_) return a.hash_ <=> b.hash_;
      return compare(a.payload_->body, b.payload_->body) <=> 0;
    }
  }
  return std::strong_ordering::equal;
}

bool same_body_up_to_sign(const Atom& a, const Atom& b) {
  if (!a.is_power() || !b.is_power()) return false;
  if (a.normal_hash() != b.normal_hash()) return false;
  return a.normal_body() == b.normal_body();
}

}  // namespace vartool
