#pragma once

#include <compare>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace vartool {

class Expr;
struct AtomPayload;

/// Kinds are listed in the declared total order of atoms.
enum class AtomKind : std::uint8_t { Base = 0, Jet = 1, External = 2, Power = 3 };

/// Largest index value (component or derivative) a jet atom can store.
inline constexpr int kMaxIndex = 8;
/// Largest derivative order a jet atom can store.
inline constexpr int kMaxJetOrder = 8;
/// Largest number of component indices on a jet atom.
inline constexpr int kMaxComps = 3;

/// An indeterminate of the expression kernel.
///
/// Base and jet atoms are packed into a 64-bit key; externals and powers of
/// sums carry a shared payload.  Powers are only created by the kernel
/// (`pow`), never directly.
class Atom {
 public:
  /// The base coordinate x0.
  Atom();
  static Atom base(int i);
  /// Jet coordinate of `field`; `derivs` need not be sorted.
  static Atom jet(int field, std::span<const int> comps, std::span<const int> derivs = {});
  static Atom jet(int field, std::initializer_list<int> comps, std::initializer_list<int> derivs = {});
  static Atom external(std::string name, std::vector<int> comps = {});

  AtomKind kind() const { return kind_; }
  bool is_base() const { return kind_ == AtomKind::Base; }
  bool is_jet() const { return kind_ == AtomKind::Jet; }
  bool is_external() const { return kind_ == AtomKind::External; }
  bool is_power() const { return kind_ == AtomKind::Power; }

  int index() const;  // base coordinate index

  int field() const;
  int rank() const;
  int comp(int k) const;
  std::vector<int> comps() const;
  int order() const;
  int deriv(int k) const;
  std::vector<int> derivs() const;
  /// Same jet with one more derivative index.
  Atom promoted(int i) const;
  /// Order-zero jet with the same field and components.
  Atom underived() const;

  const std::string& name() const;
  const std::vector<int>& ext_comps() const;

  /// Body of a power-of-sum atom.
  const Expr& body() const;
  /// Body with positive leading coefficient; `body() == body_sign() * normal_body()`.
  const Expr& normal_body() const;
  int body_sign() const;
  std::size_t normal_hash() const;

  std::uint64_t key() const { return key_; }
  std::size_t hash() const { return hash_; }

  friend bool operator==(const Atom& a, const Atom& b);
  friend std::strong_ordering operator<=>(const Atom& a, const Atom& b);

 private:
  friend Atom make_power_atom(const Expr& body);
  friend const AtomPayload& payload_of(const Atom& a);
  struct Blank {};
  explicit Atom(Blank) {}

  AtomKind kind_ = AtomKind::Base;
  std::uint64_t key_ = 0;
  std::size_t hash_ = 0;
  std::shared_ptr<const AtomPayload> payload_;
};

/// True when `a` and `b` are powers of bodies equal up to sign.
bool same_body_up_to_sign(const Atom& a, const Atom& b);

}  // namespace vartool

template <>
struct std::hash<vartool::Atom> {
  std::size_t operator()(const vartool::Atom& a) const noexcept { return a.hash(); }
};
