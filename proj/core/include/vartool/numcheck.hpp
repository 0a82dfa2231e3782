#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "vartool/model.hpp"

namespace vartool {

/// Values of atoms at one sample point.  Atoms not stored explicitly get a
/// deterministic value derived from the seed and the atom's hash, so an
/// assignment covers every jet order.
class PointAssignment {
 public:
  PointAssignment() = default;
  PointAssignment(std::uint64_t seed, const ModelSpec* model) : seed_(seed), model_(model) {}

  std::uint64_t seed() const { return seed_; }
  Rational value(const Atom& a) const;
  void set(const Atom& a, Rational v) { values_[a] = std::move(v); }
  const std::map<Atom, Rational>& explicit_values() const { return values_; }

 private:
  std::uint64_t seed_ = 0;
  const ModelSpec* model_ = nullptr;
  std::map<Atom, Rational> values_;
};

/// Samples metric fundamentals near the signature matrix (resampling until
/// |det| >= 0.1 with the right signs) and every jet up to `max_jet_order`.
/// Throws DomainError after 100 failed metric draws.
PointAssignment random_point(const ModelSpec& m, int max_jet_order, std::uint64_t seed);

struct EvalResult {
  double value = 0.0;
  double scale = 0.0;  // largest |term|
};

/// Exact rational evaluation of each term; powers of sums are taken in
/// floating point.  Throws DomainError for a negative base under a
/// fractional exponent or 0 under a negative one.
EvalResult eval_detail(const Expr& e, const PointAssignment& p);
double eval(const Expr& e, const PointAssignment& p);

struct ZeroReport {
  bool zero = true;
  bool inconclusive = false;
  int trials = 0;
  int skipped = 0;
  double max_abs = 0.0;
  double max_rel = 0.0;
  std::uint64_t witness_seed = 0;
  double witness_value = 0.0;
  std::vector<std::string> log;
};

/// Deterministic sub-seed of trial `k`.
std::uint64_t trial_seed(std::uint64_t seed, int k);

/// Zero iff |value| < tol (1 + max |term|) at every sampled point.
ZeroReport is_zero_numeric(const Expr& e, const ModelSpec& m, int trials, double tol, std::uint64_t seed);
/// Joint test of several expressions at the same points.
ZeroReport is_zero_numeric(const std::vector<Expr>& es, const ModelSpec& m, int trials, double tol, std::uint64_t seed);

}  // namespace vartool
