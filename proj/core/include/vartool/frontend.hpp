#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vartool/completion.hpp"

namespace vartool {

/// Component functions of a section, keyed by order-zero component atoms.
/// Components of a listed field that are not given are 0.
struct Section {
  std::string name;
  std::set<FieldId> fields;
  std::map<Atom, Expr> values;
};

struct NamedSource {
  std::string name;
  SourceSpec spec;
};

/// Parsed model file: one model plus its named definitions, in file order.
struct ModelFile {
  ModelPtr model;
  std::vector<std::pair<std::string, Expr>> lagrangians;
  std::vector<NamedSource> sources;
  std::vector<Expr> rules;  // each read as expr == 0
  VariationTable variations;
  std::vector<Section> sections;

  const Expr& lagrangian(const std::string& name = {}) const;
  const NamedSource& source(const std::string& name = {}) const;
  const Section& section(const std::string& name = {}) const;
};

/// Parses the model language.  Every failure is a ParseError with the
/// line and column of the offending token.
ModelFile parse_model(std::string_view text);

/// Parses one expression against an existing model (the text printer's
/// output round-trips through this).
Expr parse_expression(const ModelSpec& m, std::string_view text);

/// Replaces every jet atom by the matching partial derivative of the
/// section's component function.  Throws ModelError when the section does
/// not define a field that occurs in `e`.
Expr evaluate_on_section(const ModelSpec& m, const Expr& e, const Section& s);

/// Atom names in the model language and in LaTeX.
AtomNamer model_namer(const ModelSpec& m);

enum class Format { Text, Latex, Json };

struct Verdict {
  std::string name;
  bool zero = false;
  std::optional<bool> symbolic_zero;
  std::optional<double> max_abs_residual;
  bool asserted = true;  // informational verdicts do not affect the exit code
  std::string detail;
};

struct ResultEntry {
  std::string name;
  std::string latex_name;
  Expr value;
};

struct Report {
  std::string command;
  std::string model;
  std::uint64_t seed = 0;
  std::vector<ResultEntry> results;
  std::vector<Verdict> verdicts;
  std::vector<std::pair<std::string, double>> timings;

  bool ok() const;
};

/// JSON reports carry `schema: 1`; timings are included only on request.
std::string emit(const Report& r, Format f, const AtomNamer& namer, bool with_timings = false);

/// Runs the command-line tool: exit 0 when every asserted verdict holds, 1
/// for a failed verdict, 2 for usage and input errors.
int run_command(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace vartool
