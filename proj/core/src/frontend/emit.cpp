#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "vartool/frontend.hpp"

namespace vartool {

bool Report::ok() const {
  for (const Verdict& v : verdicts)
    if (v.asserted && !v.zero) return false;
  return true;
}

namespace {

// Shortest round-trip spelling, so that reports are byte-stable.
std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string latex_text(const std::string& name) {
  std::string s = "\\text{";
  for (char c : name) {
    if (c == '^') s += "\\^{}";
    else if (c == '_' || c == '#' || c == '&' || c == '%' || c == '$') s += std::string("\\") + c;
    else s += c;
  }
  return s + "}";
}

std::string verdict_line(const Verdict& v) {
  std::string s = v.zero ? "PASS" : "FAIL";
  if (!v.asserted) s = v.zero ? "yes" : "no";
  s += "  " + v.name;
  if (v.symbolic_zero) s += std::string("  symbolic_zero=") + (*v.symbolic_zero ? "true" : "false");
  if (v.max_abs_residual) s += "  max_abs_residual=" + num(*v.max_abs_residual);
  if (!v.detail.empty()) s += "  (" + v.detail + ")";
  return s;
}

std::string emit_json(const Report& r, const AtomNamer& namer, bool with_timings) {
  nlohmann::ordered_json j;
  j["schema"] = 1;
  j["command"] = r.command;
  j["model"] = r.model;
  j["seed"] = r.seed;
  auto results = nlohmann::ordered_json::array();
  for (const ResultEntry& e : r.results) {
    nlohmann::ordered_json x;
    x["name"] = e.name;
    x["expr"] = to_text(e.value, namer);
    results.push_back(std::move(x));
  }
  j["results"] = std::move(results);
  auto verdicts = nlohmann::ordered_json::array();
  for (const Verdict& v : r.verdicts) {
    nlohmann::ordered_json x;
    x["name"] = v.name;
    x["command"] = r.command;
    x["zero"] = v.zero;
    x["symbolic_zero"] = v.symbolic_zero ? nlohmann::ordered_json(*v.symbolic_zero) : nlohmann::ordered_json(nullptr);
    x["max_abs_residual"] = v.max_abs_residual ? nlohmann::ordered_json(*v.max_abs_residual) : nlohmann::ordered_json(nullptr);
    x["seed"] = r.seed;
    x["asserted"] = v.asserted;
    x["detail"] = v.detail;
    verdicts.push_back(std::move(x));
  }
  j["verdicts"] = std::move(verdicts);
  j["ok"] = r.ok();
  if (with_timings) {
    nlohmann::ordered_json t = nlohmann::ordered_json::object();
    for (const auto& [k, v] : r.timings) t[k] = v;
    j["timings"] = std::move(t);
  }
  return j.dump(2) + "\n";
}

}  // namespace

std::string emit(const Report& r, Format f, const AtomNamer& namer, bool with_timings) {
  std::ostringstream os;
  switch (f) {
    case Format::Json:
      return emit_json(r, namer, with_timings);
    case Format::Text:
      os << "# " << r.command << " " << r.model << " seed=" << r.seed << "\n";
      for (const ResultEntry& e : r.results) os << e.name << " = " << to_text(e.value, namer) << "\n";
      for (const Verdict& v : r.verdicts) os << verdict_line(v) << "\n";
      if (with_timings)
        for (const auto& [k, v] : r.timings) os << "time " << k << " " << num(v) << " s\n";
      os << (r.ok() ? "ok" : "FAILED") << "\n";
      break;
    case Format::Latex:
      os << "% " << r.command << " " << r.model << " seed=" << r.seed << "\n";
      if (!r.results.empty()) {
        os << "\\begin{align*}\n";
        for (std::size_t k = 0; k < r.results.size(); ++k) {
          const ResultEntry& e = r.results[k];
          os << "  " << (e.latex_name.empty() ? latex_text(e.name) : e.latex_name) << " &= " << to_latex(e.value, namer);
          os << (k + 1 < r.results.size() ? " \\\\\n" : "\n");
        }
        os << "\\end{align*}\n";
      }
      for (const Verdict& v : r.verdicts) os << "% " << verdict_line(v) << "\n";
      if (with_timings)
        for (const auto& [k, v] : r.timings) os << "% time " << k << " " << num(v) << " s\n";
      os << "% " << (r.ok() ? "ok" : "FAILED") << "\n";
      break;
  }
  return os.str();
}

}  // namespace vartool
