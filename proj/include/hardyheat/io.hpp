#pragma once

#include <fmt/format.h>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include "core.hpp"
#include "forms.hpp"
#include "mc.hpp"
#include "params.hpp"
#include "verifier.hpp"

// Serialisation: JSON at 17 significant digits, CSV at 10. Object keys are sorted, so output is
// a function of the values alone.

namespace hardyheat {

using Json = nlohmann::json;

inline constexpr int json_schema = 1;

/// Non-finite values become the strings "inf", "-inf" and "nan" in JSON and bare words in CSV.
inline std::string format_number(double v, int digits) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.{}g}", v, digits);
}

namespace detail {
inline void dump(const Json& j, std::string& out, int indent, int level) {
  const std::string pad(static_cast<std::size_t>(indent * (level + 1)), ' ');
  const std::string end_pad(static_cast<std::size_t>(indent * level), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) { out += "{}"; return; }
      out += "{";
      out += nl;
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) { out += ","; out += nl; }
        first = false;
        out += pad + Json(it.key()).dump() + (indent > 0 ? ": " : ":");
        dump(it.value(), out, indent, level + 1);
      }
      out += nl + end_pad + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) { out += "[]"; return; }
      // arrays of numbers stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && e.is_primitive();
      out += "[";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) { out += nl; out += pad; }
        first = false;
        dump(e, out, indent, level + 1);
      }
      if (!flat) out += nl + end_pad;
      out += "]";
      return;
    }
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      out += std::isfinite(v) ? format_number(v, 17) : "\"" + format_number(v, 17) + "\"";
      return;
    }
    default:
      out += j.dump();
  }
}
}  // namespace detail

inline std::string dump_json(const Json& j, int indent = 2) {
  std::string s;
  detail::dump(j, s, indent, 0);
  s += "\n";
  return s;
}

inline Json pairs_to_json(const std::vector<std::pair<std::string, double>>& v) {
  Json o = Json::object();
  for (const auto& [k, x] : v) o[k] = x;
  return o;
}

inline Json to_json(const ModelParams& mp) {
  return {{"d", mp.d}, {"alpha", mp.alpha}, {"kappa", mp.kappa}, {"delta", mp.delta}, {"kappa_star", mp.kstar()},
          {"regime", to_string(mp.regime)}};
}

inline Json to_json(const KernelValue& k) {
  return {{"value", k.value}, {"abs_error", k.abs_error}, {"method", to_string(k.method)}};
}

/// Runtime is left out so that reruns are byte-identical.
inline Json to_json(const CheckResult& r) {
  return {{"name", r.name}, {"status", to_string(r.status)}, {"defect", r.defect}, {"tolerance", r.tolerance},
          {"values", pairs_to_json(r.values)}};
}

inline Json to_json(const McEstimate& e) {
  return {{"mean", e.mean},   {"std_error", e.std_error}, {"ess", e.ess},  {"capped_fraction", e.capped_fraction},
          {"n_paths", e.n_paths}, {"n_steps", e.n_steps}, {"seed", e.seed}};
}

inline Json to_json(const SeriesState& s) {
  return {{"terms", s.terms},       {"errors", s.errors},   {"sum", s.sum}, {"tail_estimate", s.tail_estimate},
          {"weighted_tail_bound", s.weighted_tail_bound}, {"quotient", s.quotient}, {"converged", s.converged}};
}

inline Json to_json(const RatioReport& r) {
  return {{"grid", {{"n_r", r.grid.n_r}, {"n_angle", r.grid.n_angle}, {"r_lo", r.grid.r_lo}, {"r_hi", r.grid.r_hi},
                    {"times", r.grid.times}}},
          {"c_lower", r.c_lower},
          {"c_upper", r.c_upper},
          {"refinement_drift", r.refinement_drift},
          {"scaling_collapse", r.scaling_collapse}};
}

inline Json to_json(const SlopeFit& f) {
  return {{"radii", f.radii}, {"values", f.values}, {"slope", f.slope}, {"raw_slope", f.raw_slope}};
}

inline Json to_json(const BlowupReport& b) {
  return {{"outcome", b.outcome},
          {"expansion", b.expansion},
          {"partial_sums", b.partial_sums},
          {"ratios", b.ratios},
          {"free_series_ratios", b.free_series_ratios},
          {"free_value", b.free_value},
          {"min_ratio_last5", b.min_ratio_last5},
          {"sum_exceeds", b.sum_exceeds},
          {"ratio_exceeds", b.ratio_exceeds}};
}

inline Json to_json(const FormValue& v) {
  return {{"value", v.value}, {"error", v.error}, {"route", to_string(v.route)}};
}

inline Json to_json(const TestFunction& f) {
  Json j = {{"kind", to_string(f.kind)}, {"center", {f.cx, f.cy}}};
  if (f.kind == TestKind::Product) j["scale"] = {f.s1, f.s2};
  else if (f.kind == TestKind::NearOptimizer) j["n"] = f.n;
  else j["scale"] = f.s1;
  return j;
}

/// Plain CSV table; cells are numbers, integers or strings.
struct CsvTable {
  using Cell = std::variant<double, long long, std::string>;
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;

  void write(std::ostream& os) const {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << "\n";
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) {
        if (i) os << ",";
        if (const double* d = std::get_if<double>(&r[i])) os << format_number(*d, 10);
        else if (const long long* n = std::get_if<long long>(&r[i])) os << *n;
        else os << std::get<std::string>(r[i]);
      }
      os << "\n";
    }
  }
};

/// The versioned test-function corpus: {"version": 1, "functions": [{"kind", "center", "scale"}, ...]}.
inline std::vector<TestFunction> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DomainError("cannot open corpus file " + path);
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw DomainError(std::string("corpus is not valid JSON: ") + e.what());
  }
  if (j.value("version", 0) != 1) throw DomainError("unsupported corpus version");
  std::vector<TestFunction> out;
  for (const auto& e : j.at("functions")) {
    const std::string kind = e.at("kind");
    const auto c = e.at("center").get<std::vector<double>>();
    if (c.size() != 2) throw DomainError("corpus centres must be planar");
    if (kind == "gaussian") out.push_back(TestFunction::gaussian(c[0], c[1], e.at("scale").get<double>()));
    else if (kind == "bump") out.push_back(TestFunction::bump(c[0], c[1], e.at("scale").get<double>()));
    else if (kind == "product") {
      const auto s = e.at("scale").get<std::vector<double>>();
      if (s.size() != 2) throw DomainError("product scales must have two entries");
      out.push_back(TestFunction::product(c[0], c[1], s[0], s[1]));
    } else {
      throw DomainError("unknown test-function kind " + kind);
    }
  }
  return out;
}

}  // namespace hardyheat
