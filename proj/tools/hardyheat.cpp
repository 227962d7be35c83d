// Command-line front end. Exit codes: 0 all checks pass, 1 a check failed, 2 usage or domain error,
// 3 the --budget deadline expired (completed results are still written).

#include <CLI11.hpp>

#include <hardyheat/hardyheat.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#ifndef HARDYHEAT_DATA_DIR
#define HARDYHEAT_DATA_DIR "data"
#endif

using namespace hardyheat;

namespace {

constexpr int kExitFail = 1, kExitUsage = 2, kExitBudget = 3;

struct Common {
  int d = 2;
  double alpha = 1.0;
  std::string kappa, delta;
  std::string format = "json";
  std::string out;
  double budget = 0.0;
  bool verbose = false;
};

void add_common(CLI::App* c, Common& o, bool model = true) {
  c->add_option("--d", o.d, "dimension")->check(CLI::PositiveNumber);
  c->add_option("--alpha", o.alpha, "stability index in (0, 2)");
  if (model) {
    auto* k = c->add_option("--kappa", o.kappa, "coupling: a number, 'critical', 'subcritical:F' or 'supercritical:F' (F times kappa*)");
    auto* dl = c->add_option("--delta", o.delta, "growth exponent in [0, (d - alpha)/2] instead of --kappa");
    k->excludes(dl);
  }
  c->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv"}));
  c->add_option("--out", o.out, "output file (default stdout)");
  c->add_option("--budget", o.budget, "wall-clock limit in seconds")->check(CLI::NonNegativeNumber);
  c->add_flag("-v,--verbose", o.verbose, "progress and timings on stderr");
}

double parse_number(const std::string& s, const char* what) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) throw DomainError(std::string("cannot parse ") + what + " '" + s + "'");
  return v;
}

double parse_kappa(int d, double alpha, const std::string& s) {
  check_dim_alpha(d, alpha);
  const double ks = kappa_star(d, alpha);
  if (s == "critical") return ks;
  for (const char* tag : {"subcritical:", "supercritical:"}) {
    const std::string t(tag);
    if (s.rfind(t, 0) == 0) {
      const double f = parse_number(s.substr(t.size()), "kappa factor");
      const bool sub = t == "subcritical:";
      if (!(f >= 0.0) || (sub && !(f < 1.0)) || (!sub && !(f > 1.0)))
        throw DomainError("kappa factor " + s.substr(t.size()) + " does not match '" + t.substr(0, t.size() - 1) + "'");
      return f * ks;
    }
  }
  return parse_number(s, "kappa");
}

ModelParams model(const Common& o) {
  if (o.kappa.empty() == o.delta.empty()) throw CLI::ValidationError("exactly one of --kappa and --delta is required");
  if (!o.delta.empty()) return ModelParams::from_delta(o.d, o.alpha, parse_number(o.delta, "delta"));
  return ModelParams::from_kappa(o.d, o.alpha, parse_kappa(o.d, o.alpha, o.kappa));
}

Vec parse_point(const std::string& s, int d, const char* what) {
  Vec v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) v.push_back(parse_number(tok, what));
  if (static_cast<int>(v.size()) != d)
    throw DomainError(std::string(what) + " needs " + std::to_string(d) + " comma-separated coordinates");
  return v;
}

class Output {
 public:
  explicit Output(const Common& o) : o_(o) {}
  void json(const Json& j) { write(dump_json(j)); }
  void csv(const CsvTable& t) {
    std::ostringstream os;
    t.write(os);
    write(os.str());
  }
  bool is_json() const { return o_.format == "json"; }

 private:
  void write(const std::string& s) {
    if (o_.out.empty()) {
      std::cout << s;
      std::cout.flush();
      return;
    }
    std::ofstream f(o_.out, std::ios::binary);
    if (!f) throw DomainError("cannot write " + o_.out);
    f << s;
  }
  const Common& o_;
};

Json envelope(const std::string& command) { return {{"schema", json_schema}, {"command", command}}; }

std::string short_num(double v) { return format_number(v, 6); }

CheckResult labelled(CheckResult r, const std::string& label) {
  r.name += " " + label;
  return r;
}

// ---------------------------------------------------------------- suites

struct SuiteContext {
  ModelParams mp;
  McConfig mc;
  bool use_mc = true;
  Budget budget;
  std::string corpus;
  bool verbose = false;

  std::unique_ptr<PerturbedKernel> kernel_;
  std::unique_ptr<WeightedBank> bank_;

  const PerturbedKernel& kernel() {
    if (!kernel_) kernel_ = std::make_unique<PerturbedKernel>(mp, QuadratureConfig{}, budget);
    return *kernel_;
  }
  WeightedBank& bank() {
    if (!bank_) bank_ = std::make_unique<WeightedBank>(mp, WeightedConfig{}, budget);
    return *bank_;
  }
  const McConfig* mcp() const { return use_mc ? &mc : nullptr; }
};

struct SuiteOutput {
  std::vector<CheckResult> checks;
  Json reports = Json::object();
};

using Suite = std::function<void(SuiteContext&, SuiteOutput&)>;

void require_kernel_regime(const ModelParams& mp, const char* suite) {
  if (mp.regime == Regime::Supercritical)
    throw DomainError(std::string("suite '") + suite + "' needs kappa <= kappa*; use --suite blowup");
}

void suite_invariance(SuiteContext& c, SuiteOutput& o) {
  require_kernel_regime(c.mp, "invariance");
  const ModelParams& mp = c.mp;
  for (double r : {0.1, 1.0, 10.0}) {
    c.budget.check("invariance suite");
    o.checks.push_back(labelled(check_invariance(mp.delta, 1.0, {r, 0.0}, c.bank(), c.mcp(), 5e-3),
                                "beta=delta |x|=" + short_num(r)));
  }
  std::vector<double> betas;
  if (mp.delta > 0.0) betas = {0.25 * mp.delta, 1.5 * mp.delta};
  else betas = {0.25 * (mp.d - mp.alpha), 0.5 * (mp.d - mp.alpha)};
  for (double b : betas) {
    if (!(b < mp.d - mp.alpha - mp.delta)) continue;
    c.budget.check("invariance suite");
    o.checks.push_back(labelled(check_invariance(b, 1.0, {1.0, 0.0}, c.bank(), c.mcp(), 1e-2), "beta=" + short_num(b) + " |x|=1"));
  }
}

void suite_supermedian(SuiteContext& c, SuiteOutput& o) {
  require_kernel_regime(c.mp, "supermedian");
  for (double r : {0.1, 1.0, 10.0}) {
    c.budget.check("supermedian suite");
    o.checks.push_back(labelled(check_supermedian(1.0, {r, 0.0}, c.bank(), c.mcp()), "|x|=" + short_num(r)));
  }
  c.budget.check("supermedian suite");
  o.checks.push_back(check_H_supermedian(c.bank()));
}

void suite_chapman_kolmogorov(SuiteContext& c, SuiteOutput& o) {
  require_kernel_regime(c.mp, "chapman-kolmogorov");
  const auto& K = c.kernel();
  o.checks.push_back(labelled(check_chapman_kolmogorov(0.5, 0.5, {1.0, 0.0}, {0.0, 1.0}, K), "s=t=0.5"));
  c.budget.check("chapman-kolmogorov suite");
  o.checks.push_back(labelled(check_chapman_kolmogorov(0.25, 0.75, {0.3, 0.0}, {-0.5, 0.4}, K), "s=0.25 t=0.75"));
}

void suite_bounds(SuiteContext& c, SuiteOutput& o) {
  require_kernel_regime(c.mp, "bounds");
  const auto& K = c.kernel();
  const RatioReport rep = bounds_scan(K);
  o.reports["bounds"] = to_json(rep);
  const bool finite = rep.c_lower > 0.0 && rep.c_upper >= rep.c_lower && std::isfinite(rep.c_upper);
  CheckResult fin("bounds_finite", finite ? 0.0 : 1.0, 0.0);
  fin.with("c_lower", rep.c_lower).with("c_upper", rep.c_upper);
  o.checks.push_back(fin);
  o.checks.push_back(CheckResult("bounds_refinement_drift", rep.refinement_drift, 0.1));
  o.checks.push_back(CheckResult("bounds_scaling_collapse", rep.scaling_collapse, 1e-2));
  c.budget.check("bounds suite");
  if (c.mp.kappa > 0.0) {
    Vec y0(c.mp.d, 0.0);
    y0[0] = 1.0;
    const SlopeFit f = delta_slope(K, y0);
    o.reports["slope"] = to_json(f);
    o.checks.push_back(CheckResult("delta_slope", std::abs(f.slope + c.mp.delta), 0.02).with("slope", f.slope).with("delta", c.mp.delta));
  }
}

void suite_scaling(SuiteContext& c, SuiteOutput& o) {
  require_kernel_regime(c.mp, "scaling");
  o.checks.push_back(check_scaling(c.kernel()));
}

void suite_continuity(SuiteContext& c, SuiteOutput& o) {
  require_kernel_regime(c.mp, "continuity");
  if (c.mp.kappa == 0.0) return;
  o.checks.push_back(continuity_scan(c.kernel()));
}

void suite_blowup(SuiteContext& c, SuiteOutput& o) {
  Vec x(c.mp.d, 0.0), y(c.mp.d, 0.0);
  x[0] = 0.5;
  y[1 % c.mp.d] = 0.5;
  const BlowupReport rep = blowup_probe(1.0, x, y, c.mp, 60, 0.05, probe_config(), c.budget);
  o.reports["blowup"] = to_json(rep);
  const char* expected = c.mp.regime == Regime::Supercritical ? "diverging"
                         : c.mp.regime == Regime::Critical    ? "guard"
                                                              : "converged";
  CheckResult r("blowup", rep.outcome == expected ? 0.0 : 1.0, 0.0);
  r.with("min_ratio_last5", rep.min_ratio_last5).with("terms", static_cast<double>(rep.partial_sums.size()));
  if (!rep.partial_sums.empty()) r.with("partial_sum_over_p", rep.partial_sums.back() / rep.free_value);
  o.checks.push_back(r);
}

void suite_forms(SuiteContext& c, SuiteOutput& o) {
  const ModelParams& mp = c.mp;
  if (mp.d != 2) throw DomainError("the forms suite is implemented for d = 2");
  require_kernel_regime(mp, "forms");
  const TestFunction g = TestFunction::gaussian(0.0, 0.0, 1.0);
  const FormValue ef = energy_fourier(g, mp.alpha), ed = energy_direct(g, mp.alpha);
  CheckResult routes("energy_routes", std::abs(ed.value - ef.value) / ef.value, 1e-5);
  routes.with("fourier", ef.value).with("direct", ed.value).with("direct_error", ed.error);
  o.checks.push_back(routes);
  c.budget.check("forms suite");
  const auto corpus = load_corpus(c.corpus);
  std::vector<CheckResult> hardy(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    hardy[i] = labelled(check_hardy(corpus[i], mp.alpha), "corpus#" + std::to_string(i));
    c.budget.check("forms suite");
  }
  o.checks.insert(o.checks.end(), hardy.begin(), hardy.end());
  o.checks.push_back(labelled(check_form_identity(g, mp), "gaussian"));
  c.budget.check("forms suite");
  o.checks.push_back(near_optimizer_gaps(mp.alpha));
}

const std::vector<std::pair<std::string, Suite>>& suites() {
  static const std::vector<std::pair<std::string, Suite>> s = {
      {"invariance", suite_invariance}, {"supermedian", suite_supermedian}, {"chapman-kolmogorov", suite_chapman_kolmogorov},
      {"bounds", suite_bounds},         {"scaling", suite_scaling},         {"continuity", suite_continuity},
      {"blowup", suite_blowup},         {"forms", suite_forms}};
  return s;
}

// ---------------------------------------------------------------- commands

int cmd_kappa(const Common& o, const std::optional<double>& beta, bool star, int curve) {
  check_dim_alpha(o.d, o.alpha);
  Output out(o);
  Json j = envelope("kappa");
  j["d"] = o.d;
  j["alpha"] = o.alpha;
  CsvTable t;
  if (curve > 0) {
    const auto c = kappa_curve(o.d, o.alpha, curve);
    t.header = {"beta", "kappa_beta"};
    Json rows = Json::array();
    for (const auto& [b, k] : c) {
      t.rows.push_back({b, k});
      rows.push_back({b, k});
    }
    j["curve"] = rows;
  } else {
    t.header = {"quantity", "value"};
    if (beta) {
      const double v = kappa_of_beta(o.d, o.alpha, *beta);
      j["kappa_beta"] = v;
      t.rows.push_back({std::string("kappa_beta"), v});
    }
    if (!o.kappa.empty()) {
      const double k = parse_kappa(o.d, o.alpha, o.kappa);
      const ModelParams mp = ModelParams::from_kappa(o.d, o.alpha, k);
      j["delta"] = mp.delta;
      j["regime"] = to_string(mp.regime);
      t.rows.push_back({std::string("delta"), mp.delta});
    }
    if (star || (!beta && o.kappa.empty())) {
      j["kappa_star"] = kappa_star(o.d, o.alpha);
      j["delta_star"] = delta_star(o.d, o.alpha);
      t.rows.push_back({std::string("kappa_star"), kappa_star(o.d, o.alpha)});
      t.rows.push_back({std::string("delta_star"), delta_star(o.d, o.alpha)});
    }
  }
  if (out.is_json()) out.json(j);
  else out.csv(t);
  return 0;
}

int cmd_kernel(const Common& o, double t, const std::string& xs, const std::string& ys, const std::string& method) {
  const Vec x = parse_point(xs, o.d, "--x"), y = ys.empty() ? Vec(o.d, 0.0) : parse_point(ys, o.d, "--y");
  Vec diff(o.d);
  for (int i = 0; i < o.d; ++i) diff[i] = x[i] - y[i];
  KernelValue v;
  if (method == "fourier") {
    if (!(t > 0.0)) throw DomainError("t must be positive");
    check_dim_alpha(o.d, o.alpha);
    const double a = std::pow(t, -1.0 / o.alpha), sc = std::pow(a, o.d);
    v = hankel_p1(o.d, o.alpha, norm(diff) * a);
    v.value *= sc;
    v.abs_error *= sc;
  } else {
    v = free_kernel(t, diff, o.alpha);
  }
  Output out(o);
  if (out.is_json()) {
    Json j = envelope("kernel");
    j["t"] = t;
    j["distance"] = norm(diff);
    j["kernel"] = to_json(v);
    out.json(j);
  } else {
    CsvTable c{{"t", "distance", "value", "abs_error", "method"}, {{t, norm(diff), v.value, v.abs_error, std::string(to_string(v.method))}}};
    out.csv(c);
  }
  return 0;
}

int cmd_series(const Common& o, double t, const std::string& xs, const std::string& ys, int max_terms, bool fixed_point) {
  const ModelParams mp = model(o);
  const Vec x = parse_point(xs, mp.d, "--x"), y = parse_point(ys, mp.d, "--y");
  PerturbedKernel K(mp, QuadratureConfig{}, Budget(o.budget));
  Output out(o);
  Json j = envelope("series");
  j["params"] = to_json(mp);
  j["t"] = t;
  j["x"] = x;
  j["y"] = y;
  const SeriesState s = K.tilde_p(t, x, y, max_terms);
  j["series"] = to_json(s);
  std::optional<KernelValue> fp;
  if (fixed_point) {
    fp = K.tilde_p_fixed_point(t, x, y);
    j["fixed_point"] = to_json(*fp);
  }
  if (out.is_json()) {
    out.json(j);
  } else {
    CsvTable c{{"n", "term", "error", "partial_sum"}, {}};
    double S = 0.0;
    for (std::size_t n = 0; n < s.terms.size(); ++n) {
      S += s.terms[n];
      c.rows.push_back({static_cast<long long>(n), s.terms[n], s.errors[n], S});
    }
    out.csv(c);
  }
  return 0;
}

int cmd_mc(const Common& o, const McConfig& mc, double t, const std::string& xs, const std::string& ys,
           const std::string& functional, const std::optional<double>& beta_opt) {
  const ModelParams mp = model(o);
  if (mp.regime == Regime::Supercritical) throw DomainError("Feynman-Kac weights diverge for kappa > kappa*");
  const Vec x = parse_point(xs, mp.d, "--x");
  const double beta = beta_opt ? *beta_opt : mp.delta;
  McEstimate e;
  if (functional == "weighted") e = feynman_kac(x, t, beta, mp, mc);
  else if (functional == "invariance") e = fk_invariance_defect(x, t, beta, mp, mc);
  else e = mc_first_order(t, x, parse_point(ys, mp.d, "--y"), mp, mc);
  Output out(o);
  if (out.is_json()) {
    Json j = envelope("mc");
    j["params"] = to_json(mp);
    j["functional"] = functional;
    j["t"] = t;
    j["x"] = x;
    if (functional != "first-order") j["beta"] = beta;
    j["estimate"] = to_json(e);
    out.json(j);
  } else {
    CsvTable c{{"mean", "std_error", "ess", "capped_fraction", "n_paths", "n_steps", "seed"},
               {{e.mean, e.std_error, e.ess, e.capped_fraction, static_cast<long long>(e.n_paths),
                 static_cast<long long>(e.n_steps), static_cast<long long>(e.seed)}}};
    out.csv(c);
  }
  return 0;
}

int write_checks(const Common& o, Json j, const std::vector<CheckResult>& checks, bool complete) {
  bool fail = false;
  Json arr = Json::array();
  for (const auto& c : checks) {
    arr.push_back(to_json(c));
    fail = fail || c.status == Status::Fail;
  }
  j["checks"] = arr;
  j["complete"] = complete;
  j["status"] = !complete ? "budget-exceeded" : fail ? "fail" : "pass";
  Output out(o);
  if (out.is_json()) {
    out.json(j);
  } else {
    CsvTable t{{"name", "status", "defect", "tolerance"}, {}};
    for (const auto& c : checks) t.rows.push_back({c.name, std::string(to_string(c.status)), c.defect, c.tolerance});
    out.csv(t);
  }
  if (!complete) return kExitBudget;
  return fail ? kExitFail : 0;
}

int cmd_verify(const Common& o, const std::string& suite, const McConfig& mc, bool no_mc, const std::string& corpus) {
  SuiteContext c{model(o), mc, !no_mc, Budget(o.budget), corpus, o.verbose, nullptr, nullptr};
  Json j = envelope("verify");
  j["suite"] = suite;
  j["params"] = to_json(c.mp);
  if (c.use_mc) j["mc"] = {{"n_paths", mc.n_paths}, {"n_steps", mc.n_steps}, {"seed", mc.seed}};
  SuiteOutput so;
  bool complete = true;
  try {
    for (const auto& [name, fn] : suites()) {
      if (suite != "all" && suite != name) continue;
      if (suite == "all" && c.mp.regime == Regime::Supercritical && name != "blowup") continue;
      if (o.verbose) std::cerr << "suite " << name << "\n";
      fn(c, so);
    }
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    complete = false;
  }
  if (o.verbose)
    for (const auto& r : so.checks) std::cerr << r.name << ": " << to_string(r.status) << " (" << r.runtime << " s)\n";
  j["reports"] = so.reports;
  return write_checks(o, j, so.checks, complete);
}

int cmd_bounds(const Common& o) {
  const ModelParams mp = model(o);
  if (mp.regime == Regime::Supercritical) throw DomainError("no kernel for kappa > kappa*");
  PerturbedKernel K(mp, QuadratureConfig{}, Budget(o.budget));
  const BoundsGrid g;
  const RatioReport rep = bounds_scan(K, g);
  Output out(o);
  if (out.is_json()) {
    Json j = envelope("bounds");
    j["params"] = to_json(mp);
    j["report"] = to_json(rep);
    j["ratios"] = rep.ratios;
    if (mp.kappa > 0.0) {
      Vec y0(mp.d, 0.0);
      y0[0] = 1.0;
      j["slope"] = to_json(delta_slope(K, y0));
    }
    out.json(j);
  } else {
    CsvTable t{{"t", "r_x", "r_y", "angle", "ratio"}, {}};
    std::size_t idx = 0;
    for (double tt : g.times)
      for (int i = 0; i < g.n_r; ++i)
        for (int jj = 0; jj < g.n_r; ++jj)
          for (int k = 0; k < g.n_angle; ++k) {
            const double ri = g.r_lo * std::pow(g.r_hi / g.r_lo, static_cast<double>(i) / (g.n_r - 1));
            const double rj = g.r_lo * std::pow(g.r_hi / g.r_lo, static_cast<double>(jj) / (g.n_r - 1));
            t.rows.push_back({tt, ri, rj, g.n_angle == 1 ? 0.0 : pi * k / (g.n_angle - 1), rep.ratios[idx++]});
          }
    out.csv(t);
  }
  return 0;
}

int cmd_form(const Common& o, const std::string& corpus, const std::string& fn) {
  const ModelParams mp = model(o);
  if (mp.d != 2) throw DomainError("the form layer is implemented for d = 2");
  if (mp.regime == Regime::Supercritical) throw DomainError("no ground state for kappa > kappa*");
  std::vector<TestFunction> fs;
  if (!fn.empty()) {
    // kind:cx,cy,scale[,scale2]
    const auto colon = fn.find(':');
    if (colon == std::string::npos) throw DomainError("--function expects kind:cx,cy,scale");
    const std::string kind = fn.substr(0, colon);
    std::vector<double> v;
    std::stringstream ss(fn.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(parse_number(tok, "--function"));
    if (kind == "gaussian" && v.size() == 3) fs.push_back(TestFunction::gaussian(v[0], v[1], v[2]));
    else if (kind == "bump" && v.size() == 3) fs.push_back(TestFunction::bump(v[0], v[1], v[2]));
    else if (kind == "product" && v.size() == 4) fs.push_back(TestFunction::product(v[0], v[1], v[2], v[3]));
    else throw DomainError("unknown --function '" + fn + "'");
    for (double s : std::vector<double>(v.begin() + 2, v.end()))
      if (!(s > 0.0)) throw DomainError("scales must be positive");
  } else {
    fs = load_corpus(corpus);
  }
  const Budget budget(o.budget);
  Json arr = Json::array();
  CsvTable t{{"index", "kind", "energy", "energy_error", "route", "energy_direct", "potential", "hardy_gap", "bar_energy", "identity_defect"}, {}};
  bool fail = false, complete = true;
  try {
    for (std::size_t i = 0; i < fs.size(); ++i) {
      budget.check("form command");
      const TestFunction& f = fs[i];
      const FormValue E = energy(f, mp.alpha), Ed = energy_direct(f, mp.alpha);
      const double P = weighted_l2(f, mp.alpha);
      const CheckResult hardy = check_hardy(f, mp.alpha);
      const FormValue Eb = bar_energy(f, mp);
      const double defect = std::abs(Eb.value - (E.value - mp.kappa * P)) / std::max(E.value, 1.0);
      fail = fail || hardy.status == Status::Fail || defect > 1e-3;
      arr.push_back({{"function", to_json(f)}, {"energy", to_json(E)}, {"energy_direct", to_json(Ed)}, {"potential", P},
                     {"hardy", to_json(hardy)}, {"bar_energy", to_json(Eb)}, {"identity_defect", defect}});
      t.rows.push_back({static_cast<long long>(i), std::string(to_string(f.kind)), E.value, E.error, std::string(to_string(E.route)),
                        Ed.value, P, hardy.value("gap"), Eb.value, defect});
    }
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    complete = false;
  }
  Output out(o);
  if (out.is_json()) {
    Json j = envelope("form");
    j["params"] = to_json(mp);
    j["functions"] = arr;
    j["complete"] = complete;
    out.json(j);
  } else {
    out.csv(t);
  }
  if (!complete) return kExitBudget;
  return fail ? kExitFail : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Heat kernels of the fractional Laplacian with Hardy potential"};
  app.require_subcommand(1);
  Common o;
  McConfig mc;
  double t = 1.0;
  std::string xs, ys, method = "closed", suite = "all", functional = "weighted", fn;
  std::string corpus = std::string(HARDYHEAT_DATA_DIR) + "/corpus_v1.json";
  std::optional<double> beta;
  bool star = false, fixed_point = false, no_mc = false;
  int curve = 0, terms = -1;

  auto add_mc = [&](CLI::App* c) {
    c->add_option("--paths", mc.n_paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    c->add_option("--steps", mc.n_steps, "time steps per path")->check(CLI::PositiveNumber);
    c->add_option("--seed", mc.seed, "base seed");
  };

  auto* kap = app.add_subcommand("kappa", "coupling constants and the kappa(beta) curve");
  add_common(kap, o);
  kap->add_option("--beta", beta, "exponent beta in [0, d - alpha]");
  kap->add_flag("--kappa-star", star, "print kappa* and delta*");
  kap->add_option("--curve", curve, "emit the curve on this many points")->check(CLI::Range(2, 1000000));

  auto* ker = app.add_subcommand("kernel", "free stable kernel p(t, x, y)");
  add_common(ker, o, false);
  ker->add_option("--t", t, "time")->check(CLI::PositiveNumber);
  ker->add_option("--x", xs, "point x, comma separated")->required();
  ker->add_option("--y", ys, "point y (default origin)");
  ker->add_option("--method", method, "closed form or Fourier inversion")->check(CLI::IsMember({"closed", "fourier"}));

  auto* ser = app.add_subcommand("series", "perturbed kernel by its perturbation series");
  add_common(ser, o);
  ser->add_option("--t", t, "time")->check(CLI::PositiveNumber);
  ser->add_option("--x", xs, "point x")->required();
  ser->add_option("--y", ys, "point y")->required();
  ser->add_option("--terms", terms, "maximum number of terms (default from the series configuration)")->check(CLI::NonNegativeNumber);
  ser->add_flag("--fixed-point", fixed_point, "also report the fixed-point value");

  auto* mcc = app.add_subcommand("mc", "Feynman-Kac Monte Carlo estimates");
  add_common(mcc, o);
  add_mc(mcc);
  mcc->add_option("--t", t, "time")->check(CLI::PositiveNumber);
  mcc->add_option("--x", xs, "starting point")->required();
  mcc->add_option("--y", ys, "end point (first-order functional)");
  mcc->add_option("--beta", beta, "weight exponent (default delta)");
  mcc->add_option("--functional", functional, "estimated quantity")->check(CLI::IsMember({"weighted", "invariance", "first-order"}));

  auto* ver = app.add_subcommand("verify", "run verification suites");
  add_common(ver, o);
  add_mc(ver);
  std::vector<std::string> names{"all"};
  for (const auto& s : suites()) names.push_back(s.first);
  ver->add_option("--suite", suite, "suite name")->check(CLI::IsMember(names));
  ver->add_flag("--no-mc", no_mc, "skip the Monte Carlo cross-checks");
  ver->add_option("--corpus", corpus, "test-function corpus");

  auto* bnd = app.add_subcommand("bounds", "ratio scan against the two-sided estimate");
  add_common(bnd, o);

  auto* frm = app.add_subcommand("form", "quadratic forms on the corpus or one test function");
  add_common(frm, o);
  frm->add_option("--corpus", corpus, "test-function corpus");
  frm->add_option("--function", fn, "kind:cx,cy,scale[,scale2] instead of the corpus");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }
  try {
    if (*kap) return cmd_kappa(o, beta, star, curve);
    if (*ker) return cmd_kernel(o, t, xs, ys, method);
    if (*ser) return cmd_series(o, t, xs, ys, terms, fixed_point);
    if (*mcc) return cmd_mc(o, mc, t, xs, ys, functional, beta);
    if (*ver) return cmd_verify(o, suite, mc, no_mc, corpus);
    if (*bnd) return cmd_bounds(o);
    if (*frm) return cmd_form(o, corpus, fn);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitBudget;
  } catch (const QuadratureError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFail;
  }
  return kExitUsage;
}
