#include "nde/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <future>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "nde/classifier.hpp"
#include "nde/errors.hpp"
#include "nde/projections.hpp"
#include "nde/rootfinder.hpp"
#include "nde/simulator.hpp"
#include "nde/version.hpp"

namespace nde::cli {

using json = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

json config_json(const RunConfig& c) {
  return json{{"a", c.a},
              {"b", c.b},
              {"c", c.c},
              {"n_max", c.n_max},
              {"m_max", c.m_max},
              {"grid", c.grid},
              {"tol_root", c.tol.root_residual},
              {"tol_quad", c.tol.quad},
              {"format", c.format},
              {"out", c.out},
              {"seed", c.seed},
              {"gap", c.gap},
              {"horizon", c.horizon},
              {"dt", c.dt},
              {"phi_file", c.phi_file}};
}

std::string scalar_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return num(v.get<double>());
  return v.dump();
}

json envelope(const RunConfig& cfg, const char* command) {
  return json{{"tool", "nde"}, {"version", kVersion}, {"command", command}, {"config", config_json(cfg)}};
}

// Comment header for CSV output: the same envelope, one key per line.
void csv_header(std::ostream& os, const json& env) {
  os << "# tool=nde\n# version=" << kVersion << "\n# command=" << env["command"].get<std::string>() << "\n";
  for (const auto& [k, v] : env["config"].items()) os << "# config." << k << "=" << scalar_text(v) << "\n";
}

// Opens cfg.out when set, otherwise forwards to the fallback stream.
class Sink {
 public:
  Sink(const RunConfig& cfg, std::ostream& fallback) : os_(&fallback) {
    if (!cfg.out.empty()) {
      file_.open(cfg.out, std::ios::binary);
      if (!file_) throw InvalidInput("cannot open output file " + cfg.out);
      os_ = &file_;
    }
  }
  std::ostream& operator*() { return *os_; }

 private:
  std::ofstream file_;
  std::ostream* os_;
};

void write_side_file(const std::string& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidInput("cannot open output file " + path);
  body(f);
}

NeutralParams params_of(const RunConfig& cfg) { return NeutralParams(cfg.a, cfg.b, cfg.c); }

GridFunction load_phi(const RunConfig& cfg) {
  if (cfg.phi_file.empty()) return random_smooth(cfg.seed, cfg.grid, true);
  std::ifstream f(cfg.phi_file, std::ios::binary);
  if (!f) throw InvalidInput("cannot read initial function " + cfg.phi_file);
  const bool is_json = cfg.phi_file.size() >= 5 && cfg.phi_file.compare(cfg.phi_file.size() - 5, 5, ".json") == 0;
  if (is_json) {
    std::stringstream ss;
    ss << f.rdbuf();
    return from_json(ss.str());
  }
  return read_csv(f);
}

// Real roots first (by real part), then indexed roots by index.
std::vector<Eigenvalue> ordered(const std::vector<Eigenvalue>& eigs) {
  std::vector<Eigenvalue> v = eigs;
  std::stable_sort(v.begin(), v.end(), [](const Eigenvalue& x, const Eigenvalue& y) {
    if (x.index.has_value() != y.index.has_value()) return !x.index.has_value();
    if (!x.index) return x.value.real() < y.value.real();
    return *x.index < *y.index;
  });
  return v;
}

double scaled_distance(const NeutralParams& p, const Eigenvalue& e) {
  if (!e.index) return std::nan("");
  const double d = std::abs(e.value - auxiliary_eigen(p, *e.index));
  return *e.index == 0 ? d : d * static_cast<double>(std::labs(*e.index));
}

int finite_count(const SpectralGap& g) {
  int k = 0;
  for (const auto& e : g.finite_eigs) k += e.multiplicity;
  return k;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (sxy - sx * sy / n) / (sxx - sx * sx / n);
}

std::vector<SpectralGap> gaps_for(const NeutralParams& p, const Spectrum& s, int m_max, std::vector<std::string>& notes,
                                  OmegaConfiguration& cfg) {
  cfg = omega_configuration(p, s.eigs);
  if (cfg.omega_case == OmegaCase::v && m_max > 3) {
    notes.push_back("finitely many dichotomies: |A| = |B| leaves at most 3 gaps");
    m_max = 3;
  }
  return enumerate_gaps(cfg, s, m_max);
}

std::string xml_escape(const std::string& s) {
  std::string r;
  for (char ch : s) {
    switch (ch) {
      case '&': r += "&amp;"; break;
      case '<': r += "&lt;"; break;
      case '>': r += "&gt;"; break;
      case '"': r += "&quot;"; break;
      default: r += ch;
    }
  }
  return r;
}

}  // namespace

void validate(const RunConfig& c) {
  if (c.c == 0.0) throw InvalidInput("c must be nonzero (neutral term required)");
  if (!std::isfinite(c.a) || !std::isfinite(c.b) || !std::isfinite(c.c))
    throw InvalidInput("a, b, c must be finite");
  if (c.n_max < 1) throw InvalidInput("n_max must be at least 1");
  if (c.m_max < 1) throw InvalidInput("m_max must be at least 1");
  if (c.grid < 8 || c.grid % 2 != 0) throw InvalidInput("grid N must be even and at least 8");
  if (!(c.tol.root_residual > 0)) throw InvalidInput("tol_root must be positive");
  if (!(c.tol.quad > 0)) throw InvalidInput("tol_quad must be positive");
  if (c.format != "json" && c.format != "csv") throw InvalidInput("format must be json or csv");
  if (c.gap < 0) throw InvalidInput("gap index must be nonnegative");
  if (!(c.horizon > 0) || c.horizon > 50) throw InvalidInput("horizon must lie in (0, 50]");
  const double inv = 1.0 / c.dt;
  if (!(c.dt > 0) || c.dt > 1.0 / 64 || std::abs(inv - std::round(inv)) > 1e-9 * inv)
    throw InvalidInput("dt must be at most 1/64 with 1/dt an integer");
}

void apply_config_text(const std::string& text, RunConfig& cfg) {
  std::map<std::string, std::string> kv;
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw InvalidInput(std::string("config JSON: ") + e.what());
    }
    for (const auto& [k, v] : j.items()) kv[k] = scalar_text(v);
  } else {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto eq = line.find('=');
      auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
      };
      if (trim(line).empty()) continue;
      if (eq == std::string::npos) throw InvalidInput("config line without '=': " + trim(line));
      kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
  }
  for (const auto& [key, val] : kv) {
    std::string k = key;
    std::replace(k.begin(), k.end(), '-', '_');
    try {
      if (k == "a") cfg.a = std::stod(val);
      else if (k == "b") cfg.b = std::stod(val);
      else if (k == "c") cfg.c = std::stod(val);
      else if (k == "n_max") cfg.n_max = std::stol(val);
      else if (k == "m_max") cfg.m_max = std::stoi(val);
      else if (k == "grid") cfg.grid = std::stoi(val);
      else if (k == "tol_root") cfg.tol.root_residual = std::stod(val);
      else if (k == "tol_quad") cfg.tol.quad = std::stod(val);
      else if (k == "format") cfg.format = val;
      else if (k == "out") cfg.out = val;
      else if (k == "seed") cfg.seed = std::stoull(val);
      else if (k == "gap") cfg.gap = std::stoi(val);
      else if (k == "horizon") cfg.horizon = std::stod(val);
      else if (k == "dt") cfg.dt = std::stod(val);
      else if (k == "phi" || k == "phi_file") cfg.phi_file = val;
      else throw InvalidInput("unknown config key " + key);
    } catch (const std::logic_error&) {
      throw InvalidInput("bad value for config key " + key + ": " + val);
    }
  }
}

int cmd_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const NeutralParams p = params_of(cfg);
  const Spectrum s = enumerate_eigenvalues(p, cfg.n_max, cfg.tol);
  const auto eigs = ordered(s.eigs);
  int certified = 0;
  for (const auto& e : eigs) certified += e.certified ? 1 : 0;

  json env = envelope(cfg, "spectrum");
  json meta{{"n_max", s.n_max},
            {"n_eps", s.n_eps},
            {"tail_bound", s.tail_bound},
            {"strip", {s.strip.nu1, s.strip.nu2}},
            {"im_range", {s.im_low, s.im_high}},
            {"winding_count", s.total_count},
            {"rows", eigs.size()},
            {"certified", certified}};
  Sink sink(cfg, out);
  if (cfg.format == "csv") {
    csv_header(*sink, env);
    for (const auto& [k, v] : meta.items()) *sink << "# meta." << k << "=" << v.dump() << "\n";
    *sink << "n,re,im,residual,certified,ball_radius,scaled_distance\n";
    for (const auto& e : eigs)
      *sink << (e.index ? std::to_string(*e.index) : std::string("real")) << "," << num(e.value.real()) << ","
            << num(e.value.imag()) << "," << num(e.residual) << "," << (e.certified ? 1 : 0) << ","
            << num(e.ball_radius) << "," << num(scaled_distance(p, e)) << "\n";
  } else {
    env["metadata"] = meta;
    json rows = json::array();
    for (const auto& e : eigs) {
      const double sd = scaled_distance(p, e);
      rows.push_back({{"n", e.index ? json(*e.index) : json(nullptr)},
                      {"re", e.value.real()},
                      {"im", e.value.imag()},
                      {"residual", e.residual},
                      {"certified", e.certified},
                      {"ball_radius", e.ball_radius},
                      {"scaled_distance", std::isnan(sd) ? json(nullptr) : json(sd)}});
    }
    env["eigenvalues"] = rows;
    *sink << env.dump(2) << "\n";
  }
  if (!s.fully_certified()) {
    err << "spectrum: " << (eigs.size() - certified) << " root(s) not certified\n";
    return kDegraded;
  }
  return kOk;
}

int cmd_gaps(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const NeutralParams p = params_of(cfg);
  const Spectrum s = enumerate_eigenvalues(p, cfg.n_max, cfg.tol);
  std::vector<std::string> notes;
  OmegaConfiguration oc{};
  const auto gaps = gaps_for(p, s, cfg.m_max, notes, oc);
  const RegionTag tag = classify_region(p);
  bool increments_ok = true;
  for (std::size_t i = 2; i < gaps.size(); ++i) {
    const int d = finite_count(gaps[i]) - finite_count(gaps[i - 1]);
    increments_ok = increments_ok && d >= 1 && d <= 7;
  }
  const bool degraded = !dichotomy_condition(p) && cfg.m_max > 3;

  json env = envelope(cfg, "gaps");
  json meta{{"table", to_string(tag.table)},
            {"row", to_string(tag.row)},
            {"omega_case", to_string(oc.omega_case)},
            {"accumulation", oc.accumulation},
            {"infinite", oc.infinite},
            {"side", to_string(default_side(oc))},
            {"gamma", oc.gamma},
            {"collisions", oc.collisions},
            {"increments_in_1_7", increments_ok},
            {"tail_bound", s.tail_bound},
            {"notes", notes}};
  Sink sink(cfg, out);
  if (cfg.format == "csv") {
    csv_header(*sink, env);
    for (const auto& [k, v] : meta.items()) *sink << "# meta." << k << "=" << scalar_text(v) << "\n";
    *sink << "m,beta,alpha,K,unbounded\n";
    for (const auto& g : gaps)
      *sink << g.m << "," << num(g.beta) << "," << num(g.alpha) << "," << finite_count(g) << ","
            << (g.unbounded ? 1 : 0) << "\n";
  } else {
    env["metadata"] = meta;
    json rows = json::array();
    for (const auto& g : gaps)
      rows.push_back({{"m", g.m},
                      {"beta", g.beta},
                      {"alpha", g.alpha},
                      {"K", finite_count(g)},
                      {"finite_side", to_string(g.finite_side)},
                      {"unbounded", g.unbounded}});
    env["gaps"] = rows;
    *sink << env.dump(2) << "\n";
  }
  for (const auto& n : notes) err << "gaps: " << n << "\n";
  return degraded ? kDegraded : kOk;
}

int cmd_project(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const NeutralParams p = params_of(cfg);
  const GridFunction phi = load_phi(cfg);
  const Spectrum s = enumerate_eigenvalues(p, cfg.n_max, cfg.tol);
  std::vector<std::string> notes;
  OmegaConfiguration oc{};
  const auto gaps = gaps_for(p, s, cfg.gap + 1, notes, oc);
  if (cfg.gap >= static_cast<int>(gaps.size()))
    throw InvalidInput("gap " + std::to_string(cfg.gap) + " does not exist (" + std::to_string(gaps.size()) +
                       " available)");
  const SpectralGap& g = gaps[cfg.gap];
  const GapSplit split = gap_projection(p, g, phi);
  const GapSplit again = gap_projection(p, g, split.finite_part);
  const double scale = std::max(sup_norm(phi), 1e-300);
  const double idem = sup_norm(again.finite_part - split.finite_part) / scale;
  double imag = 0.0;
  for (const auto* f : {&split.finite_part, &split.complement})
    for (const auto& z : f->samples()) imag = std::max(imag, std::abs(z.imag()));
  imag /= scale;

  if (!cfg.out.empty()) {
    write_side_file(cfg.out + ".finite.csv", [&](std::ostream& os) { write_csv(os, split.finite_part); });
    write_side_file(cfg.out + ".complement.csv", [&](std::ostream& os) { write_csv(os, split.complement); });
  } else {
    notes.push_back("no --out given: projected functions not written");
  }
  json env = envelope(cfg, "project");
  json rep{{"gap", g.m},
           {"beta", g.beta},
           {"alpha", g.alpha},
           {"finite_side", to_string(g.finite_side)},
           {"rank", finite_count(g)},
           {"grid", phi.intervals()},
           {"phi_sup", sup_norm(phi)},
           {"finite_sup", sup_norm(split.finite_part)},
           {"complement_sup", sup_norm(split.complement)},
           {"idempotence_residual", idem},
           {"realness_residual", imag},
           {"notes", notes}};
  Sink sink(cfg, out);
  if (cfg.format == "csv") {
    csv_header(*sink, env);
    *sink << "key,value\n";
    for (const auto& [k, v] : rep.items()) *sink << k << "," << scalar_text(v) << "\n";
  } else {
    env["report"] = rep;
    *sink << env.dump(2) << "\n";
  }
  for (const auto& n : notes) err << "project: " << n << "\n";
  const bool ok = idem <= cfg.tol.quad * 0.1 && (phi.imag_ratio() > 0 || imag <= 1e-10);
  return ok ? kOk : kDegraded;
}

int cmd_norms(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const NeutralParams p = params_of(cfg);
  const Spectrum s = enumerate_eigenvalues(p, cfg.n_max, cfg.tol);
  const NormGrowthResult ng = norm_growth_experiment(s, cfg.m_max, cfg.grid);

  std::vector<long> ns;
  for (long n : {20L, 30L, 50L, 80L, 120L, 160L, 200L})
    if (n <= cfg.n_max && s.by_index(n)) ns.push_back(n);
  std::vector<std::future<double>> jobs;
  for (long n : ns) jobs.push_back(std::async(std::launch::async, [&s, n, &cfg] { return perturbation_norm(s, n, cfg.grid); }));
  std::vector<double> pn, nd;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    pn.push_back(jobs[i].get());
    nd.push_back(static_cast<double>(ns[i]));
  }
  const double pslope = ns.size() >= 2 ? loglog_slope(nd, pn) : std::nan("");

  const char* label = ng.side == GapSide::StableFinite ? "P_minus" : "P_plus";
  json env = envelope(cfg, "norms");
  json fit{{"projection", label},
           {"slope_vs_lnK", ng.slope},
           {"intercept", ng.intercept},
           {"r_squared", ng.r_squared},
           {"fit_from", ng.fit_from},
           {"fit_to", ng.fit_to},
           {"perturbation_loglog_slope", std::isnan(pslope) ? json(nullptr) : json(pslope)},
           {"n_eps", s.n_eps},
           {"grid", ng.n_intervals}};
  Sink sink(cfg, out);
  if (cfg.format == "csv") {
    csv_header(*sink, env);
    for (const auto& [k, v] : fit.items()) *sink << "# fit." << k << "=" << scalar_text(v) << "\n";
    *sink << "m,K,beta,alpha,norm\n";
    for (const auto& r : ng.rows)
      *sink << r.m << "," << r.finite_count << "," << num(r.beta) << "," << num(r.alpha) << "," << num(r.norm) << "\n";
    *sink << "\nn,perturbation_norm,n_times_norm\n";
    for (std::size_t i = 0; i < ns.size(); ++i) *sink << ns[i] << "," << num(pn[i]) << "," << num(pn[i] * nd[i]) << "\n";
  } else {
    env["fit"] = fit;
    json rows = json::array();
    for (const auto& r : ng.rows)
      rows.push_back({{"m", r.m}, {"K", r.finite_count}, {"beta", r.beta}, {"alpha", r.alpha}, {"norm", r.norm}});
    env["norm_growth"] = rows;
    json prow = json::array();
    for (std::size_t i = 0; i < ns.size(); ++i)
      prow.push_back({{"n", ns[i]}, {"norm", pn[i]}, {"n_times_norm", pn[i] * nd[i]}});
    env["perturbation"] = prow;
    *sink << env.dump(2) << "\n";
  }
  if (ns.size() < 2) {
    err << "norms: n_max too small for the perturbation sweep (need n_max >= 30)\n";
    return kDegraded;
  }
  return kOk;
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const NeutralParams p = params_of(cfg);
  const GridFunction phi = load_phi(cfg);
  const Spectrum s = enumerate_eigenvalues(p, cfg.n_max, cfg.tol);
  std::vector<std::string> notes;
  OmegaConfiguration oc{};
  const auto gaps = gaps_for(p, s, cfg.gap + 1, notes, oc);
  if (cfg.gap >= static_cast<int>(gaps.size()))
    throw InvalidInput("gap " + std::to_string(cfg.gap) + " does not exist");
  const double t_start = 5.0;
  const DichotomyReport rep = dichotomy_check(p, gaps[cfg.gap], phi, t_start, cfg.horizon, cfg.dt, cfg.tol);
  for (const auto& n : rep.notes) notes.push_back(n);

  if (!cfg.out.empty()) {
    const Trajectory tr = integrate(p, phi, finite_difference(phi), cfg.horizon, cfg.dt, false, cfg.tol);
    write_side_file(cfg.out + ".trajectory.csv", [&](std::ostream& os) { tr.write_csv(os); });
  } else {
    notes.push_back("no --out given: trajectory not written");
  }
  auto opt = [](double v) { return std::isnan(v) ? json(nullptr) : json(v); };
  json env = envelope(cfg, "simulate");
  json r{{"gap", rep.gap.m},
         {"beta", rep.gap.beta},
         {"alpha", rep.gap.alpha},
         {"finite_side", to_string(rep.gap.finite_side)},
         {"window", {t_start, cfg.horizon}},
         {"finite_rate_analytic", opt(rep.finite_rate_analytic)},
         {"stable_rate", rep.stable_rate},
         {"unstable_rate", rep.unstable_rate},
         {"finite_sup", rep.finite_norm},
         {"complement_sup", rep.complement_norm},
         {"finite_ok", rep.finite_ok},
         {"stable_ok", rep.stable_ok},
         {"unstable_ok", rep.unstable_ok},
         {"passed", rep.passed()},
         {"notes", notes}};
  Sink sink(cfg, out);
  if (cfg.format == "csv") {
    csv_header(*sink, env);
    *sink << "key,value\n";
    for (const auto& [k, v] : r.items()) *sink << k << "," << scalar_text(v) << "\n";
  } else {
    env["report"] = r;
    *sink << env.dump(2) << "\n";
  }
  if (!rep.passed()) err << "simulate: measured rates violate the gap exponents\n";
  return rep.passed() ? kOk : kDegraded;
}

namespace {

struct CheckResult {
  std::string name;
  enum { Pass, Fail, Skip } status = Pass;
  std::string message;
};

using Check = std::function<CheckResult()>;

CheckResult run_check(const std::string& name, const std::function<void(CheckResult&)>& body) {
  CheckResult r{name, CheckResult::Pass, {}};
  try {
    body(r);
  } catch (const Error& e) {
    r.status = CheckResult::Fail;
    r.message = e.what();
  } catch (const std::exception& e) {
    r.status = CheckResult::Fail;
    r.message = e.what();
  }
  return r;
}

void expect(CheckResult& r, bool ok, const std::string& why) {
  if (!ok && r.status != CheckResult::Fail) {
    r.status = CheckResult::Fail;
    r.message = why;
  }
}

void note(CheckResult& r, const std::string& msg) {
  if (r.status != CheckResult::Fail) r.message = msg;
}

}  // namespace

int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
  validate(cfg);
  const NeutralParams p = params_of(cfg);
  const int N = cfg.grid;
  const double tq = cfg.tol.quad;

  std::optional<Spectrum> spec;
  std::string spec_error;
  try {
    spec.emplace(enumerate_eigenvalues(p, std::max(cfg.n_max, 30L), cfg.tol));
  } catch (const Error& e) {
    spec_error = e.what();
  }
  auto need = [&] {
    if (!spec) throw Incomplete("spectrum unavailable (" + spec_error + ")");
    return std::cref(*spec);
  };
  // Certified indexed eigenvalues closest to the real axis.
  auto low_eigs = [&](std::size_t count) {
    std::vector<Eigenvalue> v;
    for (const auto& e : ordered(need().get().eigs))
      if (e.certified && e.multiplicity == 1) v.push_back(e);
    std::stable_sort(v.begin(), v.end(),
                     [](const Eigenvalue& x, const Eigenvalue& y) { return std::abs(x.value.imag()) < std::abs(y.value.imag()); });
    if (v.size() > count) v.resize(count);
    return v;
  };

  std::vector<Check> checks;
  checks.push_back([&] {
    return run_check("spectrum_certified", [&](CheckResult& r) {
      const Spectrum& s = need();
      expect(r, s.fully_certified(), "not every root is certified");
      double worst = 0;
      for (const auto& e : s.eigs) worst = std::max(worst, e.residual / (1 + std::abs(e.value)));
      expect(r, worst <= cfg.tol.root_residual, "scaled residual " + sci(worst) + " above tol_root");
      note(r, std::to_string(s.eigs.size()) + " roots, worst scaled residual " + sci(worst));
    });
  });
  checks.push_back([&] {
    return run_check("parseval", [&](CheckResult& r) {
      const double cstar = std::max(1.0, 1.0 / (p.c() * p.c()));
      const long nmax = std::min(128, N / 4);
      double worst = 0;
      for (int k = 0; k < 20; ++k) {
        const GridFunction f = random_smooth(cfg.seed * 1000 + 11 + k, N, true);
        double sum = 0;
        for (long n = -nmax; n <= nmax; ++n) sum += std::norm(fourier_coefficient(f, p, n));
        worst = std::max(worst, sum - cstar * std::pow(sup_norm(f), 2));
      }
      expect(r, worst <= 1e-6, "partial sum exceeds the bound by " + sci(worst));
      note(r, "max excess " + sci(worst));
    });
  });
  checks.push_back([&] {
    return run_check("projection_idempotence", [&](CheckResult& r) {
      double worst = 0, cross = 0;
      const auto eigs = low_eigs(5);
      for (int k = 0; k < 3; ++k) {
        const GridFunction f = random_smooth(cfg.seed * 1000 + 101 + k, N, false);
        const double sf = sup_norm(f);
        std::vector<GridFunction> images;
        for (const auto& e : eigs) images.push_back(residue_projection(p, e, f));
        for (std::size_t i = 0; i < eigs.size(); ++i) {
          worst = std::max(worst, sup_norm(residue_projection(p, eigs[i], images[i]) - images[i]) / sf);
          for (std::size_t j = 0; j < eigs.size(); ++j)
            if (i != j) cross = std::max(cross, sup_norm(residue_projection(p, eigs[j], images[i])) / sf);
        }
      }
      expect(r, worst <= 0.1 * tq, "P^2 - P residual " + sci(worst));
      expect(r, cross <= 0.1 * tq, "cross-annihilation residual " + sci(cross));
      note(r, "P^2-P " + sci(worst) + ", PQ " + sci(cross));
    });
  });
  checks.push_back([&] {
    return run_check("oracle_triangle", [&](CheckResult& r) {
      double worst = 0;
      for (const auto& e : low_eigs(3)) {
        for (int k = 0; k < 3; ++k) {
          const GridFunction f = random_smooth(cfg.seed * 1000 + 201 + k, N, false);
          const GridFunction r1 = residue_projection(p, e, f);
          const GridFunction r2 = contour_projection(p, e.value, 0.0, 128, f);
          const GridFunction r3 = kernel_form(ProjectionOperator::main(p, {e})).apply(f);
          worst = std::max({worst, sup_norm(r1 - r2), sup_norm(r1 - r3), sup_norm(r2 - r3)});
        }
      }
      expect(r, worst <= tq, "pairwise disagreement " + sci(worst));
      note(r, "max pairwise " + sci(worst));
    });
  });
  checks.push_back([&] {
    return run_check("gap_realness", [&](CheckResult& r) {
      std::vector<std::string> notes;
      OmegaConfiguration oc{};
      const auto gaps = gaps_for(p, need(), std::min(cfg.m_max, 3), notes, oc);
      const GridFunction f = random_smooth(cfg.seed * 1000 + 301, N, true);
      double worst = 0, idem = 0;
      for (const auto& g : gaps) {
        const GapSplit sp = gap_projection(p, g, f);
        worst = std::max({worst, sp.finite_part.imag_ratio() * sup_norm(sp.finite_part) / sup_norm(f),
                          sp.complement.imag_ratio() * sup_norm(sp.complement) / sup_norm(f)});
        idem = std::max(idem, sup_norm(gap_projection(p, g, sp.finite_part).finite_part - sp.finite_part) / sup_norm(f));
      }
      expect(r, worst <= 1e-10, "imaginary residue " + sci(worst));
      expect(r, idem <= 0.1 * tq, "gap projection idempotence " + sci(idem));
      note(r, std::to_string(gaps.size()) + " gaps, imag " + sci(worst) + ", idempotence " + sci(idem));
    });
  });
  checks.push_back([&] {
    return run_check("region_table", [&](CheckResult& r) {
      const RegionTag tag = classify_region(p);
      const RegionCheck rc = verify_region(p, need().get().eigs, cfg.tol);
      expect(r, rc.passed, rc.diagnostic);
      note(r, std::string(to_string(tag.table)) + " " + to_string(tag.row));
    });
  });
  checks.push_back([&] {
    return run_check("theta_monotonicity", [&](CheckResult& r) {
      const Spectrum& s = need();
      const double lo = std::max(s.tail_bound * 1.01, 1e-9);
      const double hi = std::max(theta_cutoff(s) * 1.5, lo * 2);
      int prev = theta(s, lo), steps = 60;
      bool mono = true;
      for (int i = 1; i <= steps; ++i) {
        const int t = theta(s, lo * std::pow(hi / lo, static_cast<double>(i) / steps));
        mono = mono && t <= prev;
        prev = t;
      }
      expect(r, mono, "theta increased with delta");
      expect(r, theta(s, theta_cutoff(s) * 1.0001 + 1e-12) == 0, "theta nonzero beyond its cutoff");
      note(r, "checked on [" + sci(lo) + ", " + sci(hi) + "]");
    });
  });
  checks.push_back([&] {
    return run_check("vertical_line", [&](CheckResult& r) {
      const VerticalLineReport vr = vertical_line_check(p, need().get().eigs, cfg.tol);
      std::string d;
      for (const auto& x : vr.diagnostics) d += x + "; ";
      expect(r, vr.passed, d);
      note(r, std::to_string(vr.lines_checked) + " lines, rho mismatch " + sci(vr.worst_rho_mismatch));
    });
  });
  const bool c_minus_one = p.c() == -1.0;
  checks.push_back([&] {
    return run_check("aux_idempotence", [&](CheckResult& r) {
      double worst = 0;
      const GridFunction f = random_smooth(cfg.seed * 1000 + 401, N, false);
      for (long n = -2; n <= 2; ++n) {
        if (n == 0 && c_minus_one) continue;
        const GridFunction q = aux_projection(p, n, f);
        worst = std::max(worst, sup_norm(aux_projection(p, n, q) - q) / sup_norm(f));
      }
      expect(r, worst <= 0.1 * tq, "Q^2 - Q residual " + sci(worst));
      note(r, std::string(c_minus_one ? "n=0 excluded (double root at 0); " : "") + "Q^2-Q " + sci(worst));
    });
  });
  if (c_minus_one)
    checks.push_back([] {
      return CheckResult{"aux_idempotence_n0", CheckResult::Skip, "c = -1: z_0 = 0 is a double root, n = 0 skipped"};
    });

  std::vector<std::future<CheckResult>> futs;
  for (auto& c : checks) futs.push_back(std::async(std::launch::async, c));
  std::vector<CheckResult> results;
  for (auto& f : futs) results.push_back(f.get());

  int failures = 0, skipped = 0;
  for (const auto& r : results) {
    failures += r.status == CheckResult::Fail;
    skipped += r.status == CheckResult::Skip;
  }
  Sink sink(cfg, out);
  std::ostream& os = *sink;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<testsuite name=\"nde-verify\" tests=\"" << results.size() << "\" failures=\"" << failures
     << "\" errors=\"0\" skipped=\"" << skipped << "\">\n  <properties>\n";
  os << "    <property name=\"version\" value=\"" << kVersion << "\"/>\n";
  const json conf = config_json(cfg);
  for (const auto& [k, v] : conf.items())
    os << "    <property name=\"config." << k << "\" value=\"" << xml_escape(scalar_text(v)) << "\"/>\n";
  if (spec) {
    os << "    <property name=\"n_eps\" value=\"" << spec->n_eps << "\"/>\n";
    os << "    <property name=\"tail_bound\" value=\"" << num(spec->tail_bound) << "\"/>\n";
  }
  os << "  </properties>\n";
  for (const auto& r : results) {
    os << "  <testcase classname=\"nde.verify\" name=\"" << r.name << "\"";
    if (r.status == CheckResult::Pass) {
      os << ">\n    <system-out>" << xml_escape(r.message) << "</system-out>\n  </testcase>\n";
    } else if (r.status == CheckResult::Skip) {
      os << ">\n    <skipped message=\"" << xml_escape(r.message) << "\"/>\n  </testcase>\n";
    } else {
      os << ">\n    <failure message=\"" << xml_escape(r.message) << "\"/>\n  </testcase>\n";
    }
  }
  os << "</testsuite>\n";
  for (const auto& r : results) {
    if (r.status == CheckResult::Fail) err << "verify: FAILED " << r.name << ": " << r.message << "\n";
    if (r.status == CheckResult::Skip) err << "verify: skipped " << r.name << ": " << r.message << "\n";
  }
  return failures == 0 ? kOk : kDegraded;
}

int run(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Spectral dichotomies of x'(t) + c x'(t-1) + a x(t) + b x(t-1) = 0"};
  app.set_version_flag("--version", kVersion);
  app.fallthrough();
  app.require_subcommand(1, 1);

  std::string config_file;
  RunConfig flags;
  app.add_option("--config", config_file, "key=value or JSON config file; flags take precedence");
  app.add_option("--a", flags.a, "coefficient a");
  app.add_option("--b", flags.b, "coefficient b");
  app.add_option("--c", flags.c, "neutral coefficient c (nonzero)");
  app.add_option("--n-max", flags.n_max, "largest root index to enumerate");
  app.add_option("--m-max", flags.m_max, "number of gaps");
  app.add_option("--grid", flags.grid, "grid intervals N on [-1, 0] (even)");
  app.add_option("--tol-root", flags.tol.root_residual, "root residual tolerance");
  app.add_option("--tol-quad", flags.tol.quad, "projection agreement tolerance");
  app.add_option("--out", flags.out, "output path (default stdout)");
  app.add_option("--format", flags.format, "json or csv");
  app.add_option("--seed", flags.seed, "seed for randomized inputs");
  app.add_option("--gap", flags.gap, "gap index m");
  app.add_option("--horizon", flags.horizon, "simulation horizon (<= 50)");
  app.add_option("--dt", flags.dt, "step size, 1/dt integer, <= 1/64");
  app.add_option("--phi", flags.phi_file, "initial function file (CSV or .json)");

  using Cmd = int (*)(const RunConfig&, std::ostream&, std::ostream&);
  const std::vector<std::pair<std::string, Cmd>> table{
      {"spectrum", cmd_spectrum}, {"gaps", cmd_gaps},         {"project", cmd_project},
      {"norms", cmd_norms},       {"simulate", cmd_simulate}, {"verify", cmd_verify}};
  std::map<std::string, std::string> help{
      {"spectrum", "enumerate and certify characteristic roots"},
      {"gaps", "classify the resolvent set and list spectral gaps"},
      {"project", "split an initial function across a gap"},
      {"norms", "projection norm growth and perturbation sweep"},
      {"simulate", "integrate and check dichotomy rates"},
      {"verify", "run the invariant battery, JUnit XML report"}};
  for (const auto& [name, fn] : table) {
    auto* sub = app.add_subcommand(name, help[name]);
    sub->add_option("phi", flags.phi_file, "initial function file")->check(CLI::ExistingFile);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "nde: " << e.what() << "\n";
    return kInvalidInput;
  }

  try {
    RunConfig cfg;
    if (!config_file.empty()) {
      std::ifstream f(config_file, std::ios::binary);
      if (!f) throw InvalidInput("cannot read config file " + config_file);
      std::stringstream ss;
      ss << f.rdbuf();
      apply_config_text(ss.str(), cfg);
    }
    auto given = [&](const char* opt) { return app.count(opt) > 0; };
    if (given("--a")) cfg.a = flags.a;
    if (given("--b")) cfg.b = flags.b;
    if (given("--c")) cfg.c = flags.c;
    if (given("--n-max")) cfg.n_max = flags.n_max;
    if (given("--m-max")) cfg.m_max = flags.m_max;
    if (given("--grid")) cfg.grid = flags.grid;
    if (given("--tol-root")) cfg.tol.root_residual = flags.tol.root_residual;
    if (given("--tol-quad")) cfg.tol.quad = flags.tol.quad;
    if (given("--out")) cfg.out = flags.out;
    if (given("--format")) cfg.format = flags.format;
    if (given("--seed")) cfg.seed = flags.seed;
    if (given("--gap")) cfg.gap = flags.gap;
    if (given("--horizon")) cfg.horizon = flags.horizon;
    if (given("--dt")) cfg.dt = flags.dt;
    if (!flags.phi_file.empty()) cfg.phi_file = flags.phi_file;

    for (const auto& [name, fn] : table)
      if (app.got_subcommand(name)) return fn(cfg, out, err);
    return kInternal;
  } catch (const InvalidInput& e) {
    err << "nde: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const Error& e) {
    err << "nde: " << e.what() << "\n";
    return kDegraded;
  } catch (const std::exception& e) {
    err << "nde: internal failure: " << e.what() << "\n";
    return kInternal;
  }
}

}  // namespace nde::cli
