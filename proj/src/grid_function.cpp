#include "nde/grid_function.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cmath>
#include <istream>
#include <random>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "nde/errors.hpp"

namespace nde {

namespace {

// Start node of the four-point stencil used on cell j.
int stencil_start(int j, int n) { return std::clamp(j - 1, 0, n - 3); }

// Lagrange weights at local coordinate u (in units of h, relative to stencil start).
std::array<double, 4> lagrange4(double u) {
  return {-(u - 1) * (u - 2) * (u - 3) / 6.0, u * (u - 2) * (u - 3) / 2.0,
          -u * (u - 1) * (u - 3) / 2.0, u * (u - 1) * (u - 2) / 6.0};
}

// Integral over cell j (width h) of the cubic through g at the cell's stencil.
cplx cubic_cell(const std::vector<cplx>& g, int j, double h) {
  const int n = static_cast<int>(g.size()) - 1;
  const int s = stencil_start(j, n);
  if (s == j - 1) return h * (-g[s] + 13.0 * g[s + 1] + 13.0 * g[s + 2] - g[s + 3]) / 24.0;
  if (s == j) return h * (9.0 * g[s] + 19.0 * g[s + 1] - 5.0 * g[s + 2] + g[s + 3]) / 24.0;
  return h * (g[s] - 5.0 * g[s + 1] + 19.0 * g[s + 2] + 9.0 * g[s + 3]) / 24.0;
}

// Integral over [t0, t1] (local units within cell j, 0 <= t0 <= t1 <= 1) of the
// cubic through g, by two-point Gauss-Legendre (exact for cubics).
cplx cubic_partial(const std::vector<cplx>& g, int j, double h, double t0, double t1) {
  const int n = static_cast<int>(g.size()) - 1;
  const int s = stencil_start(j, n);
  const double off = j - s;
  const double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
  const double r = half / std::sqrt(3.0);
  cplx acc = 0.0;
  for (double t : {mid - r, mid + r}) {
    const auto w = lagrange4(off + t);
    acc += w[0] * g[s] + w[1] * g[s + 1] + w[2] * g[s + 2] + w[3] * g[s + 3];
  }
  return acc * half * h;
}

// Moments M_k = integral over [t0, t1] of t^k e^{-mu t}, k = 0..3.
std::array<cplx, 4> exp_moments(cplx mu, double t0, double t1) {
  std::array<cplx, 4> m{};
  if (std::abs(mu) < 1.0) {
    // Power series; converges fast for |mu| < 1.
    cplx term = 1.0;  // (-mu)^j / j!
    for (int jj = 0; jj < 40; ++jj) {
      for (int k = 0; k < 4; ++k) {
        const int p = k + jj + 1;
        m[k] += term * (std::pow(t1, p) - std::pow(t0, p)) / static_cast<double>(p);
      }
      term *= -mu / static_cast<double>(jj + 1);
      if (std::abs(term) < 1e-18) break;
    }
    return m;
  }
  const cplx e0 = std::exp(-mu * t0), e1 = std::exp(-mu * t1);
  m[0] = (e0 - e1) / mu;
  double p0 = 1.0, p1 = 1.0;
  for (int k = 1; k < 4; ++k) {
    p0 *= t0;
    p1 *= t1;
    m[k] = (p0 * e0 - p1 * e1) / mu + static_cast<double>(k) / mu * m[k - 1];
  }
  return m;
}

// Integral over local [t0, t1] of cell j of e^{-lambda s} times the cubic
// interpolant of f, using exact moments of the exponential.
cplx product_cell(const std::vector<cplx>& f, int j, double h, cplx lambda, double t0, double t1) {
  const int n = static_cast<int>(f.size()) - 1;
  const int s = stencil_start(j, n);
  const double off = j - s;
  // Cubic in t (local to cell j): sum_i f[s+i] * l_i(off + t); expand to monomials.
  std::array<cplx, 4> coef{};
  for (int i = 0; i < 4; ++i) {
    // l_i(u) with u = off + t; sample at t = 0,1,2,3 and fit monomials via
    // the inverse Vandermonde of nodes 0..3.
    std::array<double, 4> vals;
    for (int q = 0; q < 4; ++q) vals[q] = lagrange4(off + q)[i];
    const double c0 = vals[0];
    const double c1 = (-11 * vals[0] + 18 * vals[1] - 9 * vals[2] + 2 * vals[3]) / 6.0;
    const double c2 = (2 * vals[0] - 5 * vals[1] + 4 * vals[2] - vals[3]) / 2.0;
    const double c3 = (-vals[0] + 3 * vals[1] - 3 * vals[2] + vals[3]) / 6.0;
    coef[0] += c0 * f[s + i];
    coef[1] += c1 * f[s + i];
    coef[2] += c2 * f[s + i];
    coef[3] += c3 * f[s + i];
  }
  const double theta_j = -1.0 + j * h;
  const auto m = exp_moments(lambda * h, t0, t1);
  return h * std::exp(-lambda * theta_j) * (coef[0] * m[0] + coef[1] * m[1] + coef[2] * m[2] + coef[3] * m[3]);
}

bool oscillatory(const GridFunction& f, cplx lambda) {
  return std::abs(lambda.imag()) > f.intervals() / 4.0;
}

std::vector<cplx> integrand(const GridFunction& f, cplx lambda) {
  std::vector<cplx> g(f.samples().size());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = std::exp(-lambda * f.node(static_cast<int>(j))) * f[j];
  return g;
}

}  // namespace

GridFunction::GridFunction(std::vector<cplx> samples) : v_(std::move(samples)) {
  const int n = static_cast<int>(v_.size()) - 1;
  if (n < 8 || n % 2 != 0) throw InvalidInput("grid needs an even number of intervals, at least 8");
}

GridFunction GridFunction::from_callable(const std::function<cplx(double)>& f, int n) {
  if (n < 8 || n % 2 != 0) throw InvalidInput("grid needs an even number of intervals, at least 8");
  std::vector<cplx> v(n + 1);
  for (int j = 0; j <= n; ++j) v[j] = f(-1.0 + static_cast<double>(j) / n);
  return GridFunction(std::move(v));
}

GridFunction GridFunction::zero(int n) { return GridFunction(std::vector<cplx>(n + 1, 0.0)); }

cplx GridFunction::operator()(double theta) const {
  const int n = intervals();
  const double x = (theta + 1.0) * n;
  const int j = std::clamp(static_cast<int>(std::floor(x)), 0, n - 1);
  if (x == static_cast<double>(j)) return v_[j];
  if (x == static_cast<double>(n)) return v_[n];
  const int s = stencil_start(j, n);
  const auto w = lagrange4(x - s);
  return w[0] * v_[s] + w[1] * v_[s + 1] + w[2] * v_[s + 2] + w[3] * v_[s + 3];
}

GridFunction GridFunction::operator+(const GridFunction& o) const {
  if (o.v_.size() != v_.size()) throw InvalidInput("grid sizes differ");
  std::vector<cplx> r(v_.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = v_[j] + o.v_[j];
  return GridFunction(std::move(r));
}

GridFunction GridFunction::operator-(const GridFunction& o) const {
  if (o.v_.size() != v_.size()) throw InvalidInput("grid sizes differ");
  std::vector<cplx> r(v_.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = v_[j] - o.v_[j];
  return GridFunction(std::move(r));
}

GridFunction GridFunction::operator*(cplx s) const {
  std::vector<cplx> r(v_.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = v_[j] * s;
  return GridFunction(std::move(r));
}

GridFunction GridFunction::conj() const {
  std::vector<cplx> r(v_.size());
  for (std::size_t j = 0; j < r.size(); ++j) r[j] = std::conj(v_[j]);
  return GridFunction(std::move(r));
}

double GridFunction::imag_ratio() const {
  const double s = sup_norm(*this);
  if (s == 0.0) return 0.0;
  double m = 0.0;
  for (const auto& z : v_) m = std::max(m, std::abs(z.imag()));
  return m / s;
}

double sup_norm(const GridFunction& f) {
  double m = 0.0;
  for (const auto& z : f.samples()) m = std::max(m, std::abs(z));
  return m;
}

std::vector<cplx> weighted_tail_integrals(const GridFunction& f, cplx lambda) {
  const int n = f.intervals();
  const double h = f.step();
  std::vector<cplx> w(n + 1, 0.0);
  if (oscillatory(f, lambda)) {
    for (int j = n - 1; j >= 0; --j) w[j] = w[j + 1] + product_cell(f.samples(), j, h, lambda, 0.0, 1.0);
    return w;
  }
  // Simpson pairs anchored at theta = 0; an odd remainder is one cubic cell on the left.
  const auto g = integrand(f, lambda);
  for (int j = n - 2; j >= 0; j -= 2) w[j] = w[j + 2] + h / 3.0 * (g[j] + 4.0 * g[j + 1] + g[j + 2]);
  for (int j = n - 1; j >= 0; j -= 2) w[j] = w[j + 1] + cubic_cell(g, j, h);
  return w;
}

cplx weighted_integral(const GridFunction& f, cplx lambda, double lower, double upper) {
  if (!(lower <= upper) || lower < -1.0 - 1e-12 || upper > 1e-12)
    throw InvalidInput("integration bounds must satisfy -1 <= lower <= upper <= 0");
  lower = std::max(lower, -1.0);
  upper = std::min(upper, 0.0);
  const int n = f.intervals();
  const double h = f.step();
  const double xl = (lower + 1.0) * n, xu = (upper + 1.0) * n;
  int jl = static_cast<int>(std::ceil(xl - 1e-9)), ju = static_cast<int>(std::floor(xu + 1e-9));
  const bool osc = oscillatory(f, lambda);
  std::vector<cplx> g;
  if (!osc) g = integrand(f, lambda);

  auto partial = [&](int cell, double t0, double t1) -> cplx {
    if (t1 <= t0) return 0.0;
    return osc ? product_cell(f.samples(), cell, h, lambda, t0, t1) : cubic_partial(g, cell, h, t0, t1);
  };

  if (jl > ju) {
    // Both bounds inside the same cell.
    const int cell = std::clamp(static_cast<int>(std::floor(xl)), 0, n - 1);
    return partial(cell, xl - cell, xu - cell);
  }
  cplx acc = 0.0;
  if (xl < jl - 1e-9) acc += partial(jl - 1, xl - (jl - 1), 1.0);
  if (xu > ju + 1e-9) acc += partial(ju, 0.0, xu - ju);
  if (osc) {
    for (int j = jl; j < ju; ++j) acc += product_cell(f.samples(), j, h, lambda, 0.0, 1.0);
    return acc;
  }
  int j = ju;
  while (j - 2 >= jl) {
    acc += h / 3.0 * (g[j - 2] + 4.0 * g[j - 1] + g[j]);
    j -= 2;
  }
  if (j - 1 == jl) acc += cubic_cell(g, jl, h);
  return acc;
}

cplx fourier_coefficient(const GridFunction& f, const NeutralParams& p, long n) {
  return weighted_integral(f, -auxiliary_eigen(p, n), -1.0, 0.0);
}

GridFunction finite_difference(const GridFunction& f) {
  const int n = f.intervals();
  const double h = f.step();
  const auto& v = f.samples();
  std::vector<cplx> d(n + 1);
  for (int j = 0; j <= n; ++j) {
    if (j >= 2 && j <= n - 2) {
      d[j] = (v[j - 2] - 8.0 * v[j - 1] + 8.0 * v[j + 1] - v[j + 2]) / (12.0 * h);
    } else if (j == 0) {
      d[j] = (-25.0 * v[0] + 48.0 * v[1] - 36.0 * v[2] + 16.0 * v[3] - 3.0 * v[4]) / (12.0 * h);
    } else if (j == 1) {
      d[j] = (-3.0 * v[0] - 10.0 * v[1] + 18.0 * v[2] - 6.0 * v[3] + v[4]) / (12.0 * h);
    } else if (j == n) {
      d[j] = (25.0 * v[n] - 48.0 * v[n - 1] + 36.0 * v[n - 2] - 16.0 * v[n - 3] + 3.0 * v[n - 4]) / (12.0 * h);
    } else {
      d[j] = (3.0 * v[n] + 10.0 * v[n - 1] - 18.0 * v[n - 2] + 6.0 * v[n - 3] - v[n - 4]) / (12.0 * h);
    }
  }
  return GridFunction(std::move(d));
}

GridFunction random_smooth(std::uint64_t seed, int n_intervals, bool real_valued) {
  std::mt19937_64 rng(seed);
  // The engine's output sequence is fixed by the standard; distributions are not.
  auto u = [&rng] { return 2.0 * static_cast<double>(rng() >> 11) * 0x1.0p-53 - 1.0; };
  constexpr int kDeg = 6;
  std::array<cplx, 2 * kDeg + 4> w{};
  for (auto& x : w) x = real_valued ? cplx(u(), 0.0) : cplx(u(), u());
  const double pi = std::acos(-1.0);
  return GridFunction::from_callable(
      [&](double t) {
        cplx s = w[0] + w[1] * t + w[2] * t * t;
        for (int k = 1; k <= kDeg; ++k)
          s += (w[2 * k + 1] * std::cos(k * pi * t) + w[2 * k + 2] * std::sin(k * pi * t)) / double(k);
        return s;
      },
      n_intervals);
}

void write_csv(std::ostream& os, const GridFunction& f) {
  os << "# N=" << f.intervals() << "\n";
  os << "re,im\n";
  char buf[64];
  for (const auto& z : f.samples()) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", z.real(), z.imag());
    os << buf;
  }
}

GridFunction read_csv(std::istream& is) {
  std::string line;
  long declared = -1;
  std::vector<cplx> v;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("N=");
      if (pos != std::string::npos) declared = std::stol(line.substr(pos + 2));
      continue;
    }
    if (line.rfind("re", 0) == 0) continue;
    const auto comma = line.find(',');
    std::istringstream in(line);
    in.imbue(std::locale::classic());
    double re = 0.0, im = 0.0;
    if (comma == std::string::npos) {
      if (!(in >> re)) throw InvalidInput("bad CSV row: " + line);
    } else {
      std::istringstream a(line.substr(0, comma)), b(line.substr(comma + 1));
      a.imbue(std::locale::classic());
      b.imbue(std::locale::classic());
      if (!(a >> re) || !(b >> im)) throw InvalidInput("bad CSV row: " + line);
    }
    v.emplace_back(re, im);
  }
  if (declared >= 0 && static_cast<long>(v.size()) != declared + 1)
    throw InvalidInput("CSV declares N=" + std::to_string(declared) + " but holds " +
                       std::to_string(v.size()) + " rows");
  return GridFunction(std::move(v));
}

std::string to_json(const GridFunction& f) {
  nlohmann::json j;
  j["N"] = f.intervals();
  std::vector<double> re, im;
  for (const auto& z : f.samples()) {
    re.push_back(z.real());
    im.push_back(z.imag());
  }
  j["re"] = re;
  j["im"] = im;
  return j.dump();
}

GridFunction from_json(const std::string& text) {
  const auto j = nlohmann::json::parse(text);
  const auto re = j.at("re").get<std::vector<double>>();
  std::vector<double> im(re.size(), 0.0);
  if (j.contains("im")) im = j.at("im").get<std::vector<double>>();
  if (im.size() != re.size()) throw InvalidInput("re and im lengths differ");
  if (j.contains("N") && j.at("N").get<long>() + 1 != static_cast<long>(re.size()))
    throw InvalidInput("JSON N does not match sample count");
  std::vector<cplx> v(re.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = {re[k], im[k]};
  return GridFunction(std::move(v));
}

}  // namespace nde
