#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "haarbcr/grid.hpp"

namespace haarbcr {

/// A kernel K(x,y), locally bounded on the whole domain square, together with
/// its declared Calderon-Zygmund metadata. The declared constants are claims;
/// the check_* routines measure them.
struct KernelSpec {
  std::string name;
  std::function<double(double, double)> eval;  // pure and reentrant
  double size_constant = 0.0;                  // declared C0 for |K(x,y)| <= C0 |x-y|^-1
  double holder_exponent = 1.0;                // declared s in (0,1]
  double regularity_constant = 0.0;            // declared constant for the smoothness ratio
  std::map<std::string, double> params;

  double operator()(double x, double y) const { return eval(x, y); }
};

namespace detail {

inline double get_param(const std::map<std::string, double>& p, const std::string& key,
                        double fallback) {
  auto it = p.find(key);
  return it == p.end() ? fallback : it->second;
}

inline double eval_poly(const double* c, int n, double x) {
  double v = 0.0;
  for (int i = n - 1; i >= 0; --i) v = v * x + c[i];
  return v;
}

}  // namespace detail

/// Cell-averaged kernel table at the finest scale of some grid; evaluation
/// looks up the cell containing each coordinate.
struct TabulatedKernel {
  std::int64_t n = 0;
  double cell = 0.0;  // domain length / n
  std::vector<double> table;  // row-major n*n

  double operator()(double x, double y) const {
    auto clampi = [&](double t) {
      auto i = std::int64_t(std::floor(t / cell));
      return std::min(std::max<std::int64_t>(i, 0), n - 1);
    };
    return table[size_t(clampi(x) * n + clampi(y))];
  }
};

/// Tabulated kernel file: first line N, then N*N row-major values, one per line.
/// Values are cell averages on an N-cell uniform split of [0, domain_length).
inline TabulatedKernel read_kernel_table(const std::string& path, double domain_length) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("kernel table: cannot open " + path);
  TabulatedKernel t;
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("kernel table: empty file " + path);
  t.n = std::stoll(line);
  if (t.n < 1) throw std::runtime_error("kernel table: bad size header in " + path);
  t.cell = domain_length / double(t.n);
  t.table.reserve(size_t(t.n * t.n));
  while (std::getline(is, line)) {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) t.table.push_back(std::stod(tok));
    }
  }
  if (std::int64_t(t.table.size()) != t.n * t.n)
    throw std::runtime_error("kernel table: expected " + std::to_string(t.n * t.n) + " values in " + path);
  return t;
}

/// Built-in kernel registry. All kernels live on [0, domain_length).
///   "constant"          K = c                          (param c, default 1)
///   "separable"         K(x,y) = u(x) v(y)             (params u0..u3, v0..v3; default u=v=x)
///   "truncated-hilbert" K(x,y) = (x-y)/((x-y)^2+d^2)   (param delta > 0)
///   "truncated-abs"     K(x,y) = 1/max(|x-y|, d)       (param delta > 0)
///   "tabulated"         read from file                 (param via table argument)
inline KernelSpec kernel_registry_get(const std::string& name,
                                      const std::map<std::string, double>& params = {},
                                      double domain_length = 1.0,
                                      const std::string& table_path = "") {
  KernelSpec k;
  k.name = name;
  k.params = params;
  if (name == "constant") {
    const double c = detail::get_param(params, "c", 1.0);
    k.eval = [c](double, double) { return c; };
    k.size_constant = std::fabs(c) * domain_length;
    k.holder_exponent = 1.0;
    k.regularity_constant = 0.0;
  } else if (name == "separable") {
    double u[4], v[4];
    for (int i = 0; i < 4; ++i) {
      u[i] = detail::get_param(params, "u" + std::to_string(i), i == 1 ? 1.0 : 0.0);
      v[i] = detail::get_param(params, "v" + std::to_string(i), i == 1 ? 1.0 : 0.0);
    }
    k.eval = [u0 = u[0], u1 = u[1], u2 = u[2], u3 = u[3], v0 = v[0], v1 = v[1], v2 = v[2],
              v3 = v[3]](double x, double y) {
      const double uc[4] = {u0, u1, u2, u3}, vc[4] = {v0, v1, v2, v3};
      return detail::eval_poly(uc, 4, x) * detail::eval_poly(vc, 4, y);
    };
    // crude declared bounds from coefficient sums on [0, L)
    double su = 0.0, sv = 0.0, du = 0.0;
    double L = std::max(domain_length, 1.0);
    for (int i = 0; i < 4; ++i) {
      su += std::fabs(u[i]) * std::pow(L, i);
      sv += std::fabs(v[i]) * std::pow(L, i);
      if (i > 0) du += std::fabs(u[i]) * i * std::pow(L, i - 1);
    }
    k.size_constant = su * sv * domain_length;
    k.holder_exponent = 1.0;
    k.regularity_constant = 2.0 * du * sv * domain_length * domain_length;
  } else if (name == "truncated-hilbert") {
    const double delta = detail::get_param(params, "delta", 0.0);
    if (delta <= 0.0) throw std::invalid_argument("truncated-hilbert: need delta > 0");
    k.eval = [delta](double x, double y) {
      const double u = x - y;
      return u / (u * u + delta * delta);
    };
    k.size_constant = 1.0;  // |u| * |u|/(u^2+d^2) <= 1
    k.holder_exponent = 1.0;
    k.regularity_constant = 8.0;  // |dK/du| <= 4/|x-y|^2 on admissible triples, both terms
  } else if (name == "truncated-abs") {
    const double delta = detail::get_param(params, "delta", 0.0);
    if (delta <= 0.0) throw std::invalid_argument("truncated-abs: need delta > 0");
    k.eval = [delta](double x, double y) { return 1.0 / std::max(std::fabs(x - y), delta); };
    k.size_constant = 1.0;
    k.holder_exponent = 1.0;
    k.regularity_constant = 8.0;
  } else if (name == "tabulated") {
    if (table_path.empty()) throw std::invalid_argument("tabulated: table path required");
    TabulatedKernel t = read_kernel_table(table_path, domain_length);
    k.eval = [t = std::move(t)](double x, double y) { return t(x, y); };
    k.size_constant = detail::get_param(params, "C0", 0.0);
    k.holder_exponent = detail::get_param(params, "s", 1.0);
    k.regularity_constant = detail::get_param(params, "Creg", 0.0);
  } else {
    throw std::invalid_argument("unknown kernel: " + name);
  }
  return k;
}

// ---- condition checkers ----

struct KernelCheckReport {
  double size_constant = 0.0;        // sup |K(x,y)| |x-y|
  double regularity_constant = 0.0;  // sup smoothness ratio
  double adjacent_integral = 0.0;    // sup over adjacent same-level cubes of (integral |K|)/|Q|
  double separated_log_constant = 0.0;  // sup of the log-weighted separated-cube constant
  bool size_pass = false;
  bool regularity_pass = false;
  bool weak_pass = false;
};

/// Measured sup of |K(x,y)| * |x-y| over sample pairs; pass iff <= declared C0.
inline double check_size(const KernelSpec& k, const std::vector<std::pair<double, double>>& samples) {
  if (samples.empty()) throw std::invalid_argument("check_size: empty sample set");
  double sup = 0.0;
  for (auto [x, y] : samples) {
    if (x == y) continue;
    sup = std::max(sup, std::fabs(k(x, y)) * std::fabs(x - y));
  }
  return sup;
}

struct RegularityTriple {
  double x, xp, y;
};

/// Measured sup of (|K(x,y)-K(x',y)| + |K(y,x)-K(y,x')|) |x-y|^{1+s} / |x-x'|^s
/// over triples with |x-x'| <= |x-y|/2; triples violating that are skipped.
inline double check_regularity(const KernelSpec& k, const std::vector<RegularityTriple>& triples,
                               double s) {
  double sup = 0.0;
  bool any = false;
  for (const auto& t : triples) {
    const double dxy = std::fabs(t.x - t.y);
    const double dxx = std::fabs(t.x - t.xp);
    if (dxx == 0.0 || dxx > 0.5 * dxy) continue;
    any = true;
    const double num = std::fabs(k(t.x, t.y) - k(t.xp, t.y)) + std::fabs(k(t.y, t.x) - k(t.y, t.xp));
    sup = std::max(sup, num * std::pow(dxy, 1.0 + s) / std::pow(dxx, s));
  }
  if (!any) throw std::invalid_argument("check_regularity: no admissible triples");
  return sup;
}

/// Default sample pairs: all distinct same-level cube-center pairs.
inline std::vector<std::pair<double, double>> center_pairs(const GridSpec& g, int level) {
  if (level < 0 || level > g.levels) throw std::invalid_argument("center_pairs: bad level");
  const std::int64_t n = g.side(level);
  const double len = std::ldexp(1.0, -level);
  std::vector<std::pair<double, double>> out;
  out.reserve(size_t(n * (n - 1)));
  for (std::int64_t a = 0; a < n; ++a)
    for (std::int64_t b = 0; b < n; ++b)
      if (a != b) out.emplace_back((double(a) + 0.5) * len, (double(b) + 0.5) * len);
  return out;
}

/// Default triples: center pairs with x' displaced by 1/4 and 1/2 of |x-y| both ways.
inline std::vector<RegularityTriple> center_triples(const GridSpec& g, int level) {
  std::vector<RegularityTriple> out;
  for (auto [x, y] : center_pairs(g, level)) {
    const double d = std::fabs(x - y);
    for (double frac : {0.25, 0.5})
      for (double sign : {1.0, -1.0}) out.push_back({x, x + sign * frac * d, y});
  }
  return out;
}

/// Exact cell-sum checks of the weakened kernel conditions at one level:
/// adjacent cubes   integral_{QxR} |K| / |Q|
/// separated cubes  integral_{QxR} |K(x,y)-K(x,y_R)| * d(Q,R) * ln^{2+eps}(2 + d(Q,R)/|Q|)
inline KernelCheckReport check_weak_integral(const KernelSpec& k, const GridSpec& g, int level,
                                             double eps = 1.0) {
  if (level < 0 || level >= g.levels + 1) throw std::invalid_argument("check_weak_integral: bad level");
  const std::int64_t n = g.side(level);
  const std::int64_t cells = std::int64_t(1) << (g.levels - level);  // finest cells per cube
  const double h = g.mesh();
  const double qlen = std::ldexp(1.0, -level);
  KernelCheckReport rep;
  for (std::int64_t a = 0; a < n; ++a) {
    for (std::int64_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const DyadicCube Q{level, a}, R{level, b};
      const double d = cube_distance(Q, R);
      const double yR = 0.5 * (R.lower() + R.upper());
      double acc = 0.0;
      for (std::int64_t p = 0; p < cells; ++p) {
        const double x = Q.lower() + (double(p) + 0.5) * h;
        for (std::int64_t q = 0; q < cells; ++q) {
          const double y = R.lower() + (double(q) + 0.5) * h;
          acc += (d == 0.0) ? std::fabs(k(x, y)) : std::fabs(k(x, y) - k(x, yR));
        }
      }
      acc *= h * h;
      if (d == 0.0) {
        rep.adjacent_integral = std::max(rep.adjacent_integral, acc / qlen);
      } else {
        const double w = d * std::pow(std::log(2.0 + d / qlen), 2.0 + eps);
        rep.separated_log_constant = std::max(rep.separated_log_constant, acc * w);
      }
    }
  }
  return rep;
}

}  // namespace haarbcr
