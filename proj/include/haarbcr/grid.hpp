#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace haarbcr {

/// Finite dyadic discretization of [0, M): M unit cells refined J times.
/// Samples live on the N = M*2^J finest cells; functions are piecewise
/// constant at mesh h = 2^-J.
struct GridSpec {
  std::int64_t unit_cells = 1;  // M
  int levels = 1;               // J

  std::int64_t sample_count() const { return unit_cells << levels; }
  double mesh() const { return std::ldexp(1.0, -levels); }
  double domain_length() const { return double(unit_cells); }
  // number of wavelets (and cubes) at level j
  std::int64_t side(int j) const { return unit_cells << j; }

  bool valid() const { return unit_cells >= 1 && levels >= 1 && levels < 62; }
  void require_valid() const {
    if (!valid()) throw std::invalid_argument("GridSpec: need M >= 1 and 1 <= J < 62");
  }
  friend bool operator==(const GridSpec& a, const GridSpec& b) {
    return a.unit_cells == b.unit_cells && a.levels == b.levels;
  }
};

/// Dyadic cube Q_{j,k} = [2^-j k, 2^-j (k+1)).
struct DyadicCube {
  int level = 0;
  std::int64_t index = 0;

  double lower() const { return std::ldexp(double(index), -level); }
  double upper() const { return std::ldexp(double(index + 1), -level); }
  double length() const { return std::ldexp(1.0, -level); }

  bool contains(double x) const { return x >= lower() && x < upper(); }
  // Q' subset of Q iff j' >= j and floor(k' / 2^(j'-j)) == k
  bool contains(const DyadicCube& q) const {
    if (q.level < level) return false;
    return (q.index >> (q.level - level)) == index;
  }
  bool valid_in(const GridSpec& g) const {
    return level >= 0 && level <= g.levels && index >= 0 && index < g.side(level);
  }
  friend bool operator==(const DyadicCube& a, const DyadicCube& b) {
    return a.level == b.level && a.index == b.index;
  }
};

/// Euclidean gap between two closed same-level cubes; 0 iff adjacent or equal.
inline double cube_distance(const DyadicCube& q, const DyadicCube& r) {
  if (q.level != r.level) throw std::invalid_argument("cube_distance: cubes must share a level");
  std::int64_t gap = std::llabs(q.index - r.index);
  if (gap <= 1) return 0.0;
  return std::ldexp(double(gap - 1), -q.level);
}

/// Haar wavelet psi_{j,k}(x) = 2^{j/2} psi(2^j x - k), psi = +1 on [0,1/2), -1 on [1/2,1).
inline double eval_psi(int j, std::int64_t k, double x) {
  double t = std::ldexp(x, j) - double(k);
  if (t < 0.0 || t >= 1.0) return 0.0;
  double amp = std::ldexp(1.0, j / 2) * ((j & 1) ? std::sqrt(2.0) : 1.0);
  return t < 0.5 ? amp : -amp;
}

/// Scaling function phi_{j,k}(x) = 2^{j/2} on Q_{j,k}, 0 elsewhere.
inline double eval_phi(int j, std::int64_t k, double x) {
  double t = std::ldexp(x, j) - double(k);
  if (t < 0.0 || t >= 1.0) return 0.0;
  return std::ldexp(1.0, j / 2) * ((j & 1) ? std::sqrt(2.0) : 1.0);
}

/// A function sampled on the finest cells of a grid (piecewise constant at scale h).
struct GridFunction {
  GridSpec spec;
  std::vector<double> values;

  GridFunction() = default;
  explicit GridFunction(const GridSpec& g) : spec(g), values(g.sample_count(), 0.0) {}
  GridFunction(const GridSpec& g, std::vector<double> v) : spec(g), values(std::move(v)) {
    if (std::int64_t(values.size()) != g.sample_count())
      throw std::invalid_argument("GridFunction: value count does not match grid");
  }

  double& operator[](std::int64_t p) { return values[size_t(p)]; }
  double operator[](std::int64_t p) const { return values[size_t(p)]; }

  /// Sample an arbitrary callable at cell midpoints.
  template <class F>
  static GridFunction sample(const GridSpec& g, F&& f) {
    GridFunction out(g);
    const double h = g.mesh();
    for (std::int64_t p = 0; p < g.sample_count(); ++p) out[p] = f((double(p) + 0.5) * h);
    return out;
  }
};

/// Bilinear bracket <f,g> = integral of f*g = h * sum f_p g_p.
inline double inner(const GridFunction& f, const GridFunction& g) {
  if (!(f.spec == g.spec)) throw std::invalid_argument("inner: grid mismatch");
  double s = 0.0;
  for (size_t p = 0; p < f.values.size(); ++p) s += f.values[p] * g.values[p];
  return s * f.spec.mesh();
}

inline double norm_l2(const GridFunction& f) { return std::sqrt(inner(f, f)); }

inline double norm_sup(const GridFunction& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::fabs(v));
  return m;
}

/// Haar coefficients: coarse block against phi_{0,m} plus detail levels j = 0..J-1.
struct WaveletCoeffs {
  GridSpec spec;
  std::vector<double> coarse;               // length M
  std::vector<std::vector<double>> detail;  // detail[j] has length M*2^j

  WaveletCoeffs() = default;
  explicit WaveletCoeffs(const GridSpec& g) : spec(g), coarse(g.unit_cells, 0.0) {
    detail.resize(g.levels);
    for (int j = 0; j < g.levels; ++j) detail[j].assign(g.side(j), 0.0);
  }
};

/// Scaling coefficients on every level 0..J; level J determines the function.
/// Kept as a separate product of the cascade because the operator application
/// consumes s_j at all levels, not just the orthogonal pieces.
struct ScalingPyramid {
  GridSpec spec;
  std::vector<std::vector<double>> s;  // s[j] has length M*2^j, j = 0..J
};

namespace detail {
inline constexpr double kInvSqrt2 = 0.70710678118654752440084436210485;
}

/// One analysis pass: returns both the scaling pyramid and the wavelet coefficients.
inline void haar_cascade(const GridFunction& f, ScalingPyramid& pyr, WaveletCoeffs& wc) {
  const GridSpec& g = f.spec;
  g.require_valid();
  pyr.spec = g;
  pyr.s.assign(size_t(g.levels) + 1, {});
  wc = WaveletCoeffs(g);
  const double scale = std::ldexp(1.0, -g.levels / 2) * ((g.levels & 1) ? detail::kInvSqrt2 : 1.0);
  auto& fine = pyr.s[size_t(g.levels)];
  fine.resize(f.values.size());
  for (size_t p = 0; p < f.values.size(); ++p) fine[p] = f.values[p] * scale;
  for (int j = g.levels - 1; j >= 0; --j) {
    const auto& child = pyr.s[size_t(j) + 1];
    auto& s = pyr.s[size_t(j)];
    auto& d = wc.detail[size_t(j)];
    const std::int64_t n = g.side(j);
    s.resize(size_t(n));
    for (std::int64_t k = 0; k < n; ++k) {
      const double e = child[size_t(2 * k)], o = child[size_t(2 * k + 1)];
      s[size_t(k)] = (e + o) * detail::kInvSqrt2;
      d[size_t(k)] = (e - o) * detail::kInvSqrt2;
    }
  }
  wc.coarse = pyr.s[0];
}

inline WaveletCoeffs haar_analysis(const GridFunction& f) {
  ScalingPyramid pyr;
  WaveletCoeffs wc;
  haar_cascade(f, pyr, wc);
  return wc;
}

inline GridFunction haar_synthesis(const WaveletCoeffs& wc) {
  const GridSpec& g = wc.spec;
  g.require_valid();
  if (std::int64_t(wc.coarse.size()) != g.unit_cells || int(wc.detail.size()) != g.levels)
    throw std::invalid_argument("haar_synthesis: malformed coefficients");
  std::vector<double> s = wc.coarse;
  for (int j = 0; j < g.levels; ++j) {
    const auto& d = wc.detail[size_t(j)];
    std::vector<double> next(size_t(g.side(j + 1)));
    for (std::int64_t k = 0; k < g.side(j); ++k) {
      next[size_t(2 * k)] = (s[size_t(k)] + d[size_t(k)]) * detail::kInvSqrt2;
      next[size_t(2 * k + 1)] = (s[size_t(k)] - d[size_t(k)]) * detail::kInvSqrt2;
    }
    s.swap(next);
  }
  GridFunction out(g);
  const double scale = std::ldexp(1.0, g.levels / 2) * ((g.levels & 1) ? std::sqrt(2.0) : 1.0);
  for (size_t p = 0; p < s.size(); ++p) out.values[p] = s[p] * scale;
  return out;
}

// ---- GridFunction I/O: CSV (one value per line) and raw (u64 LE count + f64 LE values) ----

inline void write_csv(const GridFunction& f, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_csv: cannot open " + path);
  os.precision(17);
  for (double v : f.values) os << v << "\n";
  if (!os) throw std::runtime_error("write_csv: write failed: " + path);
}

inline std::vector<double> read_csv_values(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("read_csv: cannot open " + path);
  std::vector<double> vals;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    vals.push_back(std::stod(line));
  }
  return vals;
}

inline void write_raw(const GridFunction& f, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_raw: cannot open " + path);
  std::uint64_t n = f.values.size();
  os.write(reinterpret_cast<const char*>(&n), 8);
  os.write(reinterpret_cast<const char*>(f.values.data()),
           std::streamsize(f.values.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_raw: write failed: " + path);
}

inline std::vector<double> read_raw_values(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_raw: cannot open " + path);
  std::uint64_t n = 0;
  is.read(reinterpret_cast<char*>(&n), 8);
  std::vector<double> vals(n);
  is.read(reinterpret_cast<char*>(vals.data()), std::streamsize(n * sizeof(double)));
  if (!is) throw std::runtime_error("read_raw: truncated file: " + path);
  return vals;
}

}  // namespace haarbcr
