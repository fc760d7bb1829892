#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "haarbcr/apply.hpp"
#include "haarbcr/grid.hpp"

namespace haarbcr {

/// A pair of testing functions per dyadic cube, each supported in its cube and
/// stored compactly over the cube's finest cells. Exponents p, q in (1, inf];
/// infinity is encoded as std::numeric_limits<double>::infinity().
struct BSystem {
  struct Entry {
    DyadicCube cube;
    std::vector<double> b1, b2;  // length = finest cells in cube
  };
  GridSpec spec;
  double p = 2.0, q = 2.0;
  std::vector<Entry> cubes;

  bool exponent_constraint_ok() const {
    const double ip = std::isinf(p) ? 0.0 : 1.0 / p;
    const double iq = std::isinf(q) ? 0.0 : 1.0 / q;
    return ip + iq <= 1.0 + 1e-15;
  }
};

inline double dual_exponent(double e) {
  if (std::isinf(e)) return 1.0;
  if (e <= 1.0) throw std::invalid_argument("dual_exponent: exponent must exceed 1");
  return e / (e - 1.0);
}

inline void validate_bsystem(const BSystem& bs) {
  if (!(bs.p > 1.0) || !(bs.q > 1.0))
    throw std::invalid_argument("BSystem: exponents must satisfy 1 < p, q <= inf");
  for (const auto& e : bs.cubes) {
    if (!e.cube.valid_in(bs.spec))
      throw std::invalid_argument("BSystem: cube (" + std::to_string(e.cube.level) + "," +
                                  std::to_string(e.cube.index) + ") outside grid");
    const auto cells = std::int64_t(1) << (bs.spec.levels - e.cube.level);
    if (std::int64_t(e.b1.size()) != cells || std::int64_t(e.b2.size()) != cells)
      throw std::invalid_argument("BSystem: value count mismatch on cube (" +
                                  std::to_string(e.cube.level) + "," +
                                  std::to_string(e.cube.index) + ")");
  }
}

/// Canonical system b1_Q = b2_Q = 1_Q on every cube of the level range.
inline BSystem make_bsystem_indicator(const GridSpec& g, int level_lo, int level_hi, double p,
                                      double q) {
  g.require_valid();
  if (level_lo < 0 || level_hi >= g.levels || level_lo > level_hi)
    throw std::invalid_argument("make_bsystem_indicator: bad level range");
  BSystem bs;
  bs.spec = g;
  bs.p = p;
  bs.q = q;
  for (int j = level_lo; j <= level_hi; ++j) {
    const std::int64_t cells = std::int64_t(1) << (g.levels - j);
    for (std::int64_t k = 0; k < g.side(j); ++k)
      bs.cubes.push_back({DyadicCube{j, k}, std::vector<double>(size_t(cells), 1.0),
                          std::vector<double>(size_t(cells), 1.0)});
  }
  return bs;
}

/// Expand a compact per-cube vector to a full-grid function (zero outside Q).
inline GridFunction embed_on_grid(const GridSpec& g, const DyadicCube& q,
                                  const std::vector<double>& vals) {
  GridFunction f(g);
  const std::int64_t cells = std::int64_t(1) << (g.levels - q.level);
  const std::int64_t base = q.index * cells;
  for (std::int64_t i = 0; i < cells; ++i) f[base + i] = vals[size_t(i)];
  return f;
}

namespace detail {

// (1/|Q| * integral over Q of |f|^e)^{1/e}; the essential sup over Q for e = inf
inline double local_mean_norm(const GridFunction& f, const DyadicCube& q, double e) {
  const GridSpec& g = f.spec;
  const std::int64_t cells = std::int64_t(1) << (g.levels - q.level);
  const std::int64_t base = q.index * cells;
  if (std::isinf(e)) {
    double sup = 0.0;
    for (std::int64_t i = 0; i < cells; ++i) sup = std::max(sup, std::fabs(f[base + i]));
    return sup;
  }
  double acc = 0.0;
  for (std::int64_t i = 0; i < cells; ++i) acc += std::pow(std::fabs(f[base + i]), e);
  return std::pow(acc / double(cells), 1.0 / e);
}

}  // namespace detail

/// Per-cube normalization residual max(|int b1 - |Q||, |int b2 - |Q||) / |Q|.
inline std::vector<double> check_normalization(const BSystem& bs) {
  validate_bsystem(bs);
  const double h = bs.spec.mesh();
  std::vector<double> out;
  out.reserve(bs.cubes.size());
  for (const auto& e : bs.cubes) {
    double i1 = 0.0, i2 = 0.0;
    for (double v : e.b1) i1 += v;
    for (double v : e.b2) i2 += v;
    i1 *= h;
    i2 *= h;
    const double q = e.cube.length();
    out.push_back(std::max(std::fabs(i1 - q), std::fabs(i2 - q)) / q);
  }
  return out;
}

/// Per-cube size constants (int_Q |b1|^p + |b2|^q) / |Q|, sup-norm form for
/// infinite exponents.
inline std::vector<double> check_size(const BSystem& bs) {
  validate_bsystem(bs);
  const double h = bs.spec.mesh();
  std::vector<double> out;
  out.reserve(bs.cubes.size());
  for (const auto& e : bs.cubes) {
    const double q = e.cube.length();
    double t1, t2;
    if (std::isinf(bs.p)) {
      t1 = 0.0;
      for (double v : e.b1) t1 = std::max(t1, std::fabs(v));
    } else {
      t1 = 0.0;
      for (double v : e.b1) t1 += std::pow(std::fabs(v), bs.p);
      t1 = t1 * h / q;
    }
    if (std::isinf(bs.q)) {
      t2 = 0.0;
      for (double v : e.b2) t2 = std::max(t2, std::fabs(v));
    } else {
      t2 = 0.0;
      for (double v : e.b2) t2 += std::pow(std::fabs(v), bs.q);
      t2 = t2 * h / q;
    }
    out.push_back(t1 + t2);
  }
  return out;
}

struct ImageConstants {
  // normalized local means of the operator images, per cube:
  //   forward  = (1/|Q| int_Q |T b1_Q|^{q'})
  //   adjointc = (1/|Q| int_Q |T* b2_Q|^{p'})
  std::vector<double> forward, adjointc;
  double sup_total = 0.0;  // sup over cubes of forward + adjoint contribution
};

/// Per-cube image constants (3.9)-style: applies T to b1 and T* to b2 and
/// integrates the dual powers over the cube only.
inline ImageConstants check_image(const BSystem& bs, const ApplyFn& op, const ApplyFn& op_adjoint) {
  validate_bsystem(bs);
  if (bs.p <= 1.0 || bs.q <= 1.0)
    throw std::invalid_argument("check_image: exponents must exceed 1");
  const double qp = dual_exponent(bs.q);  // q'
  const double pp = dual_exponent(bs.p);  // p'
  ImageConstants out;
  for (const auto& e : bs.cubes) {
    const GridFunction tb1 = op(embed_on_grid(bs.spec, e.cube, e.b1));
    const GridFunction tb2 = op_adjoint(embed_on_grid(bs.spec, e.cube, e.b2));
    const double f = std::pow(detail::local_mean_norm(tb1, e.cube, qp), qp);
    const double a = std::pow(detail::local_mean_norm(tb2, e.cube, pp), pp);
    out.forward.push_back(f);
    out.adjointc.push_back(a);
    out.sup_total = std::max(out.sup_total, f + a);
  }
  return out;
}

/// T(1)-type testing constant for the perfect dyadic part:
/// sup over cubes of (int_Q |T 1_Q| + |T* 1_Q|) / |Q|.
struct T1Constants {
  std::vector<double> per_cube;
  std::vector<DyadicCube> cubes;
  double sup = 0.0;
};

inline T1Constants check_t1_dyadic(const DiagonalForm& df, int level_lo, int level_hi) {
  const GridSpec& g = df.spec;
  g.require_valid();
  if (level_lo < 0 || level_hi >= g.levels || level_lo > level_hi)
    throw std::invalid_argument("check_t1_dyadic: bad level range");
  T1Constants out;
  const double h = g.mesh();
  for (int j = level_lo; j <= level_hi; ++j) {
    const std::int64_t cells = std::int64_t(1) << (g.levels - j);
    for (std::int64_t k = 0; k < g.side(j); ++k) {
      const DyadicCube q{j, k};
      GridFunction ind = embed_on_grid(g, q, std::vector<double>(size_t(cells), 1.0));
      const GridFunction fwd = apply_dyadic(df, ind, false);
      const GridFunction adj = apply_dyadic(df, ind, true);
      double acc = 0.0;
      const std::int64_t base = k * cells;
      for (std::int64_t i = 0; i < cells; ++i)
        acc += std::fabs(fwd[base + i]) + std::fabs(adj[base + i]);
      const double val = acc * h / q.length();
      out.per_cube.push_back(val);
      out.cubes.push_back(q);
      out.sup = std::max(out.sup, val);
    }
  }
  return out;
}

/// Full testing report: normalization, size and image constants for T, the
/// image constants of the perfect dyadic part, and the per-cube reduction
/// chain that bounds the dyadic image constant by
///   (operator image mean)^{1/q'} + ||smooth+coarse|| * (size mean)^{1/p}.
struct TbReport {
  double p = 2.0, q = 2.0;
  bool exponent_constraint_ok = false;  // 1/p + 1/q <= 1, equivalently q' <= p
  double norm_surrogate_fwd = 0.0;      // power-iteration estimate for smooth+coarse
  double norm_surrogate_adj = 0.0;
  std::vector<DyadicCube> cubes;
  std::vector<double> normalization;   // residuals
  std::vector<double> size_constants;  // (3.8)-type
  std::vector<double> image_T;         // forward + adjoint normalized means
  std::vector<double> image_dyadic;
  std::vector<bool> reduction_ok;  // per-cube chain inequality
  double sup_normalization = 0.0;
  double sup_size = 0.0;
  double sup_image_T = 0.0;
  double sup_image_dyadic = 0.0;
  bool reduction_all_ok = true;

  bool all_pass(double C) const {
    return sup_normalization <= 1e-12 && sup_size <= C && sup_image_T <= C && reduction_all_ok;
  }
};

inline TbReport run_tb_report(const BSystem& bs, const ApplyFn& op_T, const ApplyFn& op_T_adj,
                              const SplitForm& sf, const OpNormOptions& norm_opts = {},
                              double reduction_slack = 1e-7) {
  validate_bsystem(bs);
  if (!(bs.spec == sf.spec)) throw std::invalid_argument("run_tb_report: grid mismatch");
  TbReport rep;
  rep.p = bs.p;
  rep.q = bs.q;
  rep.exponent_constraint_ok = bs.exponent_constraint_ok();

  ApplyPlan smooth_plan;
  smooth_plan.split_form = &sf;
  smooth_plan.include_dyadic = false;
  ApplyPlan smooth_adj = smooth_plan;
  smooth_adj.adjoint = true;
  const auto smooth_fwd_fn = [&](const GridFunction& f) { return apply_nsform(smooth_plan, f); };
  const auto smooth_adj_fn = [&](const GridFunction& f) { return apply_nsform(smooth_adj, f); };
  rep.norm_surrogate_fwd = estimate_opnorm(smooth_fwd_fn, smooth_adj_fn, bs.spec, norm_opts);
  rep.norm_surrogate_adj = rep.norm_surrogate_fwd;  // same spectrum for the transpose

  rep.normalization = check_normalization(bs);
  rep.size_constants = check_size(bs);
  const ImageConstants img_T = check_image(bs, op_T, op_T_adj);
  const auto dyadic_fwd = [&](const GridFunction& f) { return apply_dyadic(sf.dyadic, f, false); };
  const auto dyadic_adj = [&](const GridFunction& f) { return apply_dyadic(sf.dyadic, f, true); };
  const ImageConstants img_D = check_image(bs, dyadic_fwd, dyadic_adj);

  const double qp = dual_exponent(bs.q);
  const double pp = dual_exponent(bs.p);
  const double h = bs.spec.mesh();
  for (size_t i = 0; i < bs.cubes.size(); ++i) {
    const auto& e = bs.cubes[i];
    rep.cubes.push_back(e.cube);
    rep.image_T.push_back(img_T.forward[i] + img_T.adjointc[i]);
    rep.image_dyadic.push_back(img_D.forward[i] + img_D.adjointc[i]);
    // local p-mean / q-mean of the testing functions themselves
    const double qlen = e.cube.length();
    auto mean_pow = [&](const std::vector<double>& v, double expo) {
      if (std::isinf(expo)) {
        double s = 0.0;
        for (double x : v) s = std::max(s, std::fabs(x));
        return s;
      }
      double s = 0.0;
      for (double x : v) s += std::pow(std::fabs(x), expo);
      return std::pow(s * h / qlen, 1.0 / expo);
    };
    const double b1_pmean = mean_pow(e.b1, bs.p);
    const double b2_qmean = mean_pow(e.b2, bs.q);
    const double lhs_fwd = std::pow(img_D.forward[i], 1.0 / qp);
    const double rhs_fwd =
        std::pow(img_T.forward[i], 1.0 / qp) + rep.norm_surrogate_fwd * b1_pmean;
    const double lhs_adj = std::pow(img_D.adjointc[i], 1.0 / pp);
    const double rhs_adj =
        std::pow(img_T.adjointc[i], 1.0 / pp) + rep.norm_surrogate_adj * b2_qmean;
    const bool ok = lhs_fwd <= rhs_fwd * (1.0 + reduction_slack) + reduction_slack &&
                    lhs_adj <= rhs_adj * (1.0 + reduction_slack) + reduction_slack;
    rep.reduction_ok.push_back(ok);
    rep.reduction_all_ok = rep.reduction_all_ok && ok;
  }
  for (double v : rep.normalization) rep.sup_normalization = std::max(rep.sup_normalization, v);
  for (double v : rep.size_constants) rep.sup_size = std::max(rep.sup_size, v);
  for (double v : rep.image_T) rep.sup_image_T = std::max(rep.sup_image_T, v);
  for (double v : rep.image_dyadic) rep.sup_image_dyadic = std::max(rep.sup_image_dyadic, v);
  return rep;
}

}  // namespace haarbcr
