#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "haarbcr/apply.hpp"
#include "haarbcr/grid.hpp"
#include "haarbcr/nsform.hpp"

namespace haarbcr {

enum class Family { a, b, c, abc };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::a: return "a";
    case Family::b: return "b";
    case Family::c: return "c";
    default: return "abc";
  }
}

/// One dyadic interaction shell: the off-diagonal entries of gamma with
/// 2^{R-1} <= |k-l| < 2^R, plus a per-column compensating diagonal so each
/// shell is individually cancellative. Shells telescope back to gamma.
struct ShellCoeffs {
  int R = 1;
  GridSpec spec;
  std::vector<LevelMatrix> gamma;  // per level
};

/// Number of shells needed to cover a form: ceil(log2(max side)).
inline int shell_count(const GridSpec& g) {
  const std::int64_t side = g.side(g.levels - 1);
  int r = 0;
  while ((std::int64_t(1) << r) < side) ++r;
  return r;
}

inline std::vector<ShellCoeffs> shell_decompose(const ModifiedForm& mf,
                                                Family fam = Family::c) {
  if (fam == Family::abc) throw std::invalid_argument("shell_decompose: pick one family");
  const auto& mats = fam == Family::a ? mf.alpha : (fam == Family::b ? mf.beta : mf.gamma);
  const int rmax = shell_count(mf.spec);
  std::vector<ShellCoeffs> shells;
  shells.reserve(size_t(rmax));
  for (int R = 1; R <= rmax; ++R) {
    ShellCoeffs sc;
    sc.R = R;
    sc.spec = mf.spec;
    const std::int64_t dlo = std::int64_t(1) << (R - 1);
    const std::int64_t dhi = std::int64_t(1) << R;
    for (const auto& m : mats) {
      LevelMatrix g = LevelMatrix::banded(m.side(), std::min(dhi - 1, m.side() - 1));
      std::vector<double> colsum(size_t(m.side()), 0.0);
      for (std::int64_t k = 0; k < m.side(); ++k) {
        for (std::int64_t l = m.col_begin(k); l < m.col_end(k); ++l) {
          const std::int64_t d = std::llabs(k - l);
          if (d >= dlo && d < dhi) {
            g.at(k, l) = m.get(k, l);
            colsum[size_t(l)] += m.get(k, l);
          }
        }
      }
      for (std::int64_t l = 0; l < m.side(); ++l) g.at(l, l) = -colsum[size_t(l)];
      sc.gamma.push_back(std::move(g));
    }
    shells.push_back(std::move(sc));
  }
  return shells;
}

/// Gamma(R) = sup over levels and k of the absolute row + column sums of the
/// shell matrix, compensating diagonals included. Also carries the measured
/// operator norm once wr_norm_scan fills it.
struct BlockStats {
  int R = 0;
  double gamma_sup = 0.0;
  double norm_estimate = -1.0;  // < 0 until measured
  double schur_A = -1.0;        // stored on the R = 0 entry by convention
};

inline double shell_gamma_sup(const ShellCoeffs& sc) {
  double sup = 0.0;
  for (const auto& g : sc.gamma)
    for (std::int64_t k = 0; k < g.side(); ++k)
      sup = std::max(sup, g.abs_row_sum(k) + g.abs_col_sum(k));
  return sup;
}

inline std::vector<BlockStats> compute_gamma_R(const std::vector<ShellCoeffs>& shells) {
  std::vector<BlockStats> out;
  out.reserve(shells.size());
  for (const auto& sc : shells) out.push_back({sc.R, shell_gamma_sup(sc), -1.0, -1.0});
  return out;
}

/// A = sup_{j,k} { sum_l |alpha^j_{k,l}| + |alpha^j_{l,k}| }.
inline double compute_schur_A(const ModifiedForm& mf) {
  double sup = 0.0;
  for (const auto& a : mf.alpha)
    for (std::int64_t k = 0; k < a.side(); ++k)
      sup = std::max(sup, a.abs_row_sum(k) + a.abs_col_sum(k));
  return sup;
}

/// Apply the shell operator W_R: phi-level outputs from the shell matrices
/// acting on detail coefficients (adjoint: psi outputs from transposes acting
/// on scaling coefficients).
inline GridFunction apply_shell(const ShellCoeffs& sc, const GridFunction& f,
                                bool adjoint_apply = false) {
  const GridSpec& g = sc.spec;
  if (!(g == f.spec)) throw std::invalid_argument("apply_shell: grid mismatch");
  ScalingPyramid pyr;
  WaveletCoeffs wc;
  haar_cascade(f, pyr, wc);
  detail::LevelOutputs out(g);
  for (int j = 0; j < g.levels; ++j) {
    if (!adjoint_apply)
      sc.gamma[size_t(j)].accumulate_mul(wc.detail[size_t(j)], out.phi_out[size_t(j)]);
    else
      sc.gamma[size_t(j)].accumulate_mul_transpose(pyr.s[size_t(j)], out.psi_out[size_t(j)]);
  }
  return detail::fold_reconstruct(g, out);
}

/// Fill normEstimate for each shell via power iteration; reports the measured
/// L2 -> L2 norm of W_R.
inline void wr_norm_scan(std::vector<BlockStats>& stats, const std::vector<ShellCoeffs>& shells,
                         const OpNormOptions& opts = {}) {
  if (stats.size() != shells.size()) throw std::invalid_argument("wr_norm_scan: size mismatch");
  for (size_t i = 0; i < shells.size(); ++i) {
    const ShellCoeffs& sc = shells[i];
    const auto op = [&sc](const GridFunction& f) { return apply_shell(sc, f, false); };
    const auto opT = [&sc](const GridFunction& f) { return apply_shell(sc, f, true); };
    stats[i].norm_estimate = estimate_opnorm(op, opT, sc.spec, opts);
  }
}

/// Measured coefficient-decay envelope and a log-log power fit against the
/// model C (1 + d)^{-1-s}. For Family::abc the envelope is taken on
/// |a| + |b| + |c| per entry.
struct DecayFit {
  std::vector<double> envelope;  // index = distance d, entry = max over j,k
  int fit_lo = 0, fit_hi = 0;
  double C_hat = 0.0;
  double s_hat = 0.0;
  double rms_log_residual = 0.0;
  double log_variant_slope = 0.0;  // slope of log[env * d * ln^{2+eps}(1+d)]
  bool degenerate = false;         // no positive envelope values in range
  bool power_law_ok = false;       // rms residual below threshold

  static constexpr double kRmsThreshold = 0.12;
  static constexpr double kLogVariantSlopeMax = 0.1;
  bool log_variant_ok() const { return std::fabs(log_variant_slope) <= kLogVariantSlopeMax; }
};

inline DecayFit decay_fit_envelope(const std::vector<double>& envelope, int dlo, int dhi,
                                   double eps = 1.0) {
  if (dlo < 1 || dhi < dlo || dhi >= int(envelope.size()))
    throw std::invalid_argument("decay_fit: empty or out-of-range distance window");
  DecayFit fit;
  fit.envelope = envelope;
  fit.fit_lo = dlo;
  fit.fit_hi = dhi;
  std::vector<double> xs, ys, zs;
  for (int d = dlo; d <= dhi; ++d) {
    const double e = envelope[size_t(d)];
    if (e <= 0.0) continue;
    xs.push_back(std::log1p(double(d)));
    ys.push_back(std::log(e));
    zs.push_back(std::log(e * double(d) * std::pow(std::log1p(double(d)), 2.0 + eps)));
  }
  if (xs.size() < 2) {
    fit.degenerate = true;
    return fit;
  }
  auto lsq = [](const std::vector<double>& x, const std::vector<double>& y, double& slope,
                double& icept) {
    const size_t n = x.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
      sx += x[i];
      sy += y[i];
      sxx += x[i] * x[i];
      sxy += x[i] * y[i];
    }
    const double det = double(n) * sxx - sx * sx;
    slope = (double(n) * sxy - sx * sy) / det;
    icept = (sy - slope * sx) / double(n);
  };
  double slope = 0.0, icept = 0.0;
  lsq(xs, ys, slope, icept);
  fit.s_hat = -slope - 1.0;
  fit.C_hat = std::exp(icept);
  double rss = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (slope * xs[i] + icept);
    rss += r * r;
  }
  fit.rms_log_residual = std::sqrt(rss / double(xs.size()));
  fit.power_law_ok = fit.rms_log_residual <= DecayFit::kRmsThreshold;
  double zslope = 0.0, zicept = 0.0;
  lsq(xs, zs, zslope, zicept);
  fit.log_variant_slope = zslope;
  return fit;
}

inline DecayFit decay_fit(const NonStandardForm& nsf, Family fam, int dlo, int dhi,
                          double eps = 1.0) {
  const std::int64_t maxside = nsf.spec.side(nsf.spec.levels - 1);
  std::vector<double> env(size_t(maxside), 0.0);
  for (int j = 0; j < nsf.levels(); ++j) {
    const auto& A = nsf.A[size_t(j)];
    const auto& B = nsf.B[size_t(j)];
    const auto& C = nsf.C[size_t(j)];
    for (std::int64_t k = 0; k < A.side(); ++k) {
      for (std::int64_t l = A.col_begin(k); l < A.col_end(k); ++l) {
        const std::int64_t d = std::llabs(k - l);
        if (d == 0) continue;
        double v = 0.0;
        switch (fam) {
          case Family::a: v = std::fabs(A.get(k, l)); break;
          case Family::b: v = std::fabs(B.get(k, l)); break;
          case Family::c: v = std::fabs(C.get(k, l)); break;
          case Family::abc:
            v = std::fabs(A.get(k, l)) + std::fabs(B.get(k, l)) + std::fabs(C.get(k, l));
            break;
        }
        env[size_t(d)] = std::max(env[size_t(d)], v);
      }
    }
  }
  return decay_fit_envelope(env, dlo, dhi, eps);
}

/// Decomposition of the U-part image of a dyadic atom supported in the first
/// unit cell: Ua = sum_m a_m with a_m supported in Q_{0,m}, mean zero.
struct AtomDecomposition {
  std::vector<double> cell_norms;  // ||a_m||_2 per unit cell m
  double total = 0.0;              // B = sum of cell norms
};

inline AtomDecomposition atom_decompose_U(const ModifiedForm& mf, const GridFunction& atom,
                                          double mean_tol = 1e-12) {
  const GridSpec& g = mf.spec;
  if (!(g == atom.spec)) throw std::invalid_argument("atom_decompose_U: grid mismatch");
  const std::int64_t cells_per_unit = std::int64_t(1) << g.levels;
  double mean = 0.0;
  for (std::int64_t p = 0; p < g.sample_count(); ++p) {
    if (p >= cells_per_unit && atom[p] != 0.0)
      throw std::invalid_argument("atom_decompose_U: atom must be supported in Q_{0,0}");
    mean += atom[p];
  }
  mean *= g.mesh();
  if (std::fabs(mean) > mean_tol)
    throw std::invalid_argument("atom_decompose_U: atom must have mean zero");

  WaveletCoeffs wc = haar_analysis(atom);
  AtomDecomposition out;
  out.cell_norms.assign(size_t(g.unit_cells), 0.0);
  // a_m = sum_{j} sum_{k: Q_jk in Q_0m} ( sum_l alpha^j_{k,l} <a, psi_jl> ) psi_jk;
  // with orthonormal psi the cell norm is the l2 norm of those coefficients.
  for (int j = 0; j < g.levels; ++j) {
    const auto& al = mf.alpha[size_t(j)];
    const auto& d = wc.detail[size_t(j)];
    const std::int64_t per_unit = std::int64_t(1) << j;
    for (std::int64_t k = 0; k < g.side(j); ++k) {
      double coeff = 0.0;
      for (std::int64_t l = al.col_begin(k); l < std::min(al.col_end(k), per_unit); ++l)
        coeff += al.get(k, l) * d[size_t(l)];
      out.cell_norms[size_t(k / per_unit)] += coeff * coeff;
    }
  }
  for (auto& v : out.cell_norms) {
    v = std::sqrt(v);
    out.total += v;
  }
  return out;
}

/// Reconstruct the full cell decomposition as grid functions (test support;
/// sums back to the U-part image of the atom).
inline std::vector<GridFunction> atom_parts_U(const ModifiedForm& mf, const GridFunction& atom) {
  const GridSpec& g = mf.spec;
  WaveletCoeffs wc = haar_analysis(atom);
  std::vector<GridFunction> parts;
  for (std::int64_t m = 0; m < g.unit_cells; ++m) {
    WaveletCoeffs sel(g);
    for (int j = 0; j < g.levels; ++j) {
      const auto& al = mf.alpha[size_t(j)];
      const std::int64_t per_unit = std::int64_t(1) << j;
      for (std::int64_t k = m * per_unit; k < (m + 1) * per_unit; ++k) {
        double coeff = 0.0;
        for (std::int64_t l = al.col_begin(k); l < std::min(al.col_end(k), per_unit); ++l)
          coeff += al.get(k, l) * wc.detail[size_t(j)][size_t(l)];
        sel.detail[size_t(j)][size_t(k)] = coeff;
      }
    }
    parts.push_back(haar_synthesis(sel));
  }
  return parts;
}

/// The rank-one counterexample of the W-family analysis, realized on cells
/// 0 and 1 (the construction is translated one unit cell to the right so the
/// negative-index cell exists on the finite domain):
///   <g, W f> = (<g, phi_{0,1}> - <g, phi_{0,0}>) <psi_{0,1}, f>.
struct CounterexampleRecord {
  GridFunction image;              // W_1 applied to the generating wavelet
  double value_left = 0.0;         // constant value on [0,1)
  double value_right = 0.0;        // constant value on [1,2)
  double max_abs_elsewhere = 0.0;
  double integral_total = 0.0;       // <image, 1>
  double integral_right_half = 0.0;  // <image, 1 on [1,inf)>
  double sup_left = 0.0;             // sup |image| left of the split point x = 1
  double sup_right = 0.0;
  double cascade_max_err = 0.0;  // deviation of the O(N) shell apply from the exact image
  bool shell_concentrated_r1 = false;
  bool exact = false;
};

inline CounterexampleRecord counterexample_w1(const GridSpec& g) {
  g.require_valid();
  if (g.unit_cells < 2) throw std::invalid_argument("counterexample_w1: need M >= 2");
  ModifiedForm mf;
  mf.spec = g;
  for (int j = 0; j < g.levels; ++j) {
    mf.alpha.push_back(LevelMatrix::dense(g.side(j)));
    mf.beta.push_back(LevelMatrix::dense(g.side(j)));
    mf.gamma.push_back(LevelMatrix::dense(g.side(j)));
  }
  mf.gamma[0].at(0, 1) = -1.0;
  mf.gamma[0].at(1, 1) = 1.0;  // column 1 sums to zero

  auto shells = shell_decompose(mf, Family::c);
  CounterexampleRecord rec;
  double off_r1 = 0.0;
  for (const auto& sc : shells) {
    if (sc.R == 1) continue;
    for (const auto& m : sc.gamma) off_r1 = std::max(off_r1, m.max_abs());
  }
  rec.shell_concentrated_r1 = off_r1 == 0.0;

  GridFunction f = GridFunction::sample(g, [](double x) { return eval_psi(0, 1, x); });
  // rank-one action evaluated by its defining sum: only level 0, column 1
  // contributes, with the detail coefficient computed as an exact cell sum
  // (products of +-1 summed to 2^J, then scaled by h)
  const GridFunction psi01 = f;
  const double d = inner(f, psi01);
  GridFunction img(g);
  const auto& g0 = shells[0].gamma[0];
  for (std::int64_t k = 0; k < g.unit_cells; ++k) {
    const double coeff = g0.get(k, 1) * d;  // phi_{0,k} has unit amplitude
    if (coeff == 0.0) continue;
    const std::int64_t per_unit = std::int64_t(1) << g.levels;
    for (std::int64_t p = k * per_unit; p < (k + 1) * per_unit; ++p) img[p] = coeff;
  }
  rec.image = img;
  const GridFunction cascade = apply_shell(shells[0], f);
  for (std::int64_t p = 0; p < g.sample_count(); ++p)
    rec.cascade_max_err = std::max(rec.cascade_max_err, std::fabs(cascade[p] - img[p]));

  const std::int64_t per_unit = std::int64_t(1) << g.levels;
  rec.value_left = img[0];
  rec.value_right = img[per_unit];
  bool flat = true;
  for (std::int64_t p = 0; p < g.sample_count(); ++p) {
    const double v = img[p];
    if (p < per_unit) {
      if (v != rec.value_left) flat = false;
      rec.sup_left = std::max(rec.sup_left, std::fabs(v));
    } else if (p < 2 * per_unit) {
      if (v != rec.value_right) flat = false;
      rec.sup_right = std::max(rec.sup_right, std::fabs(v));
    } else {
      rec.max_abs_elsewhere = std::max(rec.max_abs_elsewhere, std::fabs(v));
    }
    rec.integral_total += v;
    if (p >= per_unit) rec.integral_right_half += v;
  }
  rec.integral_total *= g.mesh();
  rec.integral_right_half *= g.mesh();
  rec.exact = flat && rec.max_abs_elsewhere == 0.0 && rec.value_left == -1.0 &&
              rec.value_right == 1.0 && rec.shell_concentrated_r1;
  return rec;
}

}  // namespace haarbcr
