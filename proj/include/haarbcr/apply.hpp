#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <vector>

#include "haarbcr/grid.hpp"
#include "haarbcr/nsform.hpp"

namespace haarbcr {

/// Dense discretization: matrix entry (p,q) = h * cellavg K(p,q), so that
/// (Tf)_p = sum_q matrix[p][q] f_q matches <g,Tf> under the grid bracket.
struct DenseOperator {
  GridSpec spec;
  std::vector<double> matrix;  // N x N row-major

  double get(std::int64_t p, std::int64_t q) const {
    return matrix[size_t(p * spec.sample_count() + q)];
  }
};

inline DenseOperator build_dense(const KernelSpec& kernel, const GridSpec& grid,
                                 const QuadratureRule& quad = {}, std::int64_t sample_limit = 4096) {
  grid.require_valid();
  const std::int64_t n = grid.sample_count();
  if (n > sample_limit)
    throw std::invalid_argument("build_dense: N exceeds the dense-assembly limit");
  DenseOperator op;
  op.spec = grid;
  op.matrix.resize(size_t(n * n));
  const double h = grid.mesh();
  for (std::int64_t p = 0; p < n; ++p)
    for (std::int64_t q = 0; q < n; ++q)
      op.matrix[size_t(p * n + q)] = h * quad.cell_average(kernel, grid, p, q);
  return op;
}

inline GridFunction apply_dense(const DenseOperator& op, const GridFunction& f,
                                bool transpose = false) {
  if (!(op.spec == f.spec)) throw std::invalid_argument("apply_dense: grid mismatch");
  const std::int64_t n = op.spec.sample_count();
  GridFunction out(op.spec);
  if (!transpose) {
    for (std::int64_t p = 0; p < n; ++p) {
      double acc = 0.0;
      const double* row = &op.matrix[size_t(p * n)];
      for (std::int64_t q = 0; q < n; ++q) acc += row[q] * f[q];
      out[p] = acc;
    }
  } else {
    for (std::int64_t p = 0; p < n; ++p) {
      const double* row = &op.matrix[size_t(p * n)];
      const double fp = f[p];
      for (std::int64_t q = 0; q < n; ++q) out[q] += row[q] * fp;
    }
  }
  return out;
}

/// Matrix-free O(N^2) apply used for large-N timing runs, arithmetically the
/// same dense product without the N^2 storage.
inline GridFunction apply_dense_matfree(const KernelSpec& kernel, const GridFunction& f,
                                        const QuadratureRule& quad = {}) {
  const GridSpec& g = f.spec;
  const std::int64_t n = g.sample_count();
  const double h = g.mesh();
  GridFunction out(g);
  for (std::int64_t p = 0; p < n; ++p) {
    double acc = 0.0;
    for (std::int64_t q = 0; q < n; ++q) acc += quad.cell_average(kernel, g, p, q) * f[q];
    out[p] = h * acc;
  }
  return out;
}

/// Which pieces of the representation participate in an application.
struct ComponentSet {
  bool u = true;       // psi <- psi family (a or alpha)
  bool v = true;       // psi <- phi family (b or beta)
  bool w = true;       // phi <- psi family (c or gamma)
  bool coarse = true;  // phi_0 <- phi_0 block

  static ComponentSet all() { return {}; }
  static ComponentSet none() { return {false, false, false, false}; }
};

/// A prepared application of a non-standard or split form. Exactly one of
/// `nsf` / `split_form` is set. With every component included and no band
/// truncation the application reproduces the dense operator.
struct ApplyPlan {
  const NonStandardForm* nsf = nullptr;
  const SplitForm* split_form = nullptr;
  ComponentSet components;
  bool include_smooth = true;  // split-form switches
  bool include_dyadic = true;
  std::optional<int> band_rmax;
  bool adjoint = false;

  const GridSpec& grid() const {
    if (nsf) return nsf->spec;
    if (split_form) return split_form->spec;
    throw std::logic_error("ApplyPlan: no form attached");
  }
};

namespace detail {

/// Shared engine: per level j accumulate
///   psi-out  = A d_j + B s_j      (matrix families), and
///   phi-out  = C d_j
/// then reconstruct by coarse-to-fine folding: the level-j phi-out joins the
/// running scaling vector before the next refinement, which reproduces
/// sum_j sum_k [u_j[k] psi_jk + v_j[k] phi_jk] exactly in O(N) synthesis work.
struct LevelOutputs {
  std::vector<std::vector<double>> psi_out;  // per level
  std::vector<std::vector<double>> phi_out;  // per level
  std::vector<double> coarse_out;            // extra phi_0 output

  explicit LevelOutputs(const GridSpec& g) {
    psi_out.resize(size_t(g.levels));
    phi_out.resize(size_t(g.levels));
    for (int j = 0; j < g.levels; ++j) {
      psi_out[size_t(j)].assign(size_t(g.side(j)), 0.0);
      phi_out[size_t(j)].assign(size_t(g.side(j)), 0.0);
    }
    coarse_out.assign(size_t(g.unit_cells), 0.0);
  }
};

inline GridFunction fold_reconstruct(const GridSpec& g, LevelOutputs& out) {
  std::vector<double> run = out.coarse_out;
  for (std::int64_t m = 0; m < g.unit_cells; ++m) run[size_t(m)] += out.phi_out[0][size_t(m)];
  for (int j = 0; j < g.levels; ++j) {
    const auto& d = out.psi_out[size_t(j)];
    std::vector<double> next(size_t(g.side(j + 1)));
    for (std::int64_t k = 0; k < g.side(j); ++k) {
      next[size_t(2 * k)] = (run[size_t(k)] + d[size_t(k)]) * kInvSqrt2;
      next[size_t(2 * k + 1)] = (run[size_t(k)] - d[size_t(k)]) * kInvSqrt2;
    }
    run.swap(next);
    if (j + 1 < g.levels)
      for (size_t i = 0; i < run.size(); ++i) run[i] += out.phi_out[size_t(j) + 1][i];
  }
  GridFunction y(g);
  const double scale = std::ldexp(1.0, g.levels / 2) * ((g.levels & 1) ? std::sqrt(2.0) : 1.0);
  for (size_t p = 0; p < run.size(); ++p) y.values[p] = run[p] * scale;
  return y;
}

inline void accumulate_level(const LevelMatrix& m, const std::vector<double>& x,
                             std::vector<double>& y, bool transpose,
                             std::optional<std::int64_t> keep) {
  if (!keep || *keep >= m.halfband()) {
    if (transpose)
      m.accumulate_mul_transpose(x, y);
    else
      m.accumulate_mul(x, y);
    return;
  }
  const std::int64_t w = *keep;
  for (std::int64_t k = 0; k < m.side(); ++k) {
    const std::int64_t lo = std::max<std::int64_t>(0, k - w);
    const std::int64_t hi = std::min(m.side(), k + w + 1);
    if (!transpose) {
      double acc = 0.0;
      for (std::int64_t l = lo; l < hi; ++l) acc += m.get(k, l) * x[size_t(l)];
      y[size_t(k)] += acc;
    } else {
      const double xk = x[size_t(k)];
      for (std::int64_t l = lo; l < hi; ++l) y[size_t(l)] += m.get(k, l) * xk;
    }
  }
}

}  // namespace detail

inline GridFunction apply_dyadic(const DiagonalForm& df, const GridFunction& f,
                                 bool adjoint_apply = false) {
  const GridSpec& g = df.spec;
  if (!(g == f.spec)) throw std::invalid_argument("apply_dyadic: grid mismatch");
  ScalingPyramid pyr;
  WaveletCoeffs wc;
  haar_cascade(f, pyr, wc);
  detail::LevelOutputs out(g);
  // adjoint swaps the roles of the b and c families
  const auto& bv = adjoint_apply ? df.cvec : df.bvec;
  const auto& cv = adjoint_apply ? df.bvec : df.cvec;
  for (int j = 0; j < g.levels; ++j) {
    const auto& d = wc.detail[size_t(j)];
    const auto& s = pyr.s[size_t(j)];
    auto& po = out.psi_out[size_t(j)];
    auto& fo = out.phi_out[size_t(j)];
    for (std::int64_t k = 0; k < g.side(j); ++k) {
      po[size_t(k)] = df.avec[size_t(j)][size_t(k)] * d[size_t(k)] +
                      bv[size_t(j)][size_t(k)] * s[size_t(k)];
      fo[size_t(k)] = cv[size_t(j)][size_t(k)] * d[size_t(k)];
    }
  }
  return detail::fold_reconstruct(g, out);
}

inline GridFunction apply_nsform(const ApplyPlan& plan, const GridFunction& f) {
  const GridSpec& g = plan.grid();
  if (!(g == f.spec)) throw std::invalid_argument("apply_nsform: grid mismatch");
  ScalingPyramid pyr;
  WaveletCoeffs wc;
  haar_cascade(f, pyr, wc);

  std::optional<std::int64_t> keep;
  if (plan.band_rmax) {
    if (*plan.band_rmax < 1) throw std::invalid_argument("apply_nsform: Rmax >= 1 required");
    keep = (std::int64_t(1) << *plan.band_rmax) - 1;
  }

  detail::LevelOutputs out(g);
  const bool adj = plan.adjoint;
  auto run_matrices = [&](const LevelMatrix& A, const LevelMatrix& B, const LevelMatrix& C, int j,
                          const ComponentSet& cs) {
    const auto& d = wc.detail[size_t(j)];
    const auto& s = pyr.s[size_t(j)];
    auto& po = out.psi_out[size_t(j)];
    auto& fo = out.phi_out[size_t(j)];
    // adjoint: A^T on details; the b family becomes a phi-out of C^T type and
    // the c family a psi-out of B^T type
    if (cs.u) detail::accumulate_level(A, d, po, adj, keep);
    if (!adj) {
      if (cs.v) detail::accumulate_level(B, s, po, false, keep);
      if (cs.w) detail::accumulate_level(C, d, fo, false, keep);
    } else {
      if (cs.w) detail::accumulate_level(C, s, po, true, keep);
      if (cs.v) detail::accumulate_level(B, d, fo, true, keep);
    }
  };

  const LevelMatrix* coarse = nullptr;
  if (plan.nsf) {
    for (int j = 0; j < g.levels; ++j)
      run_matrices(plan.nsf->A[size_t(j)], plan.nsf->B[size_t(j)], plan.nsf->C[size_t(j)], j,
                   plan.components);
    if (plan.components.coarse) coarse = &plan.nsf->coarse;
  } else {
    const SplitForm& sf = *plan.split_form;
    if (plan.include_smooth)
      for (int j = 0; j < g.levels; ++j)
        run_matrices(sf.smooth.alpha[size_t(j)], sf.smooth.beta[size_t(j)],
                     sf.smooth.gamma[size_t(j)], j, plan.components);
    if (plan.include_dyadic) {
      const auto& bv = adj ? sf.dyadic.cvec : sf.dyadic.bvec;
      const auto& cv = adj ? sf.dyadic.bvec : sf.dyadic.cvec;
      for (int j = 0; j < g.levels; ++j) {
        const auto& d = wc.detail[size_t(j)];
        const auto& s = pyr.s[size_t(j)];
        for (std::int64_t k = 0; k < g.side(j); ++k) {
          out.psi_out[size_t(j)][size_t(k)] += sf.dyadic.avec[size_t(j)][size_t(k)] * d[size_t(k)] +
                                               bv[size_t(j)][size_t(k)] * s[size_t(k)];
          out.phi_out[size_t(j)][size_t(k)] += cv[size_t(j)][size_t(k)] * d[size_t(k)];
        }
      }
    }
    if (plan.components.coarse) coarse = &sf.coarse;
  }
  if (coarse) {
    if (!adj)
      coarse->accumulate_mul(pyr.s[0], out.coarse_out);
    else
      coarse->accumulate_mul_transpose(pyr.s[0], out.coarse_out);
  }
  return detail::fold_reconstruct(g, out);
}

/// Apply only the smooth (modified) families of a form.
inline GridFunction apply_modified(const ModifiedForm& mf, const GridFunction& f,
                                   bool adjoint_apply = false,
                                   std::optional<int> band_rmax = std::nullopt) {
  SplitForm view;
  view.spec = mf.spec;
  view.smooth = mf;  // copies; hot callers use ApplyPlan on a SplitForm instead
  view.dyadic.spec = mf.spec;
  for (int j = 0; j < mf.spec.levels; ++j) {
    view.dyadic.avec.emplace_back(size_t(mf.spec.side(j)), 0.0);
    view.dyadic.bvec.emplace_back(size_t(mf.spec.side(j)), 0.0);
    view.dyadic.cvec.emplace_back(size_t(mf.spec.side(j)), 0.0);
  }
  view.coarse = LevelMatrix::dense(mf.spec.unit_cells);
  ApplyPlan plan;
  plan.split_form = &view;
  plan.include_dyadic = false;
  plan.components.coarse = false;
  plan.band_rmax = band_rmax;
  plan.adjoint = adjoint_apply;
  return apply_nsform(plan, f);
}

// ---- operator norm estimation ----

using ApplyFn = std::function<GridFunction(const GridFunction&)>;

struct OpNormOptions {
  int max_iters = 200;
  double rel_tol = 1e-9;
  std::uint64_t seed = 20240901;
};

/// Power iteration on adjoint(op(.)) under the grid inner product; returns the
/// square root of the dominant eigenvalue estimate. Deterministic given the
/// seed. Returns 0 for the (re-seeded) identically-zero operator.
inline double estimate_opnorm(const ApplyFn& op, const ApplyFn& op_adjoint, const GridSpec& grid,
                              const OpNormOptions& opts = {}) {
  if (opts.max_iters < 1) throw std::invalid_argument("estimate_opnorm: iters >= 1 required");
  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int attempt = 0; attempt < 3; ++attempt) {
    GridFunction v(grid);
    for (auto& x : v.values) x = gauss(rng);
    double vn = norm_l2(v);
    if (vn == 0.0) continue;
    for (auto& x : v.values) x /= vn;
    double lambda = 0.0;
    bool dead = false;
    for (int it = 0; it < opts.max_iters; ++it) {
      GridFunction w = op_adjoint(op(v));
      const double wn = norm_l2(w);
      if (wn == 0.0) {
        dead = true;
        break;
      }
      const double next = inner(w, v);  // Rayleigh quotient, ||v|| = 1
      for (size_t i = 0; i < w.values.size(); ++i) v.values[i] = w.values[i] / wn;
      if (it > 0 && std::fabs(next - lambda) <= opts.rel_tol * std::fabs(next)) {
        lambda = next;
        break;
      }
      lambda = next;
    }
    if (!dead) return std::sqrt(std::max(lambda, 0.0));
  }
  return 0.0;
}

}  // namespace haarbcr
