#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "haarbcr/grid.hpp"
#include "haarbcr/kernel.hpp"
#include "haarbcr/level_matrix.hpp"

namespace haarbcr {

/// Quadrature for the finest-level cell averages: midpoint by default, with
/// optional refine x refine composite midpoint on near-diagonal cell pairs
/// (|p - q| <= near_cutoff). Both builders share the rule so they discretize
/// the same operator.
struct QuadratureRule {
  int refine = 1;
  std::int64_t near_cutoff = 0;

  double cell_average(const KernelSpec& k, const GridSpec& g, std::int64_t p, std::int64_t q) const {
    const double h = g.mesh();
    if (refine <= 1 || std::llabs(p - q) > near_cutoff)
      return k((double(p) + 0.5) * h, (double(q) + 0.5) * h);
    const double sub = h / double(refine);
    double acc = 0.0;
    for (int i = 0; i < refine; ++i)
      for (int j = 0; j < refine; ++j)
        acc += k(double(p) * h + (i + 0.5) * sub, double(q) * h + (j + 0.5) * sub);
    return acc / double(refine * refine);
  }
};

/// The Haar non-standard form of the discretized operator: per level j the
/// families a = <psi, T psi>, b = <psi, T phi>, c = <phi, T psi>, plus the
/// retained coarse block <phi_0, T phi_0>.
struct NonStandardForm {
  GridSpec spec;
  std::vector<LevelMatrix> A, B, C;  // level j entries have side M*2^j
  LevelMatrix coarse;                // M x M

  int levels() const { return spec.levels; }
};

/// The modified families: alpha with zero diagonal, beta with rows summing to
/// zero, gamma with columns summing to zero.
struct ModifiedForm {
  GridSpec spec;
  std::vector<LevelMatrix> alpha, beta, gamma;

  int levels() const { return spec.levels; }
};

/// The residual one-index families; the operator they define is perfect dyadic.
struct DiagonalForm {
  GridSpec spec;
  std::vector<std::vector<double>> avec, bvec, cvec;  // avec[j][k] etc.
};

/// smooth + dyadic + coarse reconstitutes the full non-standard form exactly.
struct SplitForm {
  GridSpec spec;
  ModifiedForm smooth;
  DiagonalForm dyadic;
  LevelMatrix coarse;
};

namespace detail {

inline std::int64_t requested_halfband(std::int64_t side, std::optional<std::int64_t> hb) {
  return hb ? std::min(*hb, side - 1) : side - 1;
}

}  // namespace detail

/// BCR pyramid build. Starting from the finest phi-phi matrix
/// s^J[p][q] = h * cellavg K, each coarser level comes from the two-scale
/// butterfly: with children ee = s[2k][2l], eo = s[2k][2l+1], oe = s[2k+1][2l],
/// oo = s[2k+1][2l+1],
///   a = (ee - eo - oe + oo)/2, b = (ee + eo - oe - oo)/2,
///   c = (ee - eo + oe - oo)/2, s = (ee + eo + oe + oo)/2.
/// With `halfband` set, every level (including the intermediate phi-phi
/// matrices) is truncated to the band and out-of-band children read as zero;
/// this is the classical compressed build, exact when the finest table is
/// already banded and otherwise accurate to the dropped tails.
inline NonStandardForm build_nsform_pyramid(const KernelSpec& kernel, const GridSpec& grid,
                                            const QuadratureRule& quad = {},
                                            std::optional<std::int64_t> halfband = std::nullopt) {
  grid.require_valid();
  const std::int64_t n = grid.sample_count();
  const double h = grid.mesh();
  NonStandardForm out;
  out.spec = grid;
  out.A.resize(size_t(grid.levels));
  out.B.resize(size_t(grid.levels));
  out.C.resize(size_t(grid.levels));

  // intermediate phi-phi band needs one doubling of slack so that in-band
  // outputs see all four children when the form itself is exact-banded
  const std::int64_t s_hb = halfband ? std::min(2 * *halfband + 1, n - 1) : n - 1;
  LevelMatrix s = LevelMatrix::banded(n, s_hb);
  for (std::int64_t p = 0; p < n; ++p)
    for (std::int64_t q = s.col_begin(p); q < s.col_end(p); ++q)
      s.at(p, q) = h * quad.cell_average(kernel, grid, p, q);

  for (int j = grid.levels - 1; j >= 0; --j) {
    const std::int64_t side = grid.side(j);
    const std::int64_t hb = detail::requested_halfband(side, halfband);
    LevelMatrix A = LevelMatrix::banded(side, hb);
    LevelMatrix B = LevelMatrix::banded(side, hb);
    LevelMatrix C = LevelMatrix::banded(side, hb);
    const std::int64_t shb = halfband ? std::min(2 * *halfband + 1, side - 1) : side - 1;
    LevelMatrix sj = LevelMatrix::banded(side, shb);
    for (std::int64_t k = 0; k < side; ++k) {
      for (std::int64_t l = sj.col_begin(k); l < sj.col_end(k); ++l) {
        const double ee = s.get(2 * k, 2 * l), eo = s.get(2 * k, 2 * l + 1);
        const double oe = s.get(2 * k + 1, 2 * l), oo = s.get(2 * k + 1, 2 * l + 1);
        if (A.in_band(k, l)) {
          A.at(k, l) = 0.5 * (ee - eo - oe + oo);
          B.at(k, l) = 0.5 * (ee + eo - oe - oo);
          C.at(k, l) = 0.5 * (ee - eo + oe - oo);
        }
        sj.at(k, l) = 0.5 * (ee + eo + oe + oo);
      }
    }
    out.A[size_t(j)] = std::move(A);
    out.B[size_t(j)] = std::move(B);
    out.C[size_t(j)] = std::move(C);
    s = std::move(sj);
  }
  out.coarse = s.truncated(grid.unit_cells - 1);  // dense M x M
  return out;
}

/// Oracle build: assembles the dense discretized matrix and computes every
/// coefficient by explicit inner products against pointwise-sampled Haar
/// functions. Independent of the butterfly cascade.
inline NonStandardForm build_nsform_direct(const KernelSpec& kernel, const GridSpec& grid,
                                           const QuadratureRule& quad = {},
                                           std::int64_t sample_limit = 4096) {
  grid.require_valid();
  const std::int64_t n = grid.sample_count();
  if (n > sample_limit)
    throw std::invalid_argument("build_nsform_direct: N exceeds the dense-assembly limit");
  const double h = grid.mesh();

  std::vector<double> dense(size_t(n * n));
  for (std::int64_t p = 0; p < n; ++p)
    for (std::int64_t q = 0; q < n; ++q)
      dense[size_t(p * n + q)] = h * quad.cell_average(kernel, grid, p, q);

  auto matvec = [&](const std::vector<double>& x, std::vector<double>& y) {
    for (std::int64_t p = 0; p < n; ++p) {
      double acc = 0.0;
      const double* row = &dense[size_t(p * n)];
      for (std::int64_t q = 0; q < n; ++q) acc += row[q] * x[size_t(q)];
      y[size_t(p)] = acc;
    }
  };
  auto dot = [&](const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::int64_t p = 0; p < n; ++p) acc += x[size_t(p)] * y[size_t(p)];
    return h * acc;
  };
  auto sample_vec = [&](int j, std::int64_t k, bool wavelet) {
    std::vector<double> v(size_t(n));
    for (std::int64_t p = 0; p < n; ++p) {
      const double x = (double(p) + 0.5) * h;
      v[size_t(p)] = wavelet ? eval_psi(j, k, x) : eval_phi(j, k, x);
    }
    return v;
  };

  NonStandardForm out;
  out.spec = grid;
  out.A.resize(size_t(grid.levels));
  out.B.resize(size_t(grid.levels));
  out.C.resize(size_t(grid.levels));
  std::vector<double> tpsi(size_t(n)), tphi(size_t(n));
  for (int j = 0; j < grid.levels; ++j) {
    const std::int64_t side = grid.side(j);
    std::vector<std::vector<double>> psi(size_t(side)), phi(size_t(side));
    for (std::int64_t k = 0; k < side; ++k) {
      psi[size_t(k)] = sample_vec(j, k, true);
      phi[size_t(k)] = sample_vec(j, k, false);
    }
    LevelMatrix A = LevelMatrix::dense(side);
    LevelMatrix B = LevelMatrix::dense(side);
    LevelMatrix C = LevelMatrix::dense(side);
    for (std::int64_t l = 0; l < side; ++l) {
      matvec(psi[size_t(l)], tpsi);
      matvec(phi[size_t(l)], tphi);
      for (std::int64_t k = 0; k < side; ++k) {
        A.at(k, l) = dot(psi[size_t(k)], tpsi);
        C.at(k, l) = dot(phi[size_t(k)], tpsi);
        B.at(k, l) = dot(psi[size_t(k)], tphi);
      }
    }
    out.A[size_t(j)] = std::move(A);
    out.B[size_t(j)] = std::move(B);
    out.C[size_t(j)] = std::move(C);
  }
  out.coarse = LevelMatrix::dense(grid.unit_cells);
  for (std::int64_t l = 0; l < grid.unit_cells; ++l) {
    auto v = sample_vec(0, l, false);
    matvec(v, tphi);
    for (std::int64_t k = 0; k < grid.unit_cells; ++k)
      out.coarse.at(k, l) = dot(sample_vec(0, k, false), tphi);
  }
  return out;
}

/// alpha: diagonal zeroed. beta: diagonal becomes minus the off-diagonal row
/// sum. gamma: diagonal becomes minus the off-diagonal column sum. The sums
/// run over indices existing in the finite grid, so the cancellations hold
/// exactly on the domain.
inline ModifiedForm modify(const NonStandardForm& nsf) {
  ModifiedForm mf;
  mf.spec = nsf.spec;
  for (int j = 0; j < nsf.levels(); ++j) {
    LevelMatrix a = nsf.A[size_t(j)];
    LevelMatrix b = nsf.B[size_t(j)];
    LevelMatrix c = nsf.C[size_t(j)];
    for (std::int64_t k = 0; k < a.side(); ++k) {
      a.at(k, k) = 0.0;
      b.at(k, k) = 0.0;
      b.at(k, k) = -b.row_sum(k);
      c.at(k, k) = 0.0;
      c.at(k, k) = -c.col_sum(k);
    }
    mf.alpha.push_back(std::move(a));
    mf.beta.push_back(std::move(b));
    mf.gamma.push_back(std::move(c));
  }
  return mf;
}

inline SplitForm split(const NonStandardForm& nsf) {
  SplitForm sf;
  sf.spec = nsf.spec;
  sf.smooth = modify(nsf);
  sf.dyadic.spec = nsf.spec;
  for (int j = 0; j < nsf.levels(); ++j) {
    const auto& A = nsf.A[size_t(j)];
    const auto& B = nsf.B[size_t(j)];
    const auto& C = nsf.C[size_t(j)];
    std::vector<double> av(size_t(A.side())), bv(size_t(A.side())), cv(size_t(A.side()));
    for (std::int64_t k = 0; k < A.side(); ++k) {
      av[size_t(k)] = A.get(k, k);
      bv[size_t(k)] = B.row_sum(k);
      cv[size_t(k)] = C.col_sum(k);
    }
    sf.dyadic.avec.push_back(std::move(av));
    sf.dyadic.bvec.push_back(std::move(bv));
    sf.dyadic.cvec.push_back(std::move(cv));
  }
  sf.coarse = nsf.coarse;
  return sf;
}

/// Keep the shells R <= Rmax: zero every off-diagonal entry with
/// |k - l| >= 2^Rmax.
inline NonStandardForm band_truncate(const NonStandardForm& nsf, int rmax) {
  if (rmax < 1) throw std::invalid_argument("band_truncate: Rmax >= 1 required");
  const std::int64_t keep = (std::int64_t(1) << rmax) - 1;
  NonStandardForm out;
  out.spec = nsf.spec;
  for (int j = 0; j < nsf.levels(); ++j) {
    out.A.push_back(nsf.A[size_t(j)].truncated(keep));
    out.B.push_back(nsf.B[size_t(j)].truncated(keep));
    out.C.push_back(nsf.C[size_t(j)].truncated(keep));
  }
  out.coarse = nsf.coarse;
  return out;
}

/// Same truncation for the modified families, re-balancing the beta and gamma
/// diagonals so the row/column cancellations survive the truncation.
inline ModifiedForm band_truncate(const ModifiedForm& mf, int rmax) {
  if (rmax < 1) throw std::invalid_argument("band_truncate: Rmax >= 1 required");
  const std::int64_t keep = (std::int64_t(1) << rmax) - 1;
  ModifiedForm out;
  out.spec = mf.spec;
  for (int j = 0; j < mf.levels(); ++j) {
    LevelMatrix a = mf.alpha[size_t(j)].truncated(keep);
    LevelMatrix b = mf.beta[size_t(j)].truncated(keep);
    LevelMatrix c = mf.gamma[size_t(j)].truncated(keep);
    for (std::int64_t k = 0; k < b.side(); ++k) {
      b.at(k, k) = 0.0;
      b.at(k, k) = -b.row_sum(k);
      c.at(k, k) = 0.0;
      c.at(k, k) = -c.col_sum(k);
    }
    out.alpha.push_back(std::move(a));
    out.beta.push_back(std::move(b));
    out.gamma.push_back(std::move(c));
  }
  return out;
}

/// Adjoint for the bilinear bracket: transpose each level and swap the b / c
/// roles; the coarse block transposes.
inline NonStandardForm adjoint(const NonStandardForm& nsf) {
  NonStandardForm out;
  out.spec = nsf.spec;
  for (int j = 0; j < nsf.levels(); ++j) {
    out.A.push_back(nsf.A[size_t(j)].transposed());
    out.B.push_back(nsf.C[size_t(j)].transposed());
    out.C.push_back(nsf.B[size_t(j)].transposed());
  }
  out.coarse = nsf.coarse.transposed();
  return out;
}

inline ModifiedForm adjoint(const ModifiedForm& mf) {
  ModifiedForm out;
  out.spec = mf.spec;
  for (int j = 0; j < mf.levels(); ++j) {
    out.alpha.push_back(mf.alpha[size_t(j)].transposed());
    out.beta.push_back(mf.gamma[size_t(j)].transposed());
    out.gamma.push_back(mf.beta[size_t(j)].transposed());
  }
  return out;
}

inline DiagonalForm adjoint(const DiagonalForm& df) {
  DiagonalForm out;
  out.spec = df.spec;
  out.avec = df.avec;
  out.bvec = df.cvec;
  out.cvec = df.bvec;
  return out;
}

inline SplitForm adjoint(const SplitForm& sf) {
  SplitForm out;
  out.spec = sf.spec;
  out.smooth = adjoint(sf.smooth);
  out.dyadic = adjoint(sf.dyadic);
  out.coarse = sf.coarse.transposed();
  return out;
}

}  // namespace haarbcr
