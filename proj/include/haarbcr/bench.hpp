#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "haarbcr/apply.hpp"
#include "haarbcr/grid.hpp"
#include "haarbcr/kernel.hpp"
#include "haarbcr/nsform.hpp"

namespace haarbcr {

struct BenchRow {
  std::int64_t n = 0;
  std::int64_t band = 0;  // 0 = dense path
  std::string component_set;
  double seconds_per_apply = 0.0;
  double doubling_ratio = 0.0;  // vs the previous size of the same configuration
};

struct BenchOptions {
  std::vector<std::int64_t> sizes;       // N values, increasing powers of two
  std::vector<std::int64_t> bands;       // halfbands for the compressed form
  int reps = 3;
  std::uint64_t seed = 20240901;
  bool include_dense = true;
};

/// Wall-clock per apply for the dense O(N^2) path versus the banded
/// non-standard form across sizes. The banded forms come from the compressed
/// pyramid build so the measurement stays O(N * band) end to end.
template <class KernelFactory>
std::vector<BenchRow> bench_apply(KernelFactory&& make_kernel, const BenchOptions& opts) {
  if (opts.sizes.empty()) throw std::invalid_argument("bench_apply: no sizes");
  for (size_t i = 1; i < opts.sizes.size(); ++i)
    if (opts.sizes[i] <= opts.sizes[i - 1])
      throw std::invalid_argument("bench_apply: sizes must increase");

  std::vector<BenchRow> rows;
  auto time_apply = [&](auto&& fn) {
    double best = 1e300;
    for (int r = 0; r < opts.reps; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  };

  for (std::int64_t n : opts.sizes) {
    int j = 0;
    while ((std::int64_t(2) << j) < n) ++j;
    if ((std::int64_t(2) << j) != n)
      throw std::invalid_argument("bench_apply: sizes must be powers of two");
    const GridSpec grid{2, j + 1};
    const KernelSpec kernel = make_kernel(grid);
    std::mt19937_64 rng(opts.seed ^ std::uint64_t(n));
    std::normal_distribution<double> gauss(0.0, 1.0);
    GridFunction f(grid);
    for (auto& v : f.values) v = gauss(rng);

    if (opts.include_dense) {
      GridFunction sink(grid);
      const double sec = time_apply([&] { sink = apply_dense_matfree(kernel, f); });
      rows.push_back({n, 0, "dense", sec, 0.0});
    }
    for (std::int64_t band : opts.bands) {
      const NonStandardForm nsf = build_nsform_pyramid(kernel, grid, {}, band);
      ApplyPlan plan;
      plan.nsf = &nsf;
      GridFunction sink(grid);
      const double sec = time_apply([&] { sink = apply_nsform(plan, f); });
      rows.push_back({n, band, "nsform", sec, 0.0});
    }
  }

  // doubling ratios against the previous size within the same configuration
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t k = 0; k < i; ++k) {
      if (rows[k].band == rows[i].band && rows[k].component_set == rows[i].component_set &&
          rows[k].n * 2 == rows[i].n) {
        rows[i].doubling_ratio = rows[i].seconds_per_apply / rows[k].seconds_per_apply;
      }
    }
  }
  return rows;
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::ostringstream os;
  os << "N,band,component-set,seconds-per-apply,doubling-ratio\n";
  os.precision(9);
  for (const auto& r : rows)
    os << r.n << "," << r.band << "," << r.component_set << "," << r.seconds_per_apply << ","
       << r.doubling_ratio << "\n";
  return os.str();
}

/// Geometric mean of the per-step doubling ratios of one configuration.
inline double mean_doubling_ratio(const std::vector<BenchRow>& rows, std::int64_t band,
                                  const std::string& component_set) {
  double prod = 1.0;
  int count = 0;
  for (const auto& r : rows) {
    if (r.band == band && r.component_set == component_set && r.doubling_ratio > 0.0) {
      prod *= r.doubling_ratio;
      ++count;
    }
  }
  if (count == 0) throw std::invalid_argument("mean_doubling_ratio: no matching rows");
  return std::pow(prod, 1.0 / double(count));
}

}  // namespace haarbcr
