#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "haarbcr/grid.hpp"
#include "haarbcr/kernel.hpp"
#include "haarbcr/nsform.hpp"

namespace haarbcr {

/// One flat JSON document; command-line flags override keys of the same name.
/// Every randomized routine draws from the single seed.
struct Config {
  std::string kernel = "truncated-hilbert";
  std::map<std::string, double> kernel_params;  // delta, c, u0..u3, v0..v3, C0, s
  std::string table_path;
  std::int64_t M = 2;
  int J = 8;
  int quad_refine = 1;
  std::int64_t quad_cutoff = 0;
  std::optional<int> band;  // Rmax shells kept by band truncation
  std::uint64_t seed = 20240901;
  double p = 2.0, q = 2.0;
  int threads = 0;  // 0 = implementation default (accepted, single-threaded build)
  std::string out = "haarbcr_out";
  std::string components = "full";  // full | smooth | dyadic | coarse | dense | split
  std::int64_t dense_limit = 2048;
  int opnorm_iters = 200;
  double eps = 1.0;  // log-decay epsilon
  int fit_lo = 2, fit_hi = 64;
  std::vector<std::int64_t> bench_sizes = {1024, 2048, 4096, 8192, 16384};
  std::vector<std::int64_t> bench_bands = {8};
  int bench_reps = 3;
  bool timings = false;  // include wall times in reports (breaks byte determinism)

  // verification tolerances (acceptance defaults)
  double tol_oracle = 1e-12;
  double tol_recon = 1e-10;
  double tol_cancel = 1e-12;
  double tol_support = 1e-10;
  double s_lo = 0.8, s_hi = 1.2;
  double gamma_lo = 0.5, gamma_hi = 1.5;
  double wr_factor = 4.0;
  double atom_slope_max = -1.7;
  double t1_stability = 0.1;

  GridSpec grid() const { return GridSpec{M, J}; }
  QuadratureRule quadrature() const { return QuadratureRule{quad_refine, quad_cutoff}; }

  /// Kernel at an arbitrary grid; mollification width defaults to that grid's mesh.
  KernelSpec make_kernel(const GridSpec& g) const {
    auto params = kernel_params;
    if ((kernel == "truncated-hilbert" || kernel == "truncated-abs") && !params.count("delta"))
      params["delta"] = g.mesh();
    return kernel_registry_get(kernel, params, g.domain_length(), table_path);
  }
  KernelSpec make_kernel() const { return make_kernel(grid()); }
};

namespace detail {

inline const std::vector<std::string>& kernel_param_keys() {
  static const std::vector<std::string> keys = {"delta", "c",  "u0", "u1", "u2", "u3", "v0",
                                                "v1",    "v2", "v3", "C0", "s",  "Creg"};
  return keys;
}

}  // namespace detail

inline void apply_json_overrides(Config& cfg, const nlohmann::ordered_json& doc) {
  using nlohmann::ordered_json;
  for (const auto& [key, val] : doc.items()) {
    if (key == "kernel") cfg.kernel = val.get<std::string>();
    else if (key == "table") cfg.table_path = val.get<std::string>();
    else if (key == "M") cfg.M = val.get<std::int64_t>();
    else if (key == "J") cfg.J = val.get<int>();
    else if (key == "quad_refine") cfg.quad_refine = val.get<int>();
    else if (key == "quad_cutoff") cfg.quad_cutoff = val.get<std::int64_t>();
    else if (key == "band") cfg.band = val.is_null() ? std::optional<int>{} : std::optional<int>{val.get<int>()};
    else if (key == "seed") cfg.seed = val.get<std::uint64_t>();
    else if (key == "p") cfg.p = val.is_string() ? std::numeric_limits<double>::infinity() : val.get<double>();
    else if (key == "q") cfg.q = val.is_string() ? std::numeric_limits<double>::infinity() : val.get<double>();
    else if (key == "threads") cfg.threads = val.get<int>();
    else if (key == "out") cfg.out = val.get<std::string>();
    else if (key == "components") cfg.components = val.get<std::string>();
    else if (key == "dense_limit") cfg.dense_limit = val.get<std::int64_t>();
    else if (key == "opnorm_iters") cfg.opnorm_iters = val.get<int>();
    else if (key == "eps") cfg.eps = val.get<double>();
    else if (key == "fit_lo") cfg.fit_lo = val.get<int>();
    else if (key == "fit_hi") cfg.fit_hi = val.get<int>();
    else if (key == "bench_sizes") cfg.bench_sizes = val.get<std::vector<std::int64_t>>();
    else if (key == "bench_bands") cfg.bench_bands = val.get<std::vector<std::int64_t>>();
    else if (key == "bench_reps") cfg.bench_reps = val.get<int>();
    else if (key == "timings") cfg.timings = val.get<bool>();
    else if (key == "tol_oracle") cfg.tol_oracle = val.get<double>();
    else if (key == "tol_recon") cfg.tol_recon = val.get<double>();
    else if (key == "tol_cancel") cfg.tol_cancel = val.get<double>();
    else if (key == "tol_support") cfg.tol_support = val.get<double>();
    else if (key == "s_lo") cfg.s_lo = val.get<double>();
    else if (key == "s_hi") cfg.s_hi = val.get<double>();
    else if (key == "gamma_lo") cfg.gamma_lo = val.get<double>();
    else if (key == "gamma_hi") cfg.gamma_hi = val.get<double>();
    else if (key == "wr_factor") cfg.wr_factor = val.get<double>();
    else if (key == "atom_slope_max") cfg.atom_slope_max = val.get<double>();
    else if (key == "t1_stability") cfg.t1_stability = val.get<double>();
    else {
      bool known = false;
      for (const auto& pk : detail::kernel_param_keys())
        if (key == pk) {
          cfg.kernel_params[key] = val.get<double>();
          known = true;
          break;
        }
      if (!known) throw std::invalid_argument("config: unknown key '" + key + "'");
    }
  }
}

inline Config load_config(const std::string& path) {
  Config cfg;
  if (!path.empty()) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("config: cannot open " + path);
    auto doc = nlohmann::ordered_json::parse(is, nullptr, true, true);
    apply_json_overrides(cfg, doc);
  }
  if (const char* env = std::getenv("HAARBCR_THREADS"); env && cfg.threads == 0)
    cfg.threads = std::atoi(env);
  return cfg;
}

inline void validate_config(const Config& cfg) {
  if (cfg.M < 1 || cfg.J < 1) throw std::invalid_argument("config: need M >= 1 and J >= 1");
  if (!(cfg.p > 1.0) || !(cfg.q > 1.0))
    throw std::invalid_argument("config: exponents must satisfy 1 < p, q <= inf");
  if (cfg.band && *cfg.band < 1) throw std::invalid_argument("config: band Rmax must be >= 1");
  cfg.grid().require_valid();
}

inline nlohmann::ordered_json config_echo(const Config& cfg) {
  nlohmann::ordered_json j;
  j["kernel"] = cfg.kernel;
  for (const auto& [k, v] : cfg.kernel_params) j[k] = v;
  if (!cfg.table_path.empty()) j["table"] = cfg.table_path;
  j["M"] = cfg.M;
  j["J"] = cfg.J;
  j["quad_refine"] = cfg.quad_refine;
  j["quad_cutoff"] = cfg.quad_cutoff;
  j["band"] = cfg.band ? nlohmann::ordered_json(*cfg.band) : nlohmann::ordered_json(nullptr);
  j["seed"] = cfg.seed;
  j["p"] = std::isinf(cfg.p) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(cfg.p);
  j["q"] = std::isinf(cfg.q) ? nlohmann::ordered_json("inf") : nlohmann::ordered_json(cfg.q);
  j["threads"] = cfg.threads;
  j["components"] = cfg.components;
  j["out"] = cfg.out;
  return j;
}

}  // namespace haarbcr
