#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "haarbcr/grid.hpp"
#include "haarbcr/nsform.hpp"
#include "haarbcr/tb.hpp"

namespace haarbcr {

using ordered_json = nlohmann::ordered_json;

/// FNV-1a 64-bit, used to checksum the raw coefficient payload.
inline std::uint64_t fnv1a(const unsigned char* data, size_t n, std::uint64_t seed = 1469598103934665603ull) {
  std::uint64_t h = seed;
  for (size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[size_t(i)] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

// Container layout: 8-byte magic, u64 LE header length, JSON header bytes,
// then the raw little-endian f64 blocks in the order listed by the header.
inline constexpr char kFormMagic[9] = "HBCRFRM1";

namespace detail {

inline void append_block(std::vector<double>& payload, std::vector<ordered_json>& blocks,
                         const std::string& name, const LevelMatrix& m) {
  blocks.push_back(ordered_json{{"name", name},
                                {"side", m.side()},
                                {"halfband", m.halfband()},
                                {"count", m.storage().size()}});
  payload.insert(payload.end(), m.storage().begin(), m.storage().end());
}

inline void append_block(std::vector<double>& payload, std::vector<ordered_json>& blocks,
                         const std::string& name, const std::vector<double>& v) {
  blocks.push_back(ordered_json{{"name", name}, {"side", v.size()}, {"halfband", 0}, {"count", v.size()}});
  payload.insert(payload.end(), v.begin(), v.end());
}

inline LevelMatrix read_matrix_block(const ordered_json& desc, const double*& cur) {
  const std::int64_t side = desc.at("side").get<std::int64_t>();
  const std::int64_t hb = desc.at("halfband").get<std::int64_t>();
  LevelMatrix m = LevelMatrix::banded(side, hb);
  const size_t count = desc.at("count").get<size_t>();
  if (count != m.storage().size()) throw std::runtime_error("form file: block size mismatch");
  std::copy(cur, cur + count, m.storage().begin());
  cur += count;
  return m;
}

inline std::vector<double> read_vector_block(const ordered_json& desc, const double*& cur) {
  const size_t count = desc.at("count").get<size_t>();
  std::vector<double> v(cur, cur + count);
  cur += count;
  return v;
}

inline void write_container(const std::string& path, ordered_json header,
                            const std::vector<double>& payload, std::string* checksum_out) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  const std::string checksum = hex64(fnv1a(bytes, payload.size() * sizeof(double)));
  header["checksum"] = checksum;
  if (checksum_out) *checksum_out = checksum;
  const std::string htext = header.dump();
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("form file: cannot open " + path + " for writing");
  os.write(kFormMagic, 8);
  const std::uint64_t hlen = htext.size();
  os.write(reinterpret_cast<const char*>(&hlen), 8);
  os.write(htext.data(), std::streamsize(htext.size()));
  os.write(reinterpret_cast<const char*>(payload.data()),
           std::streamsize(payload.size() * sizeof(double)));
  if (!os) throw std::runtime_error("form file: write failed: " + path);
}

inline ordered_json read_container(const std::string& path, std::vector<double>& payload) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("form file: cannot open " + path);
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kFormMagic, 8))
    throw std::runtime_error("form file: bad magic in " + path);
  std::uint64_t hlen = 0;
  is.read(reinterpret_cast<char*>(&hlen), 8);
  std::string htext(hlen, '\0');
  is.read(htext.data(), std::streamsize(hlen));
  if (!is) throw std::runtime_error("form file: truncated header in " + path);
  ordered_json header = ordered_json::parse(htext);
  std::uint64_t total = 0;
  for (const auto& b : header.at("blocks")) total += b.at("count").get<std::uint64_t>();
  payload.resize(total);
  is.read(reinterpret_cast<char*>(payload.data()), std::streamsize(total * sizeof(double)));
  if (!is) throw std::runtime_error("form file: truncated payload in " + path);
  const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
  const std::string checksum = hex64(fnv1a(bytes, payload.size() * sizeof(double)));
  if (checksum != header.at("checksum").get<std::string>())
    throw std::runtime_error("form file: checksum mismatch in " + path);
  return header;
}

inline ordered_json grid_json(const GridSpec& g) {
  return ordered_json{{"M", g.unit_cells}, {"J", g.levels}};
}

inline GridSpec grid_from_json(const ordered_json& j) {
  GridSpec g{j.at("M").get<std::int64_t>(), j.at("J").get<int>()};
  g.require_valid();
  return g;
}

}  // namespace detail

struct FormFileMeta {
  std::string kernel_name;
  std::map<std::string, double> kernel_params;
  QuadratureRule quad;
  std::optional<std::int64_t> halfband;
};

inline ordered_json make_form_header(const std::string& type, const GridSpec& g,
                                     const FormFileMeta& meta) {
  ordered_json params = ordered_json::object();
  for (const auto& [k, v] : meta.kernel_params) params[k] = v;
  ordered_json header{{"format", std::string(kFormMagic, 8)},
                      {"type", type},
                      {"grid", detail::grid_json(g)},
                      {"kernel", meta.kernel_name},
                      {"params", params},
                      {"quadrature", {{"refine", meta.quad.refine}, {"cutoff", meta.quad.near_cutoff}}},
                      {"halfband", meta.halfband ? ordered_json(*meta.halfband) : ordered_json(nullptr)}};
  return header;
}

/// Block order: A_0, B_0, C_0, A_1, ..., coarse.
inline std::string write_nsform(const NonStandardForm& nsf, const FormFileMeta& meta,
                                const std::string& path) {
  std::vector<double> payload;
  std::vector<ordered_json> blocks;
  for (int j = 0; j < nsf.levels(); ++j) {
    detail::append_block(payload, blocks, "A" + std::to_string(j), nsf.A[size_t(j)]);
    detail::append_block(payload, blocks, "B" + std::to_string(j), nsf.B[size_t(j)]);
    detail::append_block(payload, blocks, "C" + std::to_string(j), nsf.C[size_t(j)]);
  }
  detail::append_block(payload, blocks, "coarse", nsf.coarse);
  ordered_json header = make_form_header("nsform", nsf.spec, meta);
  header["blocks"] = blocks;
  std::string checksum;
  detail::write_container(path, std::move(header), payload, &checksum);
  return checksum;
}

inline NonStandardForm read_nsform(const std::string& path) {
  std::vector<double> payload;
  ordered_json header = detail::read_container(path, payload);
  if (header.at("type") != "nsform") throw std::runtime_error("form file: not an nsform file");
  NonStandardForm nsf;
  nsf.spec = detail::grid_from_json(header.at("grid"));
  const double* cur = payload.data();
  const auto& blocks = header.at("blocks");
  size_t bi = 0;
  for (int j = 0; j < nsf.spec.levels; ++j) {
    nsf.A.push_back(detail::read_matrix_block(blocks.at(bi++), cur));
    nsf.B.push_back(detail::read_matrix_block(blocks.at(bi++), cur));
    nsf.C.push_back(detail::read_matrix_block(blocks.at(bi++), cur));
  }
  nsf.coarse = detail::read_matrix_block(blocks.at(bi++), cur);
  return nsf;
}

/// Block order: alpha_0, beta_0, gamma_0, ..., avec_0, bvec_0, cvec_0, ..., coarse.
inline std::string write_splitform(const SplitForm& sf, const FormFileMeta& meta,
                                   const std::string& path) {
  std::vector<double> payload;
  std::vector<ordered_json> blocks;
  for (int j = 0; j < sf.spec.levels; ++j) {
    detail::append_block(payload, blocks, "alpha" + std::to_string(j), sf.smooth.alpha[size_t(j)]);
    detail::append_block(payload, blocks, "beta" + std::to_string(j), sf.smooth.beta[size_t(j)]);
    detail::append_block(payload, blocks, "gamma" + std::to_string(j), sf.smooth.gamma[size_t(j)]);
  }
  for (int j = 0; j < sf.spec.levels; ++j) {
    detail::append_block(payload, blocks, "avec" + std::to_string(j), sf.dyadic.avec[size_t(j)]);
    detail::append_block(payload, blocks, "bvec" + std::to_string(j), sf.dyadic.bvec[size_t(j)]);
    detail::append_block(payload, blocks, "cvec" + std::to_string(j), sf.dyadic.cvec[size_t(j)]);
  }
  detail::append_block(payload, blocks, "coarse", sf.coarse);
  ordered_json header = make_form_header("split", sf.spec, meta);
  header["blocks"] = blocks;
  std::string checksum;
  detail::write_container(path, std::move(header), payload, &checksum);
  return checksum;
}

inline SplitForm read_splitform(const std::string& path) {
  std::vector<double> payload;
  ordered_json header = detail::read_container(path, payload);
  if (header.at("type") != "split") throw std::runtime_error("form file: not a split-form file");
  SplitForm sf;
  sf.spec = detail::grid_from_json(header.at("grid"));
  sf.smooth.spec = sf.spec;
  sf.dyadic.spec = sf.spec;
  const double* cur = payload.data();
  const auto& blocks = header.at("blocks");
  size_t bi = 0;
  for (int j = 0; j < sf.spec.levels; ++j) {
    sf.smooth.alpha.push_back(detail::read_matrix_block(blocks.at(bi++), cur));
    sf.smooth.beta.push_back(detail::read_matrix_block(blocks.at(bi++), cur));
    sf.smooth.gamma.push_back(detail::read_matrix_block(blocks.at(bi++), cur));
  }
  for (int j = 0; j < sf.spec.levels; ++j) {
    sf.dyadic.avec.push_back(detail::read_vector_block(blocks.at(bi++), cur));
    sf.dyadic.bvec.push_back(detail::read_vector_block(blocks.at(bi++), cur));
    sf.dyadic.cvec.push_back(detail::read_vector_block(blocks.at(bi++), cur));
  }
  sf.coarse = detail::read_matrix_block(blocks.at(bi++), cur);
  return sf;
}

/// B-system file: JSON document with exponents and per-cube value arrays over
/// the cube's finest cells.
inline BSystem read_bsystem(const std::string& path, const GridSpec& g) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("bsystem file: cannot open " + path);
  ordered_json doc = ordered_json::parse(is, nullptr, true, true);
  BSystem bs;
  bs.spec = g;
  const auto read_exp = [&](const char* key) {
    const auto& v = doc.at(key);
    if (v.is_string() && v.get<std::string>() == "inf")
      return std::numeric_limits<double>::infinity();
    return v.get<double>();
  };
  bs.p = read_exp("p");
  bs.q = read_exp("q");
  for (const auto& c : doc.at("cubes")) {
    BSystem::Entry e;
    e.cube.level = c.at("j").get<int>();
    e.cube.index = c.at("k").get<std::int64_t>();
    e.b1 = c.at("b1").get<std::vector<double>>();
    e.b2 = c.contains("b2") ? c.at("b2").get<std::vector<double>>() : e.b1;
    bs.cubes.push_back(std::move(e));
  }
  validate_bsystem(bs);
  return bs;
}

inline void write_bsystem(const BSystem& bs, const std::string& path) {
  ordered_json doc;
  doc["p"] = std::isinf(bs.p) ? ordered_json("inf") : ordered_json(bs.p);
  doc["q"] = std::isinf(bs.q) ? ordered_json("inf") : ordered_json(bs.q);
  doc["cubes"] = ordered_json::array();
  for (const auto& e : bs.cubes)
    doc["cubes"].push_back(
        ordered_json{{"j", e.cube.level}, {"k", e.cube.index}, {"b1", e.b1}, {"b2", e.b2}});
  std::ofstream os(path);
  if (!os) throw std::runtime_error("bsystem file: cannot open " + path + " for writing");
  os << doc.dump(2) << "\n";
}

}  // namespace haarbcr
