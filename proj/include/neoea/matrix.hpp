#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "neoea/errors.hpp"
#include "neoea/rng.hpp"

namespace neoea {

// Row-major dense matrix of 64-bit floats; the only tensor type used.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  DenseMatrix() = default;
  DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

  double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  double* row(std::size_t r) { return values.data() + r * cols; }
  const double* row(std::size_t r) const { return values.data() + r * cols; }

  void zero() { std::fill(values.begin(), values.end(), 0.0); }

  bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

  bool all_finite() const {
    for (double v : values) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const DenseMatrix& a, const DenseMatrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.values == b.values;
  }
};

// Gradient accumulator; always shaped like the parameter it belongs to.
using GradBuffer = DenseMatrix;

inline void accumulate_row(GradBuffer& g, std::size_t r, const double* v,
                           std::size_t n, double scale) {
  double* dst = g.row(r);
  for (std::size_t i = 0; i < n; ++i) dst[i] += scale * v[i];
}

// Uniform Xavier/Glorot init on [-b, b], b = sqrt(6 / (rows + cols)).
inline DenseMatrix xavier_init(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  if (rows == 0 || cols == 0) throw ConfigError("xavier_init: zero dimension");
  DenseMatrix m(rows, cols);
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Rng rng(seed);
  for (double& v : m.values) v = rng.uniform(-bound, bound);
  return m;
}

// Clamp every entry into [-c, c].  Idempotent.
inline void clip_params(DenseMatrix& m, double c) {
  if (!(c > 0.0)) throw ConfigError("clip_params: bound must be positive");
  for (double& v : m.values) v = std::clamp(v, -c, c);
}

// Rescale each row to unit L2 norm; all-zero rows are left untouched.
inline void l2_normalize_rows(DenseMatrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    double* p = m.row(r);
    double sq = 0.0;
    for (std::size_t c = 0; c < m.cols; ++c) sq += p[c] * p[c];
    if (sq == 0.0) continue;
    const double inv = 1.0 / std::sqrt(sq);
    for (std::size_t c = 0; c < m.cols; ++c) p[c] *= inv;
  }
}

inline double row_l2_distance(const double* a, const double* b, std::size_t n) {
  double sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    sq += d * d;
  }
  return std::sqrt(sq);
}

// ---- binary matrix file format -------------------------------------------
//
// Layout: magic "NEOA1", then rows and cols as little-endian u64, then the
// row-major payload as little-endian IEEE-754 doubles.

namespace detail {

inline void put_u64_le(std::ofstream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64_le(std::ifstream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw DataError("matrix file truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

}  // namespace detail

inline void save_matrix(const DenseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open for write: " + path.string());
  out.write("NEOA1", 5);
  detail::put_u64_le(out, m.rows);
  detail::put_u64_le(out, m.cols);
  for (double v : m.values) detail::put_u64_le(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw DataError("write failed: " + path.string());
}

inline DenseMatrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path.string());
  char magic[5];
  in.read(magic, 5);
  if (!in || std::memcmp(magic, "NEOA1", 5) != 0) {
    throw DataError("bad matrix magic in " + path.string());
  }
  const std::uint64_t rows = detail::get_u64_le(in);
  const std::uint64_t cols = detail::get_u64_le(in);
  DenseMatrix m(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
  for (double& v : m.values) v = std::bit_cast<double>(detail::get_u64_le(in));
  return m;
}

// FNV-1a over the exact byte representation; used for state checksums.
inline std::uint64_t fnv1a_bytes(const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::uint64_t matrix_checksum(const DenseMatrix& m) {
  std::uint64_t h = fnv1a_bytes(&m.rows, sizeof(m.rows));
  h ^= mix64(fnv1a_bytes(&m.cols, sizeof(m.cols)));
  if (!m.values.empty()) {
    h ^= mix64(fnv1a_bytes(m.values.data(), m.values.size() * sizeof(double)));
  }
  return h;
}

}  // namespace neoea
