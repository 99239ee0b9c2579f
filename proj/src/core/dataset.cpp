#include "core/dataset.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace fc {

IndexVec GroundTruth::members(std::int32_t c) const {
  IndexVec out;
  for (Index i = 0; i < n(); ++i)
    if (labels[static_cast<std::size_t>(i)] == c) out.push_back(i);
  return out;
}

namespace {

static_assert(std::endian::native == std::endian::little,
              "file IO assumes a little-endian host");

void put_bytes(std::ofstream& f, const void* p, std::size_t len) {
  f.write(static_cast<const char*>(p), static_cast<std::streamsize>(len));
}

void get_bytes(std::ifstream& f, void* p, std::size_t len,
               const std::string& path) {
  f.read(static_cast<char*>(p), static_cast<std::streamsize>(len));
  require(f.good(), ErrorCode::io, "truncated or unreadable file: " + path);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), ErrorCode::io, "cannot open for writing: " + path);
  return f;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(f.good(), ErrorCode::io, "cannot open for reading: " + path);
  return f;
}

void check_magic(std::ifstream& f, const char* magic,
                 const std::string& path) {
  char m[4];
  get_bytes(f, m, 4, path);
  require(std::memcmp(m, magic, 4) == 0, ErrorCode::io,
          "bad magic in " + path + " (expected " + magic + ")");
}

void save_i32_block(const char* magic, const std::vector<std::int32_t>& v,
                    const std::string& path) {
  std::ofstream f = open_out(path);
  put_bytes(f, magic, 4);
  std::uint64_t n = v.size();
  put_bytes(f, &n, 8);
  if (n) put_bytes(f, v.data(), n * sizeof(std::int32_t));
  f.flush();
  require(f.good(), ErrorCode::io, "write failed: " + path);
}

std::vector<std::int32_t> load_i32_block(const char* magic,
                                         const std::string& path) {
  std::ifstream f = open_in(path);
  check_magic(f, magic, path);
  std::uint64_t n = 0;
  get_bytes(f, &n, 8, path);
  std::vector<std::int32_t> v(n);
  if (n) get_bytes(f, v.data(), n * sizeof(std::int32_t), path);
  return v;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream f = open_out(path);
  put_bytes(f, "FCDS", 4);
  std::uint32_t version = 1;
  put_bytes(f, &version, 4);
  std::uint64_t n = static_cast<std::uint64_t>(ds.n());
  std::uint64_t d = static_cast<std::uint64_t>(ds.dim());
  put_bytes(f, &n, 8);
  put_bytes(f, &d, 8);
  for (Index i = 0; i < ds.n(); ++i)
    for (Index j = 0; j < ds.dim(); ++j) {
      double v = ds.points()(i, j);
      put_bytes(f, &v, 8);
    }
  f.flush();
  require(f.good(), ErrorCode::io, "write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream f = open_in(path);
  check_magic(f, "FCDS", path);
  std::uint32_t version = 0;
  get_bytes(f, &version, 4, path);
  require(version == 1, ErrorCode::io,
          "unsupported dataset version in " + path);
  std::uint64_t n = 0, d = 0;
  get_bytes(f, &n, 8, path);
  get_bytes(f, &d, 8, path);
  require(d > 0 || n == 0, ErrorCode::io, "dataset with zero dimension: " + path);
  Mat pts(static_cast<Index>(n), static_cast<Index>(d));
  for (std::uint64_t i = 0; i < n; ++i)
    for (std::uint64_t j = 0; j < d; ++j) {
      double v;
      get_bytes(f, &v, 8, path);
      pts(static_cast<Index>(i), static_cast<Index>(j)) = v;
    }
  return Dataset(std::move(pts));
}

void save_labels(const std::vector<std::int32_t>& labels,
                 const std::string& path) {
  save_i32_block("FCLB", labels, path);
}

std::vector<std::int32_t> load_labels(const std::string& path) {
  return load_i32_block("FCLB", path);
}

void save_assignments(const std::vector<std::int32_t>& assign,
                      const std::string& path) {
  save_i32_block("FCAS", assign, path);
}

std::vector<std::int32_t> load_assignments(const std::string& path) {
  return load_i32_block("FCAS", path);
}

}  // namespace fc
