#include "mcdub/data/array_io.hpp"

#include "mcdub/errors.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace mcdub::data {

namespace {

constexpr std::array<char, 4> kMagic{'M', 'C', 'D', 'A'};
constexpr std::uint8_t kVersion = 1;
// Guards against absurd allocations when reading corrupt headers.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 32;

template <typename T>
void put_le(std::ostream& out, T v) {
  std::array<unsigned char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <typename T>
T get_le(std::istream& in) {
  std::array<unsigned char, sizeof(T)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) throw FormatError("truncated array record");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T v;
  std::memcpy(&v, bytes.data(), sizeof(T));
  return v;
}

void check_rank(const NumericArray& a, DType dtype) {
  if (a.dtype != dtype) throw FormatError("unexpected array element type");
  if (a.shape.empty() || a.shape.size() > 2) throw FormatError("unexpected array rank");
}

}  // namespace

std::uint64_t NumericArray::element_count() const {
  std::uint64_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
void put_string(std::ostream& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
std::uint32_t get_u32(std::istream& in) { return get_le<std::uint32_t>(in); }
std::uint64_t get_u64(std::istream& in) { return get_le<std::uint64_t>(in); }
double get_f64(std::istream& in) { return std::bit_cast<double>(get_le<std::uint64_t>(in)); }
std::string get_string(std::istream& in) {
  const std::uint32_t len = get_u32(in);
  if (len > (1u << 24)) throw FormatError("string field too long");
  std::string s(len, '\0');
  if (!in.read(s.data(), len)) throw FormatError("truncated string field");
  return s;
}

void write_array(std::ostream& out, const NumericArray& a) {
  if (a.shape.empty() || a.shape.size() > 2) throw FormatError("arrays must have rank 1 or 2");
  out.write(kMagic.data(), kMagic.size());
  const std::array<std::uint8_t, 4> head{kVersion, static_cast<std::uint8_t>(a.dtype),
                                         static_cast<std::uint8_t>(a.shape.size()), 0};
  out.write(reinterpret_cast<const char*>(head.data()), head.size());
  for (auto d : a.shape) put_u64(out, d);
  const std::uint64_t n = a.element_count();
  switch (a.dtype) {
    case DType::kFloat64:
      if (a.f64.size() != n) throw FormatError("payload size does not match shape");
      for (double v : a.f64) put_f64(out, v);
      break;
    case DType::kInt32:
      if (a.i32.size() != n) throw FormatError("payload size does not match shape");
      for (auto v : a.i32) put_le(out, v);
      break;
    case DType::kUInt8:
      if (a.u8.size() != n) throw FormatError("payload size does not match shape");
      out.write(reinterpret_cast<const char*>(a.u8.data()), static_cast<std::streamsize>(a.u8.size()));
      break;
  }
  if (!out) throw IoError("failed writing array record");
}

NumericArray read_array(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) throw FormatError("bad array magic");
  std::array<std::uint8_t, 4> head{};
  if (!in.read(reinterpret_cast<char*>(head.data()), head.size())) throw FormatError("truncated array header");
  if (head[0] != kVersion) throw FormatError("unsupported array version " + std::to_string(head[0]));
  if (head[2] < 1 || head[2] > 2) throw FormatError("unsupported array rank " + std::to_string(head[2]));
  NumericArray a;
  switch (head[1]) {
    case 1: a.dtype = DType::kFloat64; break;
    case 2: a.dtype = DType::kInt32; break;
    case 3: a.dtype = DType::kUInt8; break;
    default: throw FormatError("unknown element type " + std::to_string(head[1]));
  }
  for (int i = 0; i < head[2]; ++i) a.shape.push_back(get_u64(in));
  const std::uint64_t n = a.element_count();
  if (n > kMaxElements) throw FormatError("array too large");
  switch (a.dtype) {
    case DType::kFloat64:
      a.f64.resize(n);
      for (auto& v : a.f64) v = get_f64(in);
      break;
    case DType::kInt32:
      a.i32.resize(n);
      for (auto& v : a.i32) v = get_le<std::int32_t>(in);
      break;
    case DType::kUInt8:
      a.u8.resize(n);
      if (!in.read(reinterpret_cast<char*>(a.u8.data()), static_cast<std::streamsize>(n))) {
        throw FormatError("truncated array payload");
      }
      break;
  }
  return a;
}

NumericArray from_matrix(const Matrix& m) {
  NumericArray a;
  a.dtype = DType::kFloat64;
  a.shape = {static_cast<std::uint64_t>(m.rows()), static_cast<std::uint64_t>(m.cols())};
  a.f64.assign(m.data(), m.data() + m.size());
  return a;
}

NumericArray from_doubles(std::span<const double> v) {
  NumericArray a;
  a.dtype = DType::kFloat64;
  a.shape = {v.size()};
  a.f64.assign(v.begin(), v.end());
  return a;
}

NumericArray from_ints(std::span<const int> v) {
  NumericArray a;
  a.dtype = DType::kInt32;
  a.shape = {v.size()};
  a.i32.assign(v.begin(), v.end());
  return a;
}

NumericArray from_flags(std::span<const std::uint8_t> v) {
  NumericArray a;
  a.dtype = DType::kUInt8;
  a.shape = {v.size()};
  a.u8.assign(v.begin(), v.end());
  return a;
}

Matrix to_matrix(const NumericArray& a) {
  check_rank(a, DType::kFloat64);
  const auto rows = static_cast<Eigen::Index>(a.shape.size() == 2 ? a.shape[0] : 1);
  const auto cols = static_cast<Eigen::Index>(a.shape.back());
  Matrix m(rows, cols);
  if (m.size() > 0) std::memcpy(m.data(), a.f64.data(), a.f64.size() * sizeof(double));
  return m;
}

std::vector<double> to_doubles(const NumericArray& a) {
  check_rank(a, DType::kFloat64);
  return a.f64;
}

std::vector<int> to_ints(const NumericArray& a) {
  check_rank(a, DType::kInt32);
  return {a.i32.begin(), a.i32.end()};
}

std::vector<std::uint8_t> to_flags(const NumericArray& a) {
  check_rank(a, DType::kUInt8);
  return a.u8;
}

void save_array(const std::filesystem::path& path, const NumericArray& array) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_array(out, array);
}

NumericArray load_array(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return read_array(in);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

}  // namespace mcdub::data
