#pragma once

// Self-describing numeric array container (".arr").
//
//   offset  size  field
//   0       4     magic "MCDA"
//   4       1     format version (1)
//   5       1     element type: 1 = float64, 2 = int32, 3 = uint8
//   6       1     rank (1 or 2)
//   7       1     reserved, 0
//   8       8*r   dimensions, uint64 little-endian, outermost first
//   ...           payload, row-major, little-endian
//
// The same record is embedded verbatim in checkpoints.

#include "mcdub/ad/autodiff.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace mcdub::data {

enum class DType : std::uint8_t { kFloat64 = 1, kInt32 = 2, kUInt8 = 3 };

struct NumericArray {
  DType dtype = DType::kFloat64;
  std::vector<std::uint64_t> shape;
  std::vector<double> f64;
  std::vector<std::int32_t> i32;
  std::vector<std::uint8_t> u8;

  std::uint64_t element_count() const;
};

void write_array(std::ostream& out, const NumericArray& array);
// Throws FormatError on a malformed or truncated record.
NumericArray read_array(std::istream& in);

NumericArray from_matrix(const Matrix& m);
NumericArray from_doubles(std::span<const double> v);
NumericArray from_ints(std::span<const int> v);
NumericArray from_flags(std::span<const std::uint8_t> v);

// Conversions check dtype and rank; a rank-1 array converts to a 1 x N matrix.
Matrix to_matrix(const NumericArray& a);
std::vector<double> to_doubles(const NumericArray& a);
std::vector<int> to_ints(const NumericArray& a);
std::vector<std::uint8_t> to_flags(const NumericArray& a);

void save_array(const std::filesystem::path& path, const NumericArray& array);
NumericArray load_array(const std::filesystem::path& path);

// Little-endian scalar helpers shared with the checkpoint format.
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
void put_f64(std::ostream& out, double v);
void put_string(std::ostream& out, const std::string& s);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);
double get_f64(std::istream& in);
std::string get_string(std::istream& in);

}  // namespace mcdub::data
