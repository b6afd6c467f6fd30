#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbm/numerics/tensor.hpp"

namespace cbm::numerics {

// Parameter block layout, all fields little-endian:
//   u32 format_version (= kParameterFormatVersion)
//   u32 tensor_count
//   per tensor: u32 rows, u32 cols, rows*cols IEEE-754 binary64 values in row-major order
inline constexpr std::uint32_t kParameterFormatVersion = 1;

struct FormatError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

class BinaryWriter
{
public:
  explicit BinaryWriter(std::ostream &out) : out_(out) {}
  void u32(std::uint32_t v);
  void f64(double v);
  void bytes(std::string const &s); // u32 length prefix, then raw bytes

private:
  std::ostream &out_;
};

class BinaryReader
{
public:
  explicit BinaryReader(std::istream &in) : in_(in) {}
  std::uint32_t u32();
  double f64();
  std::string bytes();

private:
  void read_exact(unsigned char *dst, std::size_t n);
  std::istream &in_;
};

void write_parameters(std::ostream &out, std::vector<Tensor2 const *> const &tensors);
std::vector<Tensor2> read_parameters(std::istream &in);

} // namespace cbm::numerics
