#include "cbm/numerics/serialize.hpp"

#include <array>
#include <bit>
#include <istream>
#include <limits>
#include <ostream>

namespace cbm::numerics {

namespace {

template <typename U>
void put_le(std::ostream &out, U v)
{
  std::array<char, sizeof(U)> buf{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  }
  out.write(buf.data(), buf.size());
}

} // namespace

void BinaryWriter::u32(std::uint32_t v) { put_le(out_, v); }

void BinaryWriter::f64(double v) { put_le(out_, std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::bytes(std::string const &s)
{
  if (s.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw FormatError("string too long to serialise");
  }
  u32(static_cast<std::uint32_t>(s.size()));
  out_.write(s.data(), static_cast<std::streamsize>(s.size()));
}

void BinaryReader::read_exact(unsigned char *dst, std::size_t n)
{
  in_.read(reinterpret_cast<char *>(dst), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in_.gcount()) != n) {
    throw FormatError("unexpected end of stream");
  }
}

std::uint32_t BinaryReader::u32()
{
  std::array<unsigned char, 4> b{};
  read_exact(b.data(), b.size());
  std::uint32_t v = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
  }
  return v;
}

double BinaryReader::f64()
{
  std::array<unsigned char, 8> b{};
  read_exact(b.data(), b.size());
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < b.size(); ++i) {
    v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  }
  return std::bit_cast<double>(v);
}

std::string BinaryReader::bytes()
{
  auto const n = u32();
  std::string s(n, '\0');
  if (n > 0) {
    read_exact(reinterpret_cast<unsigned char *>(s.data()), n);
  }
  return s;
}

void write_parameters(std::ostream &out, std::vector<Tensor2 const *> const &tensors)
{
  BinaryWriter w(out);
  w.u32(kParameterFormatVersion);
  w.u32(static_cast<std::uint32_t>(tensors.size()));
  for (auto const *t : tensors) {
    w.u32(static_cast<std::uint32_t>(t->rows()));
    w.u32(static_cast<std::uint32_t>(t->cols()));
    for (Index i = 0; i < t->size(); ++i) {
      w.f64(t->data()[i]);
    }
  }
  if (!out) {
    throw FormatError("write failed");
  }
}

std::vector<Tensor2> read_parameters(std::istream &in)
{
  BinaryReader r(in);
  auto const version = r.u32();
  if (version != kParameterFormatVersion) {
    throw FormatError("unsupported parameter format version " + std::to_string(version));
  }
  auto const count = r.u32();
  std::vector<Tensor2> out;
  out.reserve(count);
  for (std::uint32_t k = 0; k < count; ++k) {
    auto const rows = r.u32();
    auto const cols = r.u32();
    Tensor2 t(rows, cols);
    for (Index i = 0; i < t.size(); ++i) {
      t.data()[i] = r.f64();
    }
    out.push_back(std::move(t));
  }
  return out;
}

} // namespace cbm::numerics
