#include "cbm/agent/checkpoint.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <istream>
#include <ostream>

namespace cbm::agent {

CheckpointHeader CheckpointHeader::describe(NetworkConfig const &net, std::size_t n_units, std::size_t history_length,
                                            std::string strategy)
{
  CheckpointHeader h;
  h.n_units = static_cast<std::uint32_t>(n_units);
  h.history_length = static_cast<std::uint32_t>(history_length);
  h.n_quantiles = static_cast<std::uint32_t>(net.n_quantiles);
  for (auto w : net.trunk_widths) {
    h.trunk_widths.push_back(static_cast<std::uint32_t>(w));
  }
  for (auto w : net.head_widths) {
    h.head_widths.push_back(static_cast<std::uint32_t>(w));
  }
  h.noisy = net.noisy;
  h.strategy = std::move(strategy);
  return h;
}

void save_checkpoint(std::ostream &out, CheckpointHeader const &header, QuantileNetwork const &net)
{
  numerics::BinaryWriter w(out);
  w.u32(kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.u32(header.n_units);
  w.u32(header.history_length);
  w.u32(header.n_quantiles);
  w.u32(static_cast<std::uint32_t>(header.trunk_widths.size()));
  for (auto v : header.trunk_widths) {
    w.u32(v);
  }
  w.u32(static_cast<std::uint32_t>(header.head_widths.size()));
  for (auto v : header.head_widths) {
    w.u32(v);
  }
  w.u32(header.noisy ? 1 : 0);
  w.bytes(header.strategy);

  std::vector<Tensor2 const *> tensors;
  for (auto const *p : net.parameters()) {
    tensors.push_back(&p->value);
  }
  numerics::write_parameters(out, tensors);
}

Checkpoint read_checkpoint(std::istream &in)
{
  numerics::BinaryReader r(in);
  if (r.u32() != kCheckpointMagic) {
    throw numerics::FormatError("not a checkpoint file (bad magic)");
  }
  if (auto const v = r.u32(); v != kCheckpointVersion) {
    throw numerics::FormatError(fmt::format("unsupported checkpoint version {}", v));
  }
  Checkpoint c;
  c.header.n_units = r.u32();
  c.header.history_length = r.u32();
  c.header.n_quantiles = r.u32();
  auto read_widths = [&](std::vector<std::uint32_t> &out) {
    auto const count = r.u32();
    if (count > 64) {
      throw numerics::FormatError("implausible layer count in checkpoint header");
    }
    for (std::uint32_t i = 0; i < count; ++i) {
      out.push_back(r.u32());
    }
  };
  read_widths(c.header.trunk_widths);
  read_widths(c.header.head_widths);
  c.header.noisy = r.u32() != 0;
  c.header.strategy = r.bytes();
  c.parameters = numerics::read_parameters(in);
  return c;
}

void check_compatible(CheckpointHeader const &found, CheckpointHeader const &expected)
{
  auto cmp = [](char const *field, auto const &a, auto const &b) {
    if (a != b) {
      throw CheckpointMismatch(field, fmt::format("checkpoint has {}, configuration expects {}", a, b));
    }
  };
  cmp("n_units", found.n_units, expected.n_units);
  cmp("history_length", found.history_length, expected.history_length);
  cmp("n_quantiles", found.n_quantiles, expected.n_quantiles);
  cmp("trunk_widths", found.trunk_widths, expected.trunk_widths);
  cmp("head_widths", found.head_widths, expected.head_widths);
  cmp("noisy", found.noisy, expected.noisy);
}

void load_parameters(QuantileNetwork &net, std::vector<Tensor2> const &parameters)
{
  auto dst = net.parameters();
  if (dst.size() != parameters.size()) {
    throw CheckpointMismatch("parameters", fmt::format("{} tensors stored, network has {}", parameters.size(),
                                                       dst.size()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i]->rows() != parameters[i].rows() || dst[i]->cols() != parameters[i].cols()) {
      throw CheckpointMismatch("parameters", fmt::format("tensor {} is {}x{}, network expects {}x{}", i,
                                                         parameters[i].rows(), parameters[i].cols(), dst[i]->rows(),
                                                         dst[i]->cols()));
    }
    dst[i]->value = parameters[i];
  }
}

} // namespace cbm::agent
