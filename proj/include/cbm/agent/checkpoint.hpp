#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "cbm/agent/network.hpp"
#include "cbm/numerics/serialize.hpp"

namespace cbm::agent {

// Checkpoint file layout (little-endian):
//   u32 magic 'CBMQ', u32 version
//   u32 n_units, u32 history_length, u32 n_quantiles
//   u32 trunk layer count, then each width; u32 head layer count, then each width
//   u32 noisy flag
//   u32 strategy name length, name bytes
//   parameter block (see numerics/serialize.hpp) holding the online network
inline constexpr std::uint32_t kCheckpointMagic = 0x514D4243; // "CBMQ"
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointHeader
{
  std::uint32_t n_units = 0;
  std::uint32_t history_length = 0;
  std::uint32_t n_quantiles = 0;
  std::vector<std::uint32_t> trunk_widths;
  std::vector<std::uint32_t> head_widths;
  bool noisy = true;
  std::string strategy;

  static CheckpointHeader describe(NetworkConfig const &net, std::size_t n_units, std::size_t history_length,
                                   std::string strategy);
};

struct CheckpointMismatch : ConfigError
{
  CheckpointMismatch(std::string field_name, std::string const &detail)
      : ConfigError("checkpoint mismatch in '" + field_name + "': " + detail), field(std::move(field_name))
  {
  }
  std::string field;
};

struct Checkpoint
{
  CheckpointHeader header;
  std::vector<Tensor2> parameters;
};

void save_checkpoint(std::ostream &out, CheckpointHeader const &header, QuantileNetwork const &net);
Checkpoint read_checkpoint(std::istream &in);

// Throws CheckpointMismatch naming the first differing field. The strategy
// name is not compared.
void check_compatible(CheckpointHeader const &found, CheckpointHeader const &expected);

// Copies values into `net` (all networks sharing the architecture).
void load_parameters(QuantileNetwork &net, std::vector<Tensor2> const &parameters);

} // namespace cbm::agent
