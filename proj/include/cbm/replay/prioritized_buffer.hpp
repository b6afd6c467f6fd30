#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "cbm/env/types.hpp"
#include "cbm/numerics/tensor.hpp"
#include "cbm/replay/sum_tree.hpp"

namespace cbm::replay {

struct TransitionRecord
{
  env::StateVector state;
  std::size_t action_index = 0;
  double reward = 0.0;
  env::StateVector next_state;
  bool done = false;
};

struct ReplayConfig
{
  std::size_t capacity = 200000;
  double alpha = 0.6;       // priority exponent
  double priority_eps = 1e-3;
};

struct NotReadyError : std::runtime_error
{
  using std::runtime_error::runtime_error;
};

// Identifies a sampled slot together with the insertion it held, so updates
// that arrive after the slot was overwritten can be recognised and dropped.
struct SampleHandle
{
  std::size_t slot = 0;
  std::uint64_t serial = 0;
};

struct SampledBatch
{
  std::vector<TransitionRecord> records;
  std::vector<double> weights;
  std::vector<SampleHandle> handles;
};

// Proportional prioritized replay: P(i) = p_i^alpha / sum_k p_k^alpha.
class PrioritizedReplay
{
public:
  explicit PrioritizedReplay(ReplayConfig cfg = {});

  std::size_t push(TransitionRecord record);

  // Stratified proportional draw of `batch` records with importance weights
  // (N P(i))^-beta normalised so the largest weight in the batch is 1.
  SampledBatch sample(std::size_t batch, double beta, Rng &rng) const;

  // p_i = |td_i| + eps. Handles whose slot has since been overwritten are skipped.
  void update_priorities(std::span<SampleHandle const> handles, std::span<double const> td_errors);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return cfg_.capacity; }
  bool ready(std::size_t batch) const { return size_ >= batch && size_ > 0; }
  double priority(std::size_t slot) const { return raw_priority_.at(slot); }
  double max_priority() const { return size_ == 0 ? 1.0 : max_tree_.max(); }
  std::size_t stale_updates() const { return stale_updates_; }
  TransitionRecord const &at(std::size_t slot) const { return storage_.at(slot); }
  std::uint64_t serial(std::size_t slot) const { return serials_.at(slot); }
  SumTree const &tree() const { return tree_; }
  ReplayConfig const &config() const { return cfg_; }

private:
  void set_priority(std::size_t slot, double p);

  ReplayConfig cfg_;
  SumTree tree_;
  MaxTree max_tree_;
  std::vector<TransitionRecord> storage_;
  std::vector<double> raw_priority_;
  std::vector<std::uint64_t> serials_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  std::uint64_t next_serial_ = 1;
  std::size_t stale_updates_ = 0;
};

} // namespace cbm::replay
