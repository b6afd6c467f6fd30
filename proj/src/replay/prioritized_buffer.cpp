#include "cbm/replay/prioritized_buffer.hpp"

#include <algorithm>
#include <cmath>

namespace cbm::replay {

PrioritizedReplay::PrioritizedReplay(ReplayConfig cfg)
    : cfg_(cfg), tree_(cfg.capacity), max_tree_(cfg.capacity)
{
  if (!(cfg_.priority_eps > 0.0)) {
    throw std::invalid_argument("replay: priority_eps must be > 0");
  }
  if (!(cfg_.alpha >= 0.0)) {
    throw std::invalid_argument("replay: alpha must be >= 0");
  }
  storage_.resize(cfg_.capacity);
  raw_priority_.assign(cfg_.capacity, 0.0);
  serials_.assign(cfg_.capacity, 0);
}

void PrioritizedReplay::set_priority(std::size_t slot, double p)
{
  raw_priority_[slot] = p;
  tree_.set(slot, std::pow(p, cfg_.alpha));
  max_tree_.set(slot, p);
}

std::size_t PrioritizedReplay::push(TransitionRecord record)
{
  double const p = max_priority();
  std::size_t const slot = cursor_;
  storage_[slot] = std::move(record);
  serials_[slot] = next_serial_++;
  set_priority(slot, p);
  cursor_ = (cursor_ + 1) % cfg_.capacity;
  size_ = std::min(size_ + 1, cfg_.capacity);
  return slot;
}

SampledBatch PrioritizedReplay::sample(std::size_t batch, double beta, Rng &rng) const
{
  if (batch == 0 || size_ < batch) {
    throw NotReadyError("replay holds " + std::to_string(size_) + " transitions, batch needs " +
                        std::to_string(batch));
  }
  SampledBatch out;
  out.records.reserve(batch);
  out.weights.reserve(batch);
  out.handles.reserve(batch);

  double const total = tree_.total();
  double const segment = total / static_cast<double>(batch);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double max_w = 0.0;
  for (std::size_t k = 0; k < batch; ++k) {
    double const mass = segment * (static_cast<double>(k) + unit(rng));
    std::size_t const slot = tree_.find(mass);
    double const prob = tree_.get(slot) / total;
    double const w = std::pow(static_cast<double>(size_) * prob, -beta);
    max_w = std::max(max_w, w);
    out.records.push_back(storage_[slot]);
    out.weights.push_back(w);
    out.handles.push_back({slot, serials_[slot]});
  }
  for (double &w : out.weights) {
    w /= max_w;
  }
  return out;
}

void PrioritizedReplay::update_priorities(std::span<SampleHandle const> handles, std::span<double const> td_errors)
{
  if (handles.size() != td_errors.size()) {
    throw std::invalid_argument("update_priorities: " + std::to_string(handles.size()) + " handles but " +
                                std::to_string(td_errors.size()) + " errors");
  }
  for (std::size_t k = 0; k < handles.size(); ++k) {
    auto const &h = handles[k];
    if (h.slot >= cfg_.capacity || serials_[h.slot] != h.serial || h.serial == 0) {
      ++stale_updates_;
      continue;
    }
    double const td = td_errors[k];
    if (!std::isfinite(td)) {
      throw std::invalid_argument("update_priorities: non-finite td error");
    }
    set_priority(h.slot, std::abs(td) + cfg_.priority_eps);
  }
}

} // namespace cbm::replay
