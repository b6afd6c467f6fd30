#pragma once

#include "cbm/env/types.hpp"
#include "cbm/numerics/tensor.hpp"

namespace cbm::env {

// Lifecycle class factor: 1.05 up to 2 years, 1.00 to 10, 0.95 to 20, then 0.85.
double aging_multiplier(double age_years);

// Probability that the unit is anomalous after one step under `action`.
double transition_prob(EquipmentSpec const &spec, EquipmentState const &state, Action action,
                       double repair_success_prob);

// Temperature observation conditioned on the condition, clamped to [0,1].
double sample_temperature(Condition c, Rng &rng);

StateVector encode_state(std::vector<EquipmentState> const &units, CostHistory const &hist, double cost_scale);

} // namespace cbm::env
