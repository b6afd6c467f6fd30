#pragma once

#include <stdexcept>

namespace cbm {

// Invalid or inconsistent configuration (counts, shapes, parameter ranges).
struct ConfigError : std::invalid_argument
{
  using std::invalid_argument::invalid_argument;
};

} // namespace cbm
