#ifndef FMPULSE_TABLES_HPP
#define FMPULSE_TABLES_HPP

#include <optional>
#include <string_view>
#include <vector>

#include "fmpulse/pulse.hpp"

namespace fmpulse {

// Built-in pulse registry.
//
// The published set carries the reference coefficients exactly as printed
// (eight decimal digits).  Re-evaluating the decoupling integrals at high
// accuracy shows those coefficient sets fulfill the conditions only to
// about 1e-4; the refined set contains the nearby exact roots of this
// implementation's equations, re-solved to residuals below 1e-10 and
// written with 17 significant digits.
const std::vector<PulseSpec>& published_pulses();
const std::vector<PulseSpec>& refined_pulses();

// Case-insensitive lookup across both sets (refined names end in
// "-REFINED").  Returns nothing for unknown names.
std::optional<PulseSpec> find_builtin(std::string_view name);

}  // namespace fmpulse

#endif  // FMPULSE_TABLES_HPP
