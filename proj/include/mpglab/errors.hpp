#pragma once

#include <stdexcept>
#include <string>

namespace mpg {

// Base class for every validation failure raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A transition row is not a probability distribution.
struct StochasticityError : Error {
  using Error::Error;
};

// An initial distribution or policy row is not a full-support distribution
// where one is required.
struct SupportError : Error {
  using Error::Error;
};

// No joint action induces an irreducible aperiodic state chain.
struct IrreducibilityError : Error {
  using Error::Error;
};

// Player payoff tables differ where a common (team) payoff is required.
struct PayoffMismatch : Error {
  using Error::Error;
};

// Two policy profiles differ in more than one player's component.
struct DeviatorMismatch : Error {
  using Error::Error;
};

// A brute-force enumeration would exceed the configured cap.
struct EnumerationTooLarge : Error {
  using Error::Error;
};

// Step-size schedules: policy steps do not vanish relative to q steps.
struct TimescaleError : Error {
  using Error::Error;
};

// Step-size schedules: a step-size sequence is summable (decays too fast).
struct DivergenceError : Error {
  using Error::Error;
};

// Step-size schedules: squared q steps are not summable (decay too slow).
struct SummabilityError : Error {
  using Error::Error;
};

// Step-size schedules: players use different decay exponents, so cross-player
// step ratios do not stay bounded.
struct HeterogeneityError : Error {
  using Error::Error;
};

// Step-size scale puts a step outside (0, 1].
struct ScheduleRangeError : Error {
  using Error::Error;
};

// Malformed configuration, file, or argument.
struct ConfigError : Error {
  using Error::Error;
};

// A numerical routine failed to reach its certified tolerance.
struct NumericsError : Error {
  using Error::Error;
};

}  // namespace mpg
