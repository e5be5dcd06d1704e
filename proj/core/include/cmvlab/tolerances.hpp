#pragma once

namespace cmvlab {

/// Numerical tolerances shared across modules. Experiments may override them
/// through the "tolerances" object of a run configuration.
struct Tolerances {
  double unitarity = 1e-12;        // max |U*U - I| for built truncations
  double eigen_match = 1e-8;       // phase solver vs. dense eigensolver
  double bisection = 1e-12;        // eigenvalue root tolerance, radians
  double gamma_denominator = 1e-14;
  double sde_inversion = 1e-9;     // largest monotonicity violation repaired by sorting
};

}  // namespace cmvlab
