#pragma once

#include <functional>
#include <vector>

namespace revbend {

// One accepted integrator step of psi'' + Q(z) psi = 0.
struct OscSample {
  double z = 0.0;
  double u = 0.0;      // psi
  double v = 0.0;      // psi' (d/dz)
  double theta = 0.0;  // continuous Pruefer phase, (u, v) ~ (sin, cos)
};

struct OscResult {
  std::vector<OscSample> samples;  // traversal order, first = initial state
  int zero_count = 0;              // interior zeros from phase crossings
  double amp_last_quarter = 0.0;   // max |u| over the last quarter of the run
  int steps = 0;
  int rejected = 0;

  const OscSample& back() const { return samples.back(); }
  // Hermite dense evaluation of (u, v) at z inside the covered range.
  void eval(double z, double* u, double* v,
            const std::function<double(double)>& Q) const;
};

struct OscOptions {
  double rel_tol = 1e-10;
  double abs_tol = 1e-300;  // pure relative control by default
  double h_min_fraction = 1e-13;
  int max_steps = 4000000;
};

// Adaptive Dormand-Prince 5(4). za -> zb in either direction. The Pruefer
// phase advances continuously (unwrapped per accepted step); since the phase
// passes multiples of pi with unit speed, interior zeros of u are exactly
// the floor crossings of theta / pi.
OscResult integrate_oscillation(const std::function<double(double)>& Q,
                                double za, double zb, double u0, double v0,
                                const OscOptions& options = {});

}  // namespace revbend
