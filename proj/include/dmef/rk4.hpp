#pragma once

#include <cmath>
#include <cstddef>

namespace dmef {

/// Uniform time grid t_k = k * dt, k = 0..steps.
struct TimeGrid {
  double dt = 0.0;
  std::size_t steps = 0;

  double at(std::size_t k) const { return static_cast<double>(k) * dt; }
  double horizon() const { return at(steps); }

  /// Throws InvalidArgument unless horizon / dt is an integer within 1e-9.
  static TimeGrid over(double horizon, double dt);
};

/// Which one-sided limit a stage evaluation takes for signals with jumps on
/// grid points: the first stage of a step looks forward into the step, the
/// last one looks back.
enum class StageSide { right, interior, left };

/// One classic fourth-order Runge-Kutta step. State needs y + h * k.
/// f(t, side, y) returns the derivative at y.
template <class State, class Rhs>
State rk4_step(const State& y, double t, double dt, Rhs&& f) {
  const double half = 0.5 * dt;
  const State k1 = f(t, StageSide::right, y);
  const State k2 = f(t + half, StageSide::interior, y + half * k1);
  const State k3 = f(t + half, StageSide::interior, y + half * k2);
  const State k4 = f(t + dt, StageSide::left, y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
}

}  // namespace dmef
