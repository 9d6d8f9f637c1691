#include "dmef/rk4.hpp"

#include <sstream>

#include "dmef/error.hpp"

namespace dmef {

TimeGrid TimeGrid::over(double horizon, double dt) {
  if (!(dt > 0.0) || !(horizon > 0.0) || !std::isfinite(horizon)) {
    std::ostringstream os;
    os << "time grid needs dt > 0 and T > 0 (T=" << horizon << ", dt=" << dt << ")";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  const double ratio = horizon / dt;
  const double steps = std::round(ratio);
  if (steps < 1.0 || std::abs(ratio - steps) > 1e-9 * std::max(1.0, steps)) {
    std::ostringstream os;
    os << "T/dt = " << ratio << " is not an integer";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  return TimeGrid{dt, static_cast<std::size_t>(steps)};
}

}  // namespace dmef
