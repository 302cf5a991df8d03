#pragma once

#include <stdexcept>
#include <string>

namespace meanfield {

// Thrown when a drift or diffusion evaluation stops being finite. Carries the
// simulation time and the offending value; simulate() appends the step index.
struct blow_up_error : std::runtime_error {
  double t;
  double value;
  long step = -1;

  blow_up_error(double t_, double value_, long step_ = -1)
      : std::runtime_error(format(t_, value_, step_)), t(t_), value(value_), step(step_) {}

private:
  static std::string format(double t, double v, long step) {
    std::string s = "coefficient blow-up at t=" + std::to_string(t) + ", value=" + std::to_string(v);
    if (step >= 0) s += ", step=" + std::to_string(step);
    return s;
  }
};

}  // namespace meanfield
