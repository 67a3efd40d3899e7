#include "mgsim/control.hpp"

#include <cmath>
#include <string>

#include "mgsim/error.hpp"

namespace mgsim::control {

void PiGains::validate() const {
    if (!(ki >= 0.0)) throw Error(ErrorCode::invalid_parameter, "integral gain ki must be >= 0");
    if (!(out_min < out_max)) {
        throw Error(ErrorCode::invalid_parameter, "output clamp requires out_min < out_max");
    }
}

void PiState::set_input(double consensus_value_hz) {
    if (!std::isfinite(consensus_value_hz)) {
        throw Error(ErrorCode::non_finite_value, "PI input must be finite");
    }
    held_ = consensus_value_hz;
}

void PiState::step(const PiGains& gains, double dt) {
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::invalid_time_step, "PI step dt must be > 0");
    }
    integral_ += held_ * dt;
    double raw = gains.kp * held_ + gains.ki * integral_;
    if (raw > gains.out_max) {
        // Pull the integral back to the saturation boundary so it stops
        // growing while clamped and recovers without unwinding a backlog.
        if (gains.ki > 0.0) integral_ = (gains.out_max - gains.kp * held_) / gains.ki;
        output_ = gains.out_max;
    } else if (raw < gains.out_min) {
        if (gains.ki > 0.0) integral_ = (gains.out_min - gains.kp * held_) / gains.ki;
        output_ = gains.out_min;
    } else {
        output_ = raw;
    }
}

} // namespace mgsim::control
