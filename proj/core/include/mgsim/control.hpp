#pragma once

namespace mgsim::control {

struct PiGains {
    double kp = 0.05;        // Hz out per Hz in
    double ki = 0.05;        // 1/s
    double out_min = -0.5;   // Hz
    double out_max = 0.5;    // Hz

    void validate() const;   // ki >= 0, out_min < out_max
};

/// Secondary-control PI per DG. The input is the consensus-agreed average
/// frequency deviation, zero-order held between episodes; the output is the
/// droop correction delta_f. While the output sits on a clamp the integral
/// is held at the saturation boundary (anti-windup), so
/// output == clamp(kp * held + ki * integral) is an invariant of every step.
class PiState {
public:
    /// Replaces the held input (idempotent for equal values). Rejects
    /// non-finite values with Error(non_finite_value).
    void set_input(double consensus_value_hz);

    /// Advances the integrator by dt seconds against the held input and
    /// refreshes the output.
    void step(const PiGains& gains, double dt);

    double held_input() const { return held_; }
    double integral() const { return integral_; }
    double output() const { return output_; }

private:
    double held_ = 0.0;      // last consensus result, Hz
    double integral_ = 0.0;  // accumulated deviation, Hz * s
    double output_ = 0.0;    // current delta_f, Hz
};

} // namespace mgsim::control
