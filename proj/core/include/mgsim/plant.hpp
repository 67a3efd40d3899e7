#pragma once

#include <span>
#include <vector>

#include "mgsim/rng.hpp"

namespace mgsim::plant {

/// Per-DG droop parameters. The voltage-side fields (v0, q0, kq) are carried
/// with the data set but unused by the frequency path.
struct DgParams {
    double f0 = 50.0;        // rated frequency, Hz
    double p0 = 35.0;        // active power set point, kW
    double kp = 0.002;       // frequency droop coefficient, Hz/kW
    double tau_p = 0.2;      // power measurement filter time constant, s
    double v0 = 230.0;       // rated voltage magnitude, V
    double q0 = 0.0;         // reactive power set point, kvar
    double kq = 0.001;       // voltage droop coefficient, V/kvar

    void validate() const;   // kp > 0, tau_p > 0, f0 > 0
};

/// Quasi-static electrical state of the single-bus microgrid.
struct PlantState {
    double t = 0.0;                   // simulated time, s
    double f_bus = 0.0;               // common bus frequency, Hz
    std::vector<double> p_out;        // per-DG filtered active output, kW
    std::vector<double> delta_f_cmd;  // per-DG applied secondary correction, Hz
    double p_load = 0.0;              // current load, kW
    size_t applied_steps = 0;         // schedule events consumed so far
};

/// Piecewise-constant load: an initial level plus ideal step events at
/// strictly increasing times.
struct LoadSchedule {
    double initial_kw = 175.0;
    std::vector<std::pair<double, double>> steps;  // (time s, load kW)

    void validate() const;
};

/// Droop characteristic: f = f0 - kp (P - P0) + delta_f.
double droop_frequency(const DgParams& params, double p_kw, double delta_f_hz);

struct BusSolution {
    double f_bus = 0.0;
    std::vector<double> p_star;  // kW; each (p_star_i, f_bus) satisfies the droop law exactly
};

/// Closes the droop equations under the power balance sum(P_i) = p_load.
/// Evaluated relative to the first DG's rated frequency so a balanced system
/// with zero corrections lands on f0 exactly, not within rounding of it.
BusSolution solve_bus(std::span<const DgParams> dgs, std::span<const double> delta_f,
                      double p_load);

/// Initial state with filters settled at the schedule's initial load.
PlantState init_steady(std::span<const DgParams> dgs, const LoadSchedule& schedule);

/// Advances the plant by dt: applies any schedule step with time <= t + dt,
/// re-solves the bus, and moves each p_out toward its target by the exact
/// first-order discretization (1 - e^(-dt/tau_p)). Requires dt <= min(tau_p)/5.
void plant_step(PlantState& state, std::span<const DgParams> dgs,
                const LoadSchedule& schedule, double dt);

/// Frequency deviation seen by DG i's measurement: f0_i - f_bus plus
/// zero-mean noise from the sampler.
double measure_deviation(const PlantState& state, std::span<const DgParams> dgs, int i,
                         GaussianNoise& noise);

} // namespace mgsim::plant
