#include "mgsim/plant.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mgsim/error.hpp"

namespace mgsim::plant {

void DgParams::validate() const {
    if (!(kp > 0.0)) throw Error(ErrorCode::invalid_parameter, "droop coefficient kp must be > 0");
    if (!(tau_p > 0.0)) throw Error(ErrorCode::invalid_parameter, "filter constant tau_p must be > 0");
    if (!(f0 > 0.0)) throw Error(ErrorCode::invalid_parameter, "rated frequency f0 must be > 0");
}

void LoadSchedule::validate() const {
    if (!(initial_kw > 0.0)) {
        throw Error(ErrorCode::invalid_parameter, "initial load must be > 0 kW");
    }
    double prev = -1.0;
    for (const auto& [time, load] : steps) {
        if (time <= prev) {
            throw Error(ErrorCode::invalid_parameter,
                        "load step times must be strictly increasing");
        }
        if (!(load > 0.0)) {
            throw Error(ErrorCode::invalid_parameter, "load step values must be > 0 kW");
        }
        prev = time;
    }
}

double droop_frequency(const DgParams& params, double p_kw, double delta_f_hz) {
    return params.f0 - params.kp * (p_kw - params.p0) + delta_f_hz;
}

BusSolution solve_bus(std::span<const DgParams> dgs, std::span<const double> delta_f,
                      double p_load) {
    if (dgs.empty() || dgs.size() != delta_f.size()) {
        throw Error(ErrorCode::scenario_dimension_mismatch,
                    "solve_bus: " + std::to_string(dgs.size()) + " DGs vs " +
                        std::to_string(delta_f.size()) + " corrections");
    }
    if (!(p_load > 0.0)) {
        throw Error(ErrorCode::invalid_parameter, "load must be > 0 kW");
    }

    // Inverting the droop law per DG: P_i = P0_i + (f0_i + delta_f_i - f) / kp_i.
    // Summing to p_load and solving for f, with f written as f_ref + x so the
    // numerator is built from mHz-scale offsets instead of 50 Hz cancellations:
    //   x = (sum((f0_i - f_ref + delta_f_i) / kp_i) + sum(P0_i) - p_load) / sum(1 / kp_i)
    const double f_ref = dgs[0].f0;
    double inv_kp_sum = 0.0;
    double numerator = -p_load;
    for (size_t i = 0; i < dgs.size(); ++i) {
        inv_kp_sum += 1.0 / dgs[i].kp;
        numerator += (dgs[i].f0 - f_ref + delta_f[i]) / dgs[i].kp + dgs[i].p0;
    }

    BusSolution solution;
    solution.f_bus = f_ref + numerator / inv_kp_sum;
    solution.p_star.resize(dgs.size());
    for (size_t i = 0; i < dgs.size(); ++i) {
        solution.p_star[i] =
            dgs[i].p0 + ((dgs[i].f0 - solution.f_bus) + delta_f[i]) / dgs[i].kp;
    }
    return solution;
}

PlantState init_steady(std::span<const DgParams> dgs, const LoadSchedule& schedule) {
    for (const DgParams& dg : dgs) dg.validate();
    schedule.validate();

    PlantState state;
    state.p_load = schedule.initial_kw;
    state.delta_f_cmd.assign(dgs.size(), 0.0);
    BusSolution solution = solve_bus(dgs, state.delta_f_cmd, state.p_load);
    state.f_bus = solution.f_bus;
    state.p_out = std::move(solution.p_star);
    return state;
}

void plant_step(PlantState& state, std::span<const DgParams> dgs,
                const LoadSchedule& schedule, double dt) {
    double min_tau = dgs.empty() ? 0.0 : dgs[0].tau_p;
    for (const DgParams& dg : dgs) min_tau = std::min(min_tau, dg.tau_p);
    if (!(dt > 0.0) || dt > min_tau / 5.0) {
        throw Error(ErrorCode::invalid_time_step,
                    "plant step dt = " + std::to_string(dt) + " s must be in (0, " +
                        std::to_string(min_tau / 5.0) + "] for tau_p = " +
                        std::to_string(min_tau) + " s");
    }

    const double t_next = state.t + dt;
    while (state.applied_steps < schedule.steps.size() &&
           schedule.steps[state.applied_steps].first <= t_next) {
        state.p_load = schedule.steps[state.applied_steps].second;
        ++state.applied_steps;
    }

    BusSolution solution = solve_bus(dgs, state.delta_f_cmd, state.p_load);
    state.f_bus = solution.f_bus;
    for (size_t i = 0; i < dgs.size(); ++i) {
        // Exact discretization of tau_p * dP/dt = p_star - P, dt-robust by
        // construction (forward Euler would tie results to the step size).
        const double alpha = 1.0 - std::exp(-dt / dgs[i].tau_p);
        state.p_out[i] += alpha * (solution.p_star[i] - state.p_out[i]);
    }
    state.t = t_next;
}

double measure_deviation(const PlantState& state, std::span<const DgParams> dgs, int i,
                         GaussianNoise& noise) {
    if (i < 0 || static_cast<size_t>(i) >= dgs.size()) {
        throw Error(ErrorCode::node_index_out_of_range,
                    "DG index " + std::to_string(i) + " outside [0, " +
                        std::to_string(dgs.size()) + ")");
    }
    return dgs[i].f0 - state.f_bus + noise.sample();
}

} // namespace mgsim::plant
