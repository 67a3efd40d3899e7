#include <doctest.h>

#include <cmath>
#include <numeric>

#include "mgsim/error.hpp"
#include "mgsim/plant.hpp"
#include "mgsim/rng.hpp"
#include "support/oracles.hpp"

using mgsim::Error;
using mgsim::ErrorCode;
using mgsim::GaussianNoise;
using namespace mgsim::plant;

namespace {

GaussianNoise no_noise() { return GaussianNoise(0.0, 0); }

LoadSchedule flat_load(double kw) {
    LoadSchedule schedule;
    schedule.initial_kw = kw;
    return schedule;
}

} // namespace

TEST_CASE("droop characteristic") {
    DgParams dg1;  // f0 = 50, p0 = 35, kp = 0.002
    CHECK(droop_frequency(dg1, 45.0, 0.0) == doctest::Approx(49.98).epsilon(1e-12));
    CHECK(droop_frequency(dg1, 35.0, 0.0) == 50.0);
    CHECK(droop_frequency(dg1, 35.0, 0.05) == doctest::Approx(50.05).epsilon(1e-12));
}

TEST_CASE("balanced set points close the bus at rated frequency exactly") {
    auto dgs = oracles::reference_dgs();
    std::vector<double> zero(5, 0.0);
    BusSolution sol = solve_bus(dgs, zero, 175.0);
    CHECK(sol.f_bus == 50.0);
    for (int i = 0; i < 5; ++i) CHECK(sol.p_star[i] == 35.0);
}

TEST_CASE("loaded bus frequency matches an independent root finder") {
    auto dgs = oracles::reference_dgs();
    std::vector<double> zero(5, 0.0);
    BusSolution sol = solve_bus(dgs, zero, 200.0);

    // Hand value: 50 - 25 / (500 + 5000/11 + 400 + 10000/27 + 1000/3).
    CHECK(sol.f_bus == doctest::Approx(49.987854).epsilon(1e-7));
    const double oracle = oracles::bus_frequency_by_bisection(dgs, zero, 200.0);
    CHECK(sol.f_bus == doctest::Approx(oracle).epsilon(1e-12));

    // Sharing increments proportional to 1/kp; DG1 picks up the most.
    CHECK(sol.p_star[0] == doctest::Approx(41.0731).epsilon(1e-4));
    for (int i = 0; i < 5; ++i) {
        CHECK(droop_frequency(dgs[i], sol.p_star[i], 0.0) ==
              doctest::Approx(sol.f_bus).epsilon(1e-14));
    }

    // Power balance.
    const double total = std::accumulate(sol.p_star.begin(), sol.p_star.end(), 0.0);
    CHECK(total == doctest::Approx(200.0).epsilon(1e-12));
}

TEST_CASE("uniform corrections shift the bus one for one") {
    auto dgs = oracles::reference_dgs();
    std::vector<double> zero(5, 0.0);
    BusSolution base = solve_bus(dgs, zero, 200.0);

    const double c = 50.0 - base.f_bus;  // lift the bus back to rated
    std::vector<double> uniform(5, c);
    BusSolution shifted = solve_bus(dgs, uniform, 200.0);
    CHECK(shifted.f_bus == doctest::Approx(base.f_bus + c).epsilon(1e-12));
    for (int i = 0; i < 5; ++i) {
        CHECK(shifted.p_star[i] == doctest::Approx(base.p_star[i]).epsilon(1e-12));
    }

    // (p_star - P0) * kp identical across DGs under uniform corrections.
    double first = (shifted.p_star[0] - dgs[0].p0) * dgs[0].kp;
    for (int i = 1; i < 5; ++i) {
        CHECK((shifted.p_star[i] - dgs[i].p0) * dgs[i].kp ==
              doctest::Approx(first).epsilon(1e-12));
    }
}

TEST_CASE("steady state is a fixed point of the plant step") {
    auto dgs = oracles::reference_dgs();
    LoadSchedule schedule = flat_load(175.0);
    PlantState state = init_steady(dgs, schedule);
    PlantState before = state;
    plant_step(state, dgs, schedule, 0.01);
    CHECK(state.t == doctest::Approx(before.t + 0.01));
    CHECK(state.f_bus == before.f_bus);
    for (int i = 0; i < 5; ++i) CHECK(state.p_out[i] == before.p_out[i]);
}

TEST_CASE("power filter follows the exact first-order discretization") {
    auto dgs = oracles::reference_dgs();
    LoadSchedule schedule;
    schedule.initial_kw = 175.0;
    schedule.steps = {{0.005, 200.0}};  // lands inside the first tick
    PlantState state = init_steady(dgs, schedule);

    plant_step(state, dgs, schedule, 0.01);
    const double f_star = oracles::bus_frequency_by_bisection(dgs, {0, 0, 0, 0, 0}, 200.0);
    const double p_star_1 = dgs[0].p0 + (dgs[0].f0 - f_star) / dgs[0].kp;
    const double expected = 35.0 + (1.0 - std::exp(-0.01 / 0.2)) * (p_star_1 - 35.0);
    CHECK(expected == doctest::Approx(35.2962).epsilon(1e-4));  // 1 - e^-0.05 ~ 0.048771
    CHECK(state.p_out[0] == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("filter error decays geometrically and balance settles") {
    auto dgs = oracles::reference_dgs();
    LoadSchedule schedule;
    schedule.initial_kw = 175.0;
    schedule.steps = {{0.005, 200.0}};
    PlantState state = init_steady(dgs, schedule);

    const double dt = 0.01;
    plant_step(state, dgs, schedule, dt);  // applies the step
    BusSolution target = solve_bus(dgs, state.delta_f_cmd, 200.0);
    double prev_err = std::abs(state.p_out[0] - target.p_star[0]);
    const double ratio = std::exp(-dt / dgs[0].tau_p);
    for (int k = 0; k < 200; ++k) {
        plant_step(state, dgs, schedule, dt);
        const double err = std::abs(state.p_out[0] - target.p_star[0]);
        CHECK(err == doctest::Approx(prev_err * ratio).epsilon(1e-9));
        prev_err = err;
    }
    // Two more seconds = 10 time constants: outputs carry the whole load.
    for (int k = 0; k < 800; ++k) plant_step(state, dgs, schedule, dt);
    const double total = std::accumulate(state.p_out.begin(), state.p_out.end(), 0.0);
    CHECK(std::abs(total - 200.0) <= 1e-9);
}

TEST_CASE("oversized steps are rejected") {
    auto dgs = oracles::reference_dgs();
    LoadSchedule schedule = flat_load(175.0);
    PlantState state = init_steady(dgs, schedule);
    try {
        plant_step(state, dgs, schedule, 0.05);  // tau_p / 4
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::invalid_time_step);
    }
}

TEST_CASE("load steps apply during the tick that reaches them") {
    auto dgs = oracles::reference_dgs();
    LoadSchedule schedule;
    schedule.initial_kw = 175.0;
    schedule.steps = {{0.05, 200.0}};
    PlantState state = init_steady(dgs, schedule);

    for (int k = 0; k < 4; ++k) plant_step(state, dgs, schedule, 0.01);
    CHECK(state.f_bus == 50.0);
    plant_step(state, dgs, schedule, 0.01);  // tick ending at 0.05
    CHECK(state.p_load == 200.0);
    CHECK(state.f_bus < 50.0);  // frequency declines under the heavier load
}

TEST_CASE("measured deviation is the rated-minus-bus offset") {
    auto dgs = oracles::reference_dgs();
    LoadSchedule schedule = flat_load(175.0);
    PlantState state = init_steady(dgs, schedule);
    GaussianNoise noise = no_noise();
    CHECK(measure_deviation(state, dgs, 0, noise) == 0.0);

    state.f_bus = 49.987854;
    CHECK(measure_deviation(state, dgs, 2, noise) == doctest::Approx(0.012146).epsilon(1e-6));

    try {
        measure_deviation(state, dgs, 5, noise);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::node_index_out_of_range);
    }
}

TEST_CASE("noisy measurements differ but average to the true deviation") {
    auto dgs = oracles::reference_dgs();
    LoadSchedule schedule = flat_load(175.0);
    PlantState state = init_steady(dgs, schedule);
    state.f_bus = 49.99;

    GaussianNoise noise(1e-3, 42);
    const int samples = 20000;
    double sum = 0.0;
    bool any_differ = false;
    double first = 0.0;
    for (int k = 0; k < samples; ++k) {
        double m = measure_deviation(state, dgs, k % 5, noise);
        if (k == 0) first = m;
        any_differ |= (m != first);
        sum += m;
    }
    CHECK(any_differ);
    CHECK(sum / samples == doctest::Approx(0.01).epsilon(3e-3));
}
