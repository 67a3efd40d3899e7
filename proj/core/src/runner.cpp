#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "mgsim/control.hpp"
#include "mgsim/episode_runner.hpp"
#include "mgsim/error.hpp"
#include "mgsim/netsim.hpp"
#include "mgsim/plant.hpp"
#include "mgsim/rng.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/tcp_transport.hpp"
#include "mgsim/topology.hpp"

namespace mgsim::scenario {

namespace {

// Substream tags so the latency/loss stream and the measurement-noise stream
// never alias even for adjacent master seeds.
constexpr std::uint64_t kQosStream = 0x71;
constexpr std::uint64_t kNoiseStream = 0x9e;

// Shared state of one coupled run: the plant, the controllers and the
// episode bookkeeping, independent of how messages travel.
struct RunContext {
    const Scenario& s;
    std::vector<plant::DgParams> dgs;
    topology::CommGraph graph;
    topology::WeightMatrix weights;
    plant::PlantState state;
    std::vector<control::PiState> pis;
    GaussianNoise noise;
    consensus::EpisodeEngine engine;

    long n_ticks;
    int episode_counter = 0;       // episodes started
    int last_completed = 0;        // trace column
    double last_residual = 0.0;
    double episode_start_t = 0.0;
    double snapshot_mean = 0.0;
    bool episode_active = false;

    RunResult result;

    explicit RunContext(const Scenario& scenario)
        : s(scenario),
          dgs(scenario.dgs),
          graph(topology::CommGraph::build(scenario.adjacency)),
          weights(topology::metropolis_weights(graph)),
          state(plant::init_steady(dgs, scenario.schedule)),
          pis(scenario.dgs.size()),
          noise(scenario.noise_sigma, mix_seed(scenario.seed, kNoiseStream)),
          engine(weights, scenario.consensus_rounds),
          n_ticks(static_cast<long>(std::floor(scenario.duration / scenario.plant_dt + 1e-9))) {
        result.trace.reserve(static_cast<size_t>(n_ticks) + 1);
        record_row();
    }

    void record_row() {
        TraceRecord row;
        row.t = state.t;
        row.f_bus = state.f_bus;
        row.p_out = state.p_out;
        row.delta_f = state.delta_f_cmd;
        row.held.reserve(pis.size());
        for (const control::PiState& pi : pis) row.held.push_back(pi.held_input());
        row.episode = last_completed;
        row.residual = last_residual;
        result.trace.push_back(std::move(row));
    }

    // One plant tick: controllers first (they integrate the zero-order-held
    // consensus value over dt), then the plant under the fresh corrections.
    void tick() {
        for (size_t i = 0; i < pis.size(); ++i) {
            pis[i].step(s.gains, s.plant_dt);
            state.delta_f_cmd[i] = pis[i].output();
        }
        plant::plant_step(state, dgs, s.schedule, s.plant_dt);
        record_row();
    }

    // Fresh measurements for a new episode; returns the round-0 broadcasts.
    std::vector<consensus::Message> snapshot_and_start(double t_now) {
        episode_active = true;
        ++episode_counter;
        episode_start_t = t_now;
        std::vector<double> measured(dgs.size());
        double sum = 0.0;
        for (size_t i = 0; i < dgs.size(); ++i) {
            measured[i] = plant::measure_deviation(state, dgs, static_cast<int>(i), noise);
            sum += measured[i];
        }
        snapshot_mean = sum / static_cast<double>(dgs.size());
        return engine.start(measured);
    }

    // Marks the episode done at simulated time t_end and re-arms the PIs.
    void finish_episode(double t_end) {
        episode_active = false;
        EpisodeInfo info;
        info.index = episode_counter;
        info.t_start = episode_start_t;
        info.t_end = t_end;
        info.duration = t_end - episode_start_t;
        info.residual = engine.residual();
        info.snapshot_mean = snapshot_mean;
        info.delivered = engine.values();
        for (size_t i = 0; i < pis.size(); ++i) {
            pis[i].set_input(info.delivered[i]);
        }
        last_completed = info.index;
        last_residual = info.residual;
        result.episodes.push_back(std::move(info));
    }

    double tick_time(long k) const { return static_cast<double>(k) * s.plant_dt; }

    // First plant-tick grid point strictly after t.
    double next_grid_after(double t) const {
        double next = tick_time(static_cast<long>(std::floor(t / s.plant_dt)) + 1);
        while (next <= t) next += s.plant_dt;
        return next;
    }
};

void run_simulated(RunContext& ctx) {
    netsim::EventQueue queue;
    const double t_last = ctx.n_ticks > 0 ? ctx.tick_time(ctx.n_ticks) : 0.0;

    // The receive hook and the episode chain refer to each other and to the
    // transport, so both are wired through stable indirections.
    netsim::SimTransport* transport_ptr = nullptr;
    std::function<void(double)> schedule_episode_start;

    auto on_episode_complete = [&ctx, &queue, &schedule_episode_start, t_last] {
        ctx.finish_episode(queue.now());
        // The next episode snapshots at the tick after the result delivery.
        const double next = ctx.next_grid_after(queue.now());
        if (next <= t_last) schedule_episode_start(next);
    };

    netsim::SimTransport transport(
        queue, ctx.graph, ctx.s.qos, mix_seed(ctx.s.seed, kQosStream),
        [&ctx, &transport_ptr, &on_episode_complete](int to, const netsim::Envelope& env) {
            const auto& msg = std::get<consensus::Message>(env.content);
            for (const consensus::Message& m : ctx.engine.on_message(to, msg)) {
                transport_ptr->broadcast(m.sender, m);
            }
            if (ctx.episode_active && ctx.engine.completed()) on_episode_complete();
        });
    transport_ptr = &transport;

    schedule_episode_start = [&ctx, &queue, &transport, &on_episode_complete](double at) {
        queue.schedule(at, netsim::EventKind::episode_start, [&ctx, &queue, &transport,
                                                             &on_episode_complete, at] {
            for (const consensus::Message& m : ctx.snapshot_and_start(at)) {
                transport.broadcast(m.sender, m);
            }
            // Degenerate episodes (zero rounds, single node) finish in place.
            if (ctx.episode_active && ctx.engine.completed()) on_episode_complete();
        });
    };

    std::function<void(long)> schedule_tick = [&ctx, &queue, &schedule_tick](long k) {
        queue.schedule(ctx.tick_time(k), netsim::EventKind::plant_tick, [&ctx, &schedule_tick, k] {
            ctx.tick();
            if (k < ctx.n_ticks) schedule_tick(k + 1);
        });
    };

    if (ctx.n_ticks > 0) schedule_tick(1);
    schedule_episode_start(0.0);
    queue.run_until(t_last);
}

void run_tcp(RunContext& ctx) {
    netsim::TcpTransport transport(ctx.graph, ctx.s.base_port);

    long ticks_done = 0;
    auto advance_through = [&](double t) {
        while (ticks_done < ctx.n_ticks && ctx.tick_time(ticks_done + 1) <= t) {
            ++ticks_done;
            ctx.tick();
        }
    };

    using clock = std::chrono::steady_clock;
    double sim_t = 0.0;
    while (true) {
        for (const consensus::Message& m : ctx.snapshot_and_start(sim_t)) {
            transport.broadcast(m.sender, m);
        }
        const auto wall_start = clock::now();
        while (!ctx.engine.completed()) {
            auto incoming = transport.receive(std::chrono::milliseconds(200));
            if (!incoming) {
                if (clock::now() - wall_start > std::chrono::seconds(30)) {
                    throw Error(ErrorCode::transport_failure,
                                "tcp episode did not complete within 30 s of wall time");
                }
                continue;
            }
            const auto& msg = std::get<consensus::Message>(incoming->envelope.content);
            for (const consensus::Message& m : ctx.engine.on_message(incoming->to, msg)) {
                transport.broadcast(m.sender, m);
            }
        }
        // Wall-clock episode length becomes the simulated episode length:
        // the plant advances by what the real network actually took.
        const double elapsed =
            std::chrono::duration<double>(clock::now() - wall_start).count();
        const double t_complete = sim_t + elapsed;
        if (t_complete > ctx.s.duration) {
            ctx.episode_active = false;  // ran past the end; discard, finish ticks
            break;
        }
        advance_through(t_complete);
        ctx.finish_episode(t_complete);
        sim_t = ctx.next_grid_after(t_complete);
        if (sim_t > ctx.s.duration) break;
        advance_through(sim_t);
    }
    while (ticks_done < ctx.n_ticks) {
        ++ticks_done;
        ctx.tick();
    }
    transport.shutdown();
}

} // namespace

RunResult run_simulation(const Scenario& s) {
    s.validate();
    RunContext ctx(s);
    if (s.transport == TransportMode::simulated) {
        run_simulated(ctx);
    } else {
        run_tcp(ctx);
    }
    ctx.result.summary = summarize(ctx.result.trace, s, ctx.result.episodes);
    return std::move(ctx.result);
}

} // namespace mgsim::scenario
