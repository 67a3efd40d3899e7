#include "mgsim/episode_runner.hpp"

#include "mgsim/error.hpp"

namespace mgsim::scenario {

NetworkEpisodeRunner::NetworkEpisodeRunner(const topology::CommGraph& graph,
                                           const topology::WeightMatrix& weights,
                                           netsim::QosConfig qos, std::uint64_t seed, int rounds,
                                           bool record_history)
    : engine_(weights, rounds, record_history),
      transport_(queue_, graph, qos, seed,
                 [this](int to, const netsim::Envelope& env) {
                     const auto& msg = std::get<consensus::Message>(env.content);
                     for (const consensus::Message& out : engine_.on_message(to, msg)) {
                         transport_.broadcast(out.sender, out);
                     }
                 }) {}

consensus::EpisodeResult NetworkEpisodeRunner::run(const std::vector<double>& initial) {
    const double t_start = queue_.now();
    for (const consensus::Message& msg : engine_.start(initial)) {
        transport_.broadcast(msg.sender, msg);
    }
    // Drain the timeline until the barrier closes on round K everywhere; the
    // clock then reads the instant the last agent finished.
    while (!engine_.completed()) {
        if (!queue_.step()) {
            throw Error(ErrorCode::transport_failure,
                        "episode stalled: no pending deliveries but agents are not done");
        }
    }

    consensus::EpisodeResult result;
    result.values = engine_.values();
    result.rounds = engine_.rounds();
    result.duration = queue_.now() - t_start;
    return result;
}

} // namespace mgsim::scenario
