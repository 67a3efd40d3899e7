#pragma once

#include <cstdint>
#include <vector>

#include "mgsim/consensus.hpp"
#include "mgsim/netsim.hpp"
#include "mgsim/topology.hpp"

namespace mgsim::scenario {

/// Runs message-driven consensus episodes back-to-back on one simulated
/// timeline, without a plant in the loop. Episode k+1 starts at the
/// simulated instant episode k completed.
class NetworkEpisodeRunner {
public:
    NetworkEpisodeRunner(const topology::CommGraph& graph,
                         const topology::WeightMatrix& weights, netsim::QosConfig qos,
                         std::uint64_t seed, int rounds, bool record_history = false);

    /// One complete episode from `initial`; the result's duration is the
    /// simulated time from the initial broadcasts to the last agent
    /// reaching round K.
    consensus::EpisodeResult run(const std::vector<double>& initial);

    /// Round-by-round value vectors of the last run (when recording).
    const std::vector<std::vector<double>>& history() const { return engine_.history(); }

    double now() const { return queue_.now(); }

private:
    netsim::EventQueue queue_;
    consensus::EpisodeEngine engine_;
    netsim::SimTransport transport_;
};

} // namespace mgsim::scenario
