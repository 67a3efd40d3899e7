#pragma once

#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "mgsim/topology.hpp"

namespace mgsim::consensus {

/// One consensus state broadcast: node `sender` announces its round-`round`
/// value. This is the payload carried by netsim envelopes.
struct Message {
    int sender = 0;
    int round = 0;
    double value = 0.0;

    bool operator==(const Message&) const = default;
};

/// Weighted local averaging step for node i. `neighbor_values` must cover
/// exactly the neighbor set of i (any order); the sum is evaluated in
/// ascending neighbor order with the self term last, which fixes the
/// floating point result bit-for-bit across execution styles.
double local_update(double self_value,
                    std::span<const std::pair<int, double>> neighbor_values,
                    const topology::WeightMatrix& weights, int i);

struct EpisodeResult {
    std::vector<double> values;  // per-node state after `rounds` rounds, Hz
    int rounds = 0;
    double duration = 0.0;       // simulated episode time, s (0 for the batch path)
};

/// Batch execution of `rounds` synchronous rounds: the reference the
/// message-driven path must reproduce exactly in a lossless network.
EpisodeResult run_episode_sync(const std::vector<double>& initial,
                               const topology::WeightMatrix& weights, int rounds);

/// max(values) - min(values); the post-hoc convergence residual.
double spread(std::span<const double> values);

/// Per-agent synchronous-round state machine. Confined to one logical actor;
/// all interaction goes through messages. An agent at round k holds value
/// x_i[k], has broadcast it, and is waiting for every neighbor's round-k
/// value before computing round k+1.
class AgentState {
public:
    AgentState(int id, double initial_value, const topology::WeightMatrix& weights);

    int id() const { return id_; }
    int round() const { return round_; }
    double value() const { return value_; }
    size_t inbox_size() const { return inbox_.size(); }

    /// Buffers a neighbor's broadcast. Duplicates of an already seen
    /// (sender, round) pair and messages for rounds this agent has already
    /// consumed are discarded idempotently. A message from a non-neighbor
    /// throws Error(non_neighbor_message): the topology is misconfigured.
    void handle_message(const Message& msg);

    /// If every neighbor's value for the current round is buffered, applies
    /// the local update, advances the round, drops the consumed entries and
    /// returns the new state for broadcast. Otherwise returns nullopt and
    /// the state is unchanged. Messages for future rounds stay buffered.
    std::optional<Message> try_advance(const topology::WeightMatrix& weights);

private:
    int id_;
    int round_ = 0;
    double value_;
    std::vector<int> neighbors_;                       // ascending
    std::map<std::pair<int, int>, double> inbox_;      // (sender, round) -> value
};

/// Drives one episode of K rounds across all agents. Transport-agnostic: the
/// caller feeds deliveries in and fans the returned broadcasts out. Agents
/// whose round counter reaches K stop; their final broadcast is suppressed
/// (no one consumes round-K values).
class EpisodeEngine {
public:
    EpisodeEngine(const topology::WeightMatrix& weights, int rounds,
                  bool record_history = false);

    /// Resets all agents to `initial` and returns the round-0 broadcasts,
    /// one per agent in ascending id order.
    std::vector<Message> start(const std::vector<double>& initial);

    /// Delivers one message to agent `to` and runs it as far as the round
    /// barrier allows. Returns the broadcasts to fan out, in the order the
    /// advances happened.
    std::vector<Message> on_message(int to, const Message& msg);

    bool completed() const { return done_count_ == static_cast<int>(agents_.size()); }
    int rounds() const { return rounds_; }

    /// Current per-agent values (final result once completed()).
    std::vector<double> values() const;

    /// max - min of the current values; the round-K residual once complete.
    double residual() const;

    /// Per-round value vectors, history[k][i] = agent i's value at round k.
    /// Only filled when record_history was requested.
    const std::vector<std::vector<double>>& history() const { return history_; }

private:
    const topology::WeightMatrix& weights_;
    int rounds_;
    bool record_history_;
    std::vector<AgentState> agents_;
    int done_count_ = 0;
    std::vector<std::vector<double>> history_;

    void advance_loop(AgentState& agent, std::vector<Message>& broadcasts);
};

} // namespace mgsim::consensus
