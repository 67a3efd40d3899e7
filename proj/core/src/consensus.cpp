#include "mgsim/consensus.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mgsim/error.hpp"

namespace mgsim::consensus {

double local_update(double self_value,
                    std::span<const std::pair<int, double>> neighbor_values,
                    const topology::WeightMatrix& weights, int i) {
    const std::vector<int>& expected = weights.neighbors(i);
    if (neighbor_values.size() != expected.size()) {
        throw Error(ErrorCode::neighbor_set_mismatch,
                    "node " + std::to_string(i + 1) + " expects " +
                        std::to_string(expected.size()) + " neighbor values, got " +
                        std::to_string(neighbor_values.size()));
    }
    if (!std::isfinite(self_value)) {
        throw Error(ErrorCode::non_finite_value,
                    "node " + std::to_string(i + 1) + " has non-finite state");
    }

    // Re-sort into ascending neighbor order; the fixed evaluation order is
    // what makes batch and message-driven execution identical at the bit level.
    std::vector<std::pair<int, double>> sorted(neighbor_values.begin(), neighbor_values.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double acc = 0.0;
    size_t k = 0;
    for (const auto& [node, value] : sorted) {
        if (node != expected[k]) {
            throw Error(ErrorCode::neighbor_set_mismatch,
                        "node " + std::to_string(node + 1) + " is not the expected neighbor " +
                            std::to_string(expected[k] + 1) + " of node " + std::to_string(i + 1));
        }
        if (!std::isfinite(value)) {
            throw Error(ErrorCode::non_finite_value,
                        "value from node " + std::to_string(node + 1) + " is not finite");
        }
        acc += weights.at(i, node) * value;
        ++k;
    }
    acc += weights.at(i, i) * self_value;
    return acc;
}

EpisodeResult run_episode_sync(const std::vector<double>& initial,
                               const topology::WeightMatrix& weights, int rounds) {
    const int n = weights.size();
    if (static_cast<int>(initial.size()) != n) {
        throw Error(ErrorCode::scenario_dimension_mismatch,
                    "initial vector has " + std::to_string(initial.size()) +
                        " entries, weight matrix has " + std::to_string(n));
    }
    if (rounds < 0) {
        throw Error(ErrorCode::invalid_parameter, "round count must be >= 0");
    }

    EpisodeResult result;
    result.values = initial;
    result.rounds = rounds;

    std::vector<double> next(n);
    std::vector<std::pair<int, double>> incoming;
    for (int k = 0; k < rounds; ++k) {
        for (int i = 0; i < n; ++i) {
            incoming.clear();
            for (int j : weights.neighbors(i)) {
                incoming.emplace_back(j, result.values[j]);
            }
            next[i] = local_update(result.values[i], incoming, weights, i);
        }
        result.values = next;
    }
    return result;
}

double spread(std::span<const double> values) {
    if (values.empty()) return 0.0;
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    return *hi - *lo;
}

AgentState::AgentState(int id, double initial_value, const topology::WeightMatrix& weights)
    : id_(id), value_(initial_value), neighbors_(weights.neighbors(id)) {
    if (!std::isfinite(initial_value)) {
        throw Error(ErrorCode::non_finite_value,
                    "agent " + std::to_string(id + 1) + " initial value is not finite");
    }
}

void AgentState::handle_message(const Message& msg) {
    if (!std::binary_search(neighbors_.begin(), neighbors_.end(), msg.sender)) {
        throw Error(ErrorCode::non_neighbor_message,
                    "agent " + std::to_string(id_ + 1) + " received a message from node " +
                        std::to_string(msg.sender + 1) + ", which is not a neighbor");
    }
    if (!std::isfinite(msg.value)) {
        throw Error(ErrorCode::non_finite_value,
                    "message value from node " + std::to_string(msg.sender + 1) +
                        " is not finite");
    }
    // Rounds below the current one were already consumed; dropping them (and
    // exact duplicates) keeps delivery idempotent.
    if (msg.round < round_) return;
    inbox_.emplace(std::make_pair(msg.sender, msg.round), msg.value);
}

std::optional<Message> AgentState::try_advance(const topology::WeightMatrix& weights) {
    std::vector<std::pair<int, double>> incoming;
    incoming.reserve(neighbors_.size());
    for (int j : neighbors_) {
        auto it = inbox_.find({j, round_});
        if (it == inbox_.end()) return std::nullopt;  // barrier not met
        incoming.emplace_back(j, it->second);
    }
    // Same code path as the batch oracle, so the two executions agree
    // bit-for-bit round by round.
    value_ = local_update(value_, incoming, weights, id_);
    for (int j : neighbors_) {
        inbox_.erase({j, round_});
    }
    ++round_;
    return Message{id_, round_, value_};
}

EpisodeEngine::EpisodeEngine(const topology::WeightMatrix& weights, int rounds,
                             bool record_history)
    : weights_(weights), rounds_(rounds), record_history_(record_history) {
    if (rounds < 0) {
        throw Error(ErrorCode::invalid_parameter, "round count must be >= 0");
    }
}

std::vector<Message> EpisodeEngine::start(const std::vector<double>& initial) {
    const int n = weights_.size();
    if (static_cast<int>(initial.size()) != n) {
        throw Error(ErrorCode::scenario_dimension_mismatch,
                    "initial vector has " + std::to_string(initial.size()) +
                        " entries, weight matrix has " + std::to_string(n));
    }
    agents_.clear();
    agents_.reserve(n);
    done_count_ = 0;
    history_.clear();
    if (record_history_) history_.emplace_back(initial);

    std::vector<Message> broadcasts;
    broadcasts.reserve(n);
    for (int i = 0; i < n; ++i) {
        agents_.emplace_back(i, initial[i], weights_);
        if (rounds_ == 0) {
            ++done_count_;
        } else {
            broadcasts.push_back(Message{i, 0, initial[i]});
        }
    }
    // An agent with no neighbors never receives anything; its barrier is
    // trivially met every round, so it runs to completion on the spot.
    for (AgentState& agent : agents_) {
        if (weights_.neighbors(agent.id()).empty() && rounds_ > 0) {
            advance_loop(agent, broadcasts);
        }
    }
    return broadcasts;
}

void EpisodeEngine::advance_loop(AgentState& agent, std::vector<Message>& broadcasts) {
    // One delivery can unlock several rounds when the neighbors ran ahead.
    while (agent.round() < rounds_) {
        std::optional<Message> out = agent.try_advance(weights_);
        if (!out) break;
        if (record_history_) {
            if (static_cast<int>(history_.size()) <= agent.round()) {
                history_.resize(agent.round() + 1,
                                std::vector<double>(agents_.size(),
                                                    std::numeric_limits<double>::quiet_NaN()));
            }
            history_[agent.round()][agent.id()] = agent.value();
        }
        if (agent.round() == rounds_) {
            ++done_count_;  // round-K broadcast is never consumed; drop it
        } else {
            broadcasts.push_back(*out);
        }
    }
}

std::vector<Message> EpisodeEngine::on_message(int to, const Message& msg) {
    if (to < 0 || to >= static_cast<int>(agents_.size())) {
        throw Error(ErrorCode::node_index_out_of_range,
                    "delivery to unknown agent " + std::to_string(to + 1));
    }
    AgentState& agent = agents_[to];
    agent.handle_message(msg);

    std::vector<Message> broadcasts;
    advance_loop(agent, broadcasts);
    return broadcasts;
}

std::vector<double> EpisodeEngine::values() const {
    std::vector<double> v;
    v.reserve(agents_.size());
    for (const AgentState& a : agents_) v.push_back(a.value());
    return v;
}

double EpisodeEngine::residual() const {
    std::vector<double> v = values();
    return spread(v);
}

} // namespace mgsim::consensus
