#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <thread>
#include <vector>

#include "mgsim/netsim.hpp"
#include "mgsim/topology.hpp"

namespace mgsim::netsim {

/// Real loopback TCP transport carrying the frame format of encode_frame.
/// Every graph edge becomes one TCP connection: node i listens on
/// 127.0.0.1:base_port+i and the lower-indexed endpoint dials the higher.
/// One reader thread per connection endpoint decodes frames and pushes them
/// into a single ordered mailbox; the caller's thread drains it. This is an
/// integration/demonstration mode: timings are wall clock, not deterministic.
class TcpTransport {
public:
    struct Incoming {
        int to = 0;
        Envelope envelope;
    };

    TcpTransport(const topology::CommGraph& graph, int base_port);
    ~TcpTransport();

    TcpTransport(const TcpTransport&) = delete;
    TcpTransport& operator=(const TcpTransport&) = delete;

    /// Writes one frame on the (from, to) edge connection. Throws
    /// non_edge_delivery off-topology and transport_failure on socket errors.
    void send(int from, int to, const Envelope& envelope);

    /// Stamps a per-sender msg_id and sends a consensus broadcast to every
    /// neighbor of `from`.
    void broadcast(int from, const consensus::Message& msg);

    /// Blocks up to timeout for the next decoded frame.
    std::optional<Incoming> receive(std::chrono::milliseconds timeout);

    void shutdown();

private:
    struct Endpoint {
        int fd = -1;
        int owner = -1;  // node whose inbound frames arrive here
        int peer = -1;
        std::thread reader;
        std::mutex write_mutex;
    };

    const topology::CommGraph& graph_;
    std::vector<std::uint64_t> next_msg_id_;
    // edge (from, to) -> endpoint whose writes reach `to`
    std::map<std::pair<int, int>, Endpoint*> route_;
    std::vector<std::unique_ptr<Endpoint>> endpoints_;

    std::mutex mailbox_mutex_;
    std::condition_variable mailbox_cv_;
    std::queue<Incoming> mailbox_;
    bool stopping_ = false;

    void reader_loop(Endpoint* endpoint);
};

} // namespace mgsim::netsim
