#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mgsim/consensus.hpp"
#include "mgsim/rng.hpp"
#include "mgsim/topology.hpp"

namespace mgsim::netsim {

/// Message types carried on the wire.
enum MsgType : int {
    kStateBroadcast = 0,  // request / consensus state broadcast
    kResult = 1,          // result / ack
};

/// Wire message: framed as a 4-byte big-endian payload length followed by
/// the payload, a compact JSON array [msg_type, msg_id, content]. Content is
/// either a bare number or a consensus broadcast rendered as an object with
/// keys in the fixed order sender, round, value.
struct Envelope {
    int msg_type = kStateBroadcast;
    std::uint64_t msg_id = 0;  // monotonically increasing per sender
    std::variant<double, consensus::Message> content;

    bool operator==(const Envelope&) const = default;
};

/// Canonical encoding: no whitespace, fixed key order, numbers in shortest
/// round-trip decimal form. Identical envelopes encode to identical bytes on
/// every platform. Throws frame_oversized for payloads >= 2^32 bytes and
/// non_finite_value for unencodable numbers.
std::vector<std::uint8_t> encode_frame(const Envelope& envelope);

/// Strict inverse over exactly one frame. Distinct error codes:
/// frame_truncated (fewer bytes than the header promises), frame_length_mismatch
/// (trailing bytes beyond the framed payload), frame_malformed (payload is not
/// a valid 3-element message array), frame_unknown_type.
Envelope decode_frame(std::span<const std::uint8_t> bytes);

/// Incremental decoder for stream transports: feed arbitrary byte chunks,
/// complete frames come out in order.
class FrameReader {
public:
    void feed(std::span<const std::uint8_t> bytes);

    /// Extracts the next complete frame, or returns false if more bytes are
    /// needed. Decoding errors propagate from decode_frame.
    bool next(Envelope& out);

    size_t buffered() const { return buffer_.size(); }

private:
    std::vector<std::uint8_t> buffer_;
};

/// Network quality model: uniform latency plus lossy-send recovery modeled
/// as retransmission after a timeout (reliable transport semantics: messages
/// are delayed, never silently dropped).
struct QosConfig {
    double latency_min = 0.002;       // s
    double latency_max = 0.010;       // s
    double loss_prob = 0.0;           // [0, 1)
    double retransmit_timeout = 0.05; // s, must exceed latency_max

    void validate() const;
};

/// One uniform draw on [latency_min, latency_max].
double sample_latency(const QosConfig& qos, Rng& rng);

enum class EventKind {
    message,
    plant_tick,
    episode_start,
    other,
};

const char* event_kind_name(EventKind kind);

/// Deterministic discrete-event timeline. Events fire in nondecreasing time
/// order; ties break by insertion order. Handlers run on the caller's thread
/// and must not block; a throwing handler surfaces as
/// Error(event_handler_failure) with the simulated time and event kind.
class EventQueue {
public:
    double now() const { return now_; }
    size_t pending() const { return heap_.size(); }

    /// Schedules fn at an absolute simulated time >= now().
    void schedule(double time, EventKind kind, std::function<void()> fn);

    /// Pops and dispatches every event with time <= t_end, then advances the
    /// clock to t_end. Optional tap observes (kind, time) of each pop.
    void run_until(double t_end);

    /// Pops and dispatches the single earliest event, advancing the clock to
    /// its time. Returns false on an empty queue (clock untouched).
    bool step();

    using EventTap = std::function<void(EventKind, double)>;
    void set_tap(EventTap tap) { tap_ = std::move(tap); }

private:
    struct Entry {
        double time;
        std::uint64_t seq;
        EventKind kind;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const {
            if (a.time != b.time) return a.time > b.time;
            return a.seq > b.seq;
        }
    };

    double now_ = 0.0;
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    EventTap tap_;
};

/// Simulated transport: schedules envelope deliveries on the event queue with
/// QoS latency and loss-as-delay. Only graph edges may carry traffic.
class SimTransport {
public:
    using ReceiveFn = std::function<void(int to, const Envelope&)>;

    SimTransport(EventQueue& queue, const topology::CommGraph& graph, QosConfig qos,
                 std::uint64_t seed, ReceiveFn on_receive);

    /// Queues one delivery of `envelope` from `from` to `to`. Lost sends are
    /// re-attempted after retransmit_timeout until one goes through, so the
    /// observable effect of loss is added delay. Throws non_edge_delivery if
    /// (from, to) is not an edge.
    void send(int from, int to, const Envelope& envelope);

    /// Stamps a per-sender monotone msg_id and broadcasts a consensus state
    /// message to every neighbor of `from`, in ascending neighbor order.
    void broadcast(int from, const consensus::Message& msg);

    std::uint64_t messages_sent() const { return messages_sent_; }

private:
    EventQueue& queue_;
    const topology::CommGraph& graph_;
    QosConfig qos_;
    Rng rng_;
    ReceiveFn on_receive_;
    std::vector<std::uint64_t> next_msg_id_;
    std::uint64_t messages_sent_ = 0;
};

} // namespace mgsim::netsim
