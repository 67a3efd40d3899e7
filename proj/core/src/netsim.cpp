#include "mgsim/netsim.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <limits>

#include <nlohmann/json.hpp>

#include "mgsim/error.hpp"

namespace mgsim::netsim {

namespace {

void append_double(std::string& out, double v) {
    if (!std::isfinite(v)) {
        throw Error(ErrorCode::non_finite_value, "cannot encode non-finite number");
    }
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);  // shortest round-trip form
    out.append(buf, res.ptr);
}

void append_u64(std::string& out, std::uint64_t v) {
    char buf[24];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

void append_int(std::string& out, int v) {
    char buf[16];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

} // namespace

std::vector<std::uint8_t> encode_frame(const Envelope& envelope) {
    if (envelope.msg_type != kStateBroadcast && envelope.msg_type != kResult) {
        throw Error(ErrorCode::frame_unknown_type,
                    "message type " + std::to_string(envelope.msg_type));
    }

    std::string payload;
    payload.reserve(48);
    payload.push_back('[');
    append_int(payload, envelope.msg_type);
    payload.push_back(',');
    append_u64(payload, envelope.msg_id);
    payload.push_back(',');
    if (const double* scalar = std::get_if<double>(&envelope.content)) {
        append_double(payload, *scalar);
    } else {
        const auto& msg = std::get<consensus::Message>(envelope.content);
        if (msg.sender < 0 || msg.round < 0) {
            throw Error(ErrorCode::frame_malformed, "negative sender or round");
        }
        payload += "{\"sender\":";
        append_int(payload, msg.sender);
        payload += ",\"round\":";
        append_int(payload, msg.round);
        payload += ",\"value\":";
        append_double(payload, msg.value);
        payload.push_back('}');
    }
    payload.push_back(']');

    if (payload.size() >= (1ULL << 32)) {
        throw Error(ErrorCode::frame_oversized, "payload exceeds 2^32 - 1 bytes");
    }

    std::vector<std::uint8_t> frame;
    frame.reserve(4 + payload.size());
    const std::uint32_t len = static_cast<std::uint32_t>(payload.size());
    frame.push_back(static_cast<std::uint8_t>(len >> 24));  // network byte order
    frame.push_back(static_cast<std::uint8_t>(len >> 16));
    frame.push_back(static_cast<std::uint8_t>(len >> 8));
    frame.push_back(static_cast<std::uint8_t>(len));
    frame.insert(frame.end(), payload.begin(), payload.end());
    return frame;
}

namespace {

bool json_is_int(const nlohmann::json& j) {
    return j.is_number_integer() || j.is_number_unsigned();
}

Envelope decode_payload(const char* data, size_t size) {
    nlohmann::json parsed = nlohmann::json::parse(data, data + size, nullptr,
                                                  /*allow_exceptions=*/false);
    if (parsed.is_discarded() || !parsed.is_array() || parsed.size() != 3) {
        throw Error(ErrorCode::frame_malformed,
                    "payload is not a [type, id, content] array");
    }
    if (!json_is_int(parsed[0]) || !json_is_int(parsed[1]) ||
        parsed[1].get<std::int64_t>() < 0) {
        throw Error(ErrorCode::frame_malformed, "message type and id must be integers");
    }

    Envelope env;
    env.msg_type = parsed[0].get<int>();
    if (env.msg_type != kStateBroadcast && env.msg_type != kResult) {
        throw Error(ErrorCode::frame_unknown_type,
                    "message type " + std::to_string(env.msg_type));
    }
    env.msg_id = parsed[1].get<std::uint64_t>();

    const nlohmann::json& content = parsed[2];
    if (content.is_number()) {
        env.content = content.get<double>();
    } else if (content.is_object() && content.size() == 3 && content.contains("sender") &&
               content.contains("round") && content.contains("value") &&
               json_is_int(content["sender"]) && json_is_int(content["round"]) &&
               content["value"].is_number()) {
        consensus::Message msg;
        msg.sender = content["sender"].get<int>();
        msg.round = content["round"].get<int>();
        msg.value = content["value"].get<double>();
        if (msg.sender < 0 || msg.round < 0) {
            throw Error(ErrorCode::frame_malformed, "negative sender or round");
        }
        env.content = msg;
    } else {
        throw Error(ErrorCode::frame_malformed, "unrecognized content shape");
    }
    return env;
}

} // namespace

Envelope decode_frame(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) {
        throw Error(ErrorCode::frame_truncated,
                    "frame holds " + std::to_string(bytes.size()) + " bytes, header needs 4");
    }
    const std::uint32_t len = (static_cast<std::uint32_t>(bytes[0]) << 24) |
                              (static_cast<std::uint32_t>(bytes[1]) << 16) |
                              (static_cast<std::uint32_t>(bytes[2]) << 8) |
                              static_cast<std::uint32_t>(bytes[3]);
    const size_t available = bytes.size() - 4;
    if (available < len) {
        throw Error(ErrorCode::frame_truncated,
                    "header promises " + std::to_string(len) + " payload bytes, only " +
                        std::to_string(available) + " present");
    }
    if (available > len) {
        throw Error(ErrorCode::frame_length_mismatch,
                    std::to_string(available - len) + " bytes beyond the framed payload");
    }
    return decode_payload(reinterpret_cast<const char*>(bytes.data()) + 4, len);
}

void FrameReader::feed(std::span<const std::uint8_t> bytes) {
    buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());
}

bool FrameReader::next(Envelope& out) {
    if (buffer_.size() < 4) return false;
    const std::uint32_t len = (static_cast<std::uint32_t>(buffer_[0]) << 24) |
                              (static_cast<std::uint32_t>(buffer_[1]) << 16) |
                              (static_cast<std::uint32_t>(buffer_[2]) << 8) |
                              static_cast<std::uint32_t>(buffer_[3]);
    if (buffer_.size() - 4 < len) return false;
    out = decode_frame(std::span(buffer_.data(), 4 + static_cast<size_t>(len)));
    buffer_.erase(buffer_.begin(), buffer_.begin() + 4 + static_cast<size_t>(len));
    return true;
}

void QosConfig::validate() const {
    if (!(latency_min > 0.0) || !(latency_min <= latency_max)) {
        throw Error(ErrorCode::invalid_parameter,
                    "latency bounds require 0 < latency_min <= latency_max");
    }
    if (!(loss_prob >= 0.0) || !(loss_prob < 1.0)) {
        throw Error(ErrorCode::invalid_parameter, "loss_prob must lie in [0, 1)");
    }
    if (!(retransmit_timeout > latency_max)) {
        throw Error(ErrorCode::invalid_parameter,
                    "retransmit_timeout must exceed latency_max");
    }
}

double sample_latency(const QosConfig& qos, Rng& rng) {
    return rng.uniform(qos.latency_min, qos.latency_max);
}

const char* event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::message: return "message";
        case EventKind::plant_tick: return "plant_tick";
        case EventKind::episode_start: return "episode_start";
        case EventKind::other: return "other";
    }
    return "unknown";
}

void EventQueue::schedule(double time, EventKind kind, std::function<void()> fn) {
    if (time < now_) {
        throw Error(ErrorCode::invalid_parameter,
                    "cannot schedule an event in the past (t = " + std::to_string(time) +
                        " < now = " + std::to_string(now_) + ")");
    }
    heap_.push(Entry{time, next_seq_++, kind, std::move(fn)});
}

void EventQueue::run_until(double t_end) {
    if (t_end < now_) {
        throw Error(ErrorCode::invalid_parameter, "run_until target precedes the clock");
    }
    while (!heap_.empty() && heap_.top().time <= t_end) {
        step();
    }
    now_ = t_end;
}

bool EventQueue::step() {
    if (heap_.empty()) return false;
    Entry entry = heap_.top();
    heap_.pop();
    now_ = entry.time;
    if (tap_) tap_(entry.kind, entry.time);
    try {
        entry.fn();
    } catch (const Error&) {
        throw;
    } catch (const std::exception& e) {
        throw Error(ErrorCode::event_handler_failure,
                    std::string(event_kind_name(entry.kind)) + " handler at t = " +
                        std::to_string(entry.time) + " s: " + e.what());
    }
    return true;
}

SimTransport::SimTransport(EventQueue& queue, const topology::CommGraph& graph, QosConfig qos,
                           std::uint64_t seed, ReceiveFn on_receive)
    : queue_(queue),
      graph_(graph),
      qos_(qos),
      rng_(seed),
      on_receive_(std::move(on_receive)),
      next_msg_id_(graph.size(), 1) {
    qos_.validate();
}

void SimTransport::send(int from, int to, const Envelope& envelope) {
    if (from == to || !graph_.linked(from, to)) {
        throw Error(ErrorCode::non_edge_delivery,
                    "no link between node " + std::to_string(from + 1) + " and node " +
                        std::to_string(to + 1));
    }
    // Loss is recovered by retransmission after a timeout, so a "lost" send
    // only pushes the delivery later; the draw order (loss first, then
    // latency, per attempt chain at send time) is part of the determinism
    // contract.
    double at = queue_.now();
    while (qos_.loss_prob > 0.0 && rng_.uniform01() < qos_.loss_prob) {
        at += qos_.retransmit_timeout;
    }
    at += sample_latency(qos_, rng_);
    ++messages_sent_;
    queue_.schedule(at, EventKind::message,
                    [this, to, envelope]() { on_receive_(to, envelope); });
}

void SimTransport::broadcast(int from, const consensus::Message& msg) {
    Envelope env;
    env.msg_type = kStateBroadcast;
    env.msg_id = next_msg_id_[from]++;
    env.content = msg;
    for (int to : graph_.neighbors(from)) {
        send(from, to, env);
    }
}

} // namespace mgsim::netsim
