#include "mgsim/tcp_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <string>

#include "mgsim/error.hpp"

namespace mgsim::netsim {

namespace {

[[noreturn]] void fail(const std::string& what) {
    throw Error(ErrorCode::transport_failure, what + ": " + std::strerror(errno));
}

void write_all(int fd, const std::uint8_t* data, size_t size) {
    size_t done = 0;
    while (done < size) {
        ssize_t n = ::send(fd, data + done, size - done, MSG_NOSIGNAL);
        if (n <= 0) fail("send");
        done += static_cast<size_t>(n);
    }
}

bool read_exact(int fd, std::uint8_t* data, size_t size) {
    size_t done = 0;
    while (done < size) {
        ssize_t n = ::recv(fd, data + done, size - done, 0);
        if (n <= 0) return false;  // peer closed or shutdown
        done += static_cast<size_t>(n);
    }
    return true;
}

sockaddr_in loopback(int port) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    return addr;
}

} // namespace

TcpTransport::TcpTransport(const topology::CommGraph& graph, int base_port)
    : graph_(graph), next_msg_id_(graph.size(), 1) {
    const int n = graph.size();

    // Listeners first so every dial below finds its peer ready.
    std::vector<int> listeners(n, -1);
    for (int i = 0; i < n; ++i) {
        bool accepts = false;
        for (int j : graph.neighbors(i)) accepts |= (j < i);
        if (!accepts) continue;
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) fail("socket");
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr = loopback(base_port + i);
        if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
            ::close(fd);
            fail("bind 127.0.0.1:" + std::to_string(base_port + i));
        }
        if (::listen(fd, n) != 0) {
            ::close(fd);
            fail("listen");
        }
        listeners[i] = fd;
    }

    auto add_endpoint = [this](int fd, int owner, int peer) {
        int one = 1;
        ::setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof one);
        auto ep = std::make_unique<Endpoint>();
        ep->fd = fd;
        ep->owner = owner;
        ep->peer = peer;
        route_[{owner, peer}] = ep.get();
        endpoints_.push_back(std::move(ep));
    };

    // Lower index dials higher; a 4-byte id prefix tells the acceptor which
    // edge the new connection serves.
    for (int i = 0; i < n; ++i) {
        for (int j : graph.neighbors(i)) {
            if (j < i) continue;
            int fd = ::socket(AF_INET, SOCK_STREAM, 0);
            if (fd < 0) fail("socket");
            sockaddr_in addr = loopback(base_port + j);
            if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0) {
                ::close(fd);
                fail("connect 127.0.0.1:" + std::to_string(base_port + j));
            }
            std::uint32_t id = htonl(static_cast<std::uint32_t>(i));
            write_all(fd, reinterpret_cast<const std::uint8_t*>(&id), sizeof id);
            add_endpoint(fd, i, j);
        }
    }
    for (int j = 0; j < n; ++j) {
        if (listeners[j] < 0) continue;
        int expected = 0;
        for (int i : graph.neighbors(j)) expected += (i < j);
        for (int c = 0; c < expected; ++c) {
            int fd = ::accept(listeners[j], nullptr, nullptr);
            if (fd < 0) fail("accept");
            std::uint32_t id = 0;
            if (!read_exact(fd, reinterpret_cast<std::uint8_t*>(&id), sizeof id)) {
                ::close(fd);
                fail("handshake read");
            }
            add_endpoint(fd, j, static_cast<int>(ntohl(id)));
        }
        ::close(listeners[j]);
    }

    for (auto& ep : endpoints_) {
        ep->reader = std::thread([this, raw = ep.get()] { reader_loop(raw); });
    }
}

TcpTransport::~TcpTransport() { shutdown(); }

void TcpTransport::reader_loop(Endpoint* endpoint) {
    FrameReader reader;
    std::uint8_t chunk[4096];
    for (;;) {
        ssize_t n = ::recv(endpoint->fd, chunk, sizeof chunk, 0);
        if (n <= 0) return;
        reader.feed(std::span(chunk, static_cast<size_t>(n)));
        Envelope env;
        while (reader.next(env)) {
            std::lock_guard lock(mailbox_mutex_);
            mailbox_.push(Incoming{endpoint->owner, env});
            mailbox_cv_.notify_one();
        }
    }
}

void TcpTransport::send(int from, int to, const Envelope& envelope) {
    auto it = route_.find({from, to});
    if (it == route_.end()) {
        throw Error(ErrorCode::non_edge_delivery,
                    "no connection from node " + std::to_string(from + 1) + " to node " +
                        std::to_string(to + 1));
    }
    std::vector<std::uint8_t> frame = encode_frame(envelope);
    std::lock_guard lock(it->second->write_mutex);
    write_all(it->second->fd, frame.data(), frame.size());
}

void TcpTransport::broadcast(int from, const consensus::Message& msg) {
    Envelope env;
    env.msg_type = kStateBroadcast;
    env.msg_id = next_msg_id_[from]++;
    env.content = msg;
    for (int to : graph_.neighbors(from)) {
        send(from, to, env);
    }
}

std::optional<TcpTransport::Incoming> TcpTransport::receive(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mailbox_mutex_);
    mailbox_cv_.wait_for(lock, timeout, [this] { return !mailbox_.empty() || stopping_; });
    if (mailbox_.empty()) return std::nullopt;
    Incoming incoming = std::move(mailbox_.front());
    mailbox_.pop();
    return incoming;
}

void TcpTransport::shutdown() {
    {
        std::lock_guard lock(mailbox_mutex_);
        if (stopping_) return;
        stopping_ = true;
        mailbox_cv_.notify_all();
    }
    for (auto& ep : endpoints_) {
        if (ep->fd >= 0) ::shutdown(ep->fd, SHUT_RDWR);
    }
    for (auto& ep : endpoints_) {
        if (ep->reader.joinable()) ep->reader.join();
        if (ep->fd >= 0) {
            ::close(ep->fd);
            ep->fd = -1;
        }
    }
}

} // namespace mgsim::netsim
