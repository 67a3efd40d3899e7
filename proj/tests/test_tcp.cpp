#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "mgsim/error.hpp"
#include "mgsim/scenario.hpp"
#include "mgsim/tcp_transport.hpp"
#include "mgsim/topology.hpp"
#include "support/oracles.hpp"

using namespace mgsim;
using mgsim::consensus::Message;
using mgsim::netsim::Envelope;
using mgsim::netsim::TcpTransport;

TEST_CASE("frames cross real loopback sockets intact") {
    auto graph = topology::CommGraph::build(oracles::reference_adjacency());
    TcpTransport transport(graph, 46750);

    Envelope env{0, 41, Message{0, 7, 0.0121463}};
    transport.send(0, 3, env);
    auto incoming = transport.receive(std::chrono::milliseconds(2000));
    REQUIRE(incoming.has_value());
    CHECK(incoming->to == 3);
    CHECK(incoming->envelope == env);

    // Reverse direction on the same edge.
    transport.send(3, 0, env);
    incoming = transport.receive(std::chrono::milliseconds(2000));
    REQUIRE(incoming.has_value());
    CHECK(incoming->to == 0);

    // Off-topology send is refused before touching a socket.
    CHECK_THROWS_AS(transport.send(0, 2, env), Error);
    transport.shutdown();
}

TEST_CASE("broadcast reaches every neighbor exactly once") {
    auto graph = topology::CommGraph::build(oracles::reference_adjacency());
    TcpTransport transport(graph, 46760);

    transport.broadcast(2, Message{2, 0, 1.5});  // hub: neighbors 2, 4, 5 (1-based)
    int received = 0;
    bool seen[5] = {false, false, false, false, false};
    while (received < 3) {
        auto incoming = transport.receive(std::chrono::milliseconds(2000));
        REQUIRE(incoming.has_value());
        CHECK_FALSE(seen[incoming->to]);
        seen[incoming->to] = true;
        ++received;
    }
    CHECK(seen[1]);
    CHECK(seen[3]);
    CHECK(seen[4]);
    CHECK_FALSE(transport.receive(std::chrono::milliseconds(100)).has_value());
    transport.shutdown();
}

TEST_CASE("port collisions surface as transport failures") {
    auto graph = topology::CommGraph::build(oracles::reference_adjacency());
    TcpTransport first(graph, 46780);
    try {
        TcpTransport second(graph, 46780);
        FAIL("expected a throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::transport_failure);
        CHECK(std::string(e.what()).find("bind") != std::string::npos);
    }
    first.shutdown();
}

TEST_CASE("full scenario over the tcp transport") {
    scenario::Scenario s;
    s.transport = scenario::TransportMode::tcp;
    s.base_port = 46770;
    s.duration = 2.0;
    s.schedule.steps = {{0.5, 200.0}};

    scenario::RunResult r = scenario::run_simulation(s);
    CHECK(r.trace.size() == 201);
    REQUIRE(!r.episodes.empty());

    // Wall-clock episodes still deliver agreeing values to every PI.
    for (const scenario::EpisodeInfo& ep : r.episodes) {
        CHECK(ep.residual <= 1e-9);
        CHECK(ep.duration >= 0.0);
        for (double v : ep.delivered) {
            CHECK(std::abs(v - ep.snapshot_mean) <= ep.residual + 1e-12);
        }
    }
    for (const scenario::TraceRecord& row : r.trace) {
        CHECK(std::isfinite(row.f_bus));
    }
    // The load step pushes the bus off nominal; secondary control reacts.
    CHECK(r.summary.nadir_hz < 50.0);
}
