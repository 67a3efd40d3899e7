#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mgsim/control.hpp"
#include "mgsim/netsim.hpp"
#include "mgsim/plant.hpp"

namespace mgsim::scenario {

enum class TransportMode { simulated, tcp };

/// A full run configuration. Default-constructed it reproduces the reference
/// setup: five DGs on the 5-node test topology, load 175 kW stepping to
/// 200 kW at 30 s and back at 60 s, 50 consensus rounds per episode, 2-10 ms
/// uniform message latency.
struct Scenario {
    std::vector<std::vector<bool>> adjacency;  // n x n, defaults to the 5-node test graph
    std::vector<plant::DgParams> dgs;          // one per node
    control::PiGains gains;
    netsim::QosConfig qos;
    plant::LoadSchedule schedule;
    int consensus_rounds = 50;
    double noise_sigma = 0.0;   // Hz, per-DG measurement noise (0 = identical measurements)
    double plant_dt = 0.01;     // s
    double duration = 90.0;     // s
    std::uint64_t seed = 1;
    TransportMode transport = TransportMode::simulated;
    int base_port = 46000;      // tcp mode: node i binds 127.0.0.1:base_port+i

    Scenario();  // the defaults above

    int nodes() const { return static_cast<int>(adjacency.size()); }

    /// Cross-field validation (graph/DG count agreement, duration beyond the
    /// last load event, step-size bound, ...). Throws Error naming the field.
    void validate() const;
};

/// Parses the flat key = value scenario format. Omitted keys keep their
/// defaults; unknown keys, malformed values and dimension mismatches raise
/// distinct error codes naming the offending field.
Scenario parse_scenario(std::string_view text);

/// parse_scenario over a file's contents.
Scenario load_scenario_file(const std::filesystem::path& path);

/// One row per plant tick.
struct TraceRecord {
    double t = 0.0;
    double f_bus = 0.0;
    std::vector<double> p_out;    // kW
    std::vector<double> delta_f;  // Hz, applied secondary correction
    std::vector<double> held;     // Hz, zero-order-held consensus input per PI
    int episode = 0;              // index of the last completed episode, 0 = none
    double residual = 0.0;        // that episode's round-K residual, Hz
};

/// Bookkeeping for one completed consensus episode.
struct EpisodeInfo {
    int index = 0;          // 1-based
    double t_start = 0.0;   // measurement snapshot time, s
    double t_end = 0.0;     // time the last agent reached round K, s
    double duration = 0.0;  // t_end - t_start
    double residual = 0.0;  // round-K spread, Hz
    double snapshot_mean = 0.0;      // arithmetic mean of the snapshot, Hz
    std::vector<double> delivered;   // per-agent value handed to its PI, Hz
};

struct SettlingReport {
    double event_time = 0.0;  // load step time, s
    double settling_s = 0.0;  // last exit from the band, measured from the event
    bool settled = false;     // false: the band was not re-entered for good
};

struct Summary {
    int nodes = 0;
    double duration = 0.0;
    double nadir_hz = 0.0;   // min f_bus after the first load event
    double nadir_t = 0.0;
    std::vector<SettlingReport> settling;  // one per load event
    double sharing_mismatch_hz = 0.0;      // max steady-state spread of (p_out_i - P0_i) * kp_i
    int episode_count = 0;
    double episode_mean_s = 0.0;
    double episode_min_s = 0.0;
    double episode_max_s = 0.0;
    double final_residual_hz = 0.0;
    double final_f_bus = 0.0;
};

struct RunResult {
    std::vector<TraceRecord> trace;
    std::vector<EpisodeInfo> episodes;
    Summary summary;
};

/// Executes the coupled loop: plant ticks every plant_dt, consensus episodes
/// run back-to-back over the configured transport, each completed episode
/// re-arms every PI through its zero-order hold.
RunResult run_simulation(const Scenario& s);

/// Header plus one line per record; numbers in shortest round-trip decimal
/// form, so equal traces are byte-identical files.
void write_trace_csv(std::span<const TraceRecord> trace, const std::filesystem::path& path);

/// Nadir, per-event settling against the +-5 mHz band, steady-state sharing
/// mismatch and episode timing statistics.
Summary summarize(std::span<const TraceRecord> trace, const Scenario& s,
                  std::span<const EpisodeInfo> episodes);

/// Machine-readable key=value block.
std::string format_summary_keyvalue(const Summary& summary);

/// Human-readable report.
std::string format_summary_human(const Summary& summary);

} // namespace mgsim::scenario
