#include "mgsim/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mgsim/error.hpp"
#include "mgsim/topology.hpp"

namespace mgsim::scenario {

namespace {

// Reference droop coefficients of the five test DGs, Hz/kW.
constexpr double kDefaultKp[5] = {0.002, 0.0022, 0.0025, 0.0027, 0.003};

// 0/1 rows of the 5-node test topology (diagonal included).
constexpr int kDefaultAdjacency[5][5] = {
    {1, 0, 0, 1, 0},
    {0, 1, 1, 0, 0},
    {0, 1, 1, 1, 1},
    {1, 0, 1, 1, 0},
    {0, 0, 1, 0, 1},
};

} // namespace

Scenario::Scenario() {
    adjacency.assign(5, std::vector<bool>(5, false));
    dgs.resize(5);
    for (int i = 0; i < 5; ++i) {
        for (int j = 0; j < 5; ++j) adjacency[i][j] = kDefaultAdjacency[i][j] != 0;
        dgs[i].kp = kDefaultKp[i];
    }
    schedule.initial_kw = 175.0;
    schedule.steps = {{30.0, 200.0}, {60.0, 175.0}};
}

void Scenario::validate() const {
    topology::CommGraph::build(adjacency);  // squareness, symmetry, connectivity
    if (dgs.size() != adjacency.size()) {
        throw Error(ErrorCode::scenario_dimension_mismatch,
                    "scenario defines " + std::to_string(dgs.size()) + " DGs but the graph has " +
                        std::to_string(adjacency.size()) + " nodes");
    }
    for (const plant::DgParams& dg : dgs) dg.validate();
    gains.validate();
    qos.validate();
    schedule.validate();
    if (consensus_rounds < 0) {
        throw Error(ErrorCode::scenario_bad_value, "consensus_rounds must be >= 0");
    }
    if (!(noise_sigma >= 0.0)) {
        throw Error(ErrorCode::scenario_bad_value, "noise_sigma must be >= 0");
    }
    double min_tau = dgs.front().tau_p;
    for (const plant::DgParams& dg : dgs) min_tau = std::min(min_tau, dg.tau_p);
    if (!(plant_dt > 0.0) || plant_dt > min_tau / 5.0) {
        throw Error(ErrorCode::scenario_bad_value,
                    "plant_dt must lie in (0, min(dg_tau_p)/5] = (0, " +
                        std::to_string(min_tau / 5.0) + "]");
    }
    if (!(duration > 0.0)) {
        throw Error(ErrorCode::scenario_bad_value, "duration must be > 0");
    }
    if (!schedule.steps.empty() && schedule.steps.back().first >= duration) {
        throw Error(ErrorCode::scenario_bad_value,
                    "duration (" + std::to_string(duration) +
                        " s) must exceed the last load event at " +
                        std::to_string(schedule.steps.back().first) + " s");
    }
    if (base_port < 1024 || base_port + nodes() > 65535) {
        throw Error(ErrorCode::scenario_bad_value,
                    "base_port must leave room for one port per node below 65535");
    }
}

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& detail) {
    throw Error(ErrorCode::scenario_bad_value, "key '" + key + "': " + detail);
}

double parse_double(const std::string& key, std::string_view token) {
    double v = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
        bad_value(key, "'" + std::string(token) + "' is not a number");
    }
    return v;
}

std::vector<std::string> split_ws(std::string_view text) {
    std::vector<std::string> out;
    std::string token;
    std::istringstream in{std::string(text)};
    while (in >> token) out.push_back(token);
    return out;
}

std::vector<double> parse_list(const std::string& key, std::string_view text) {
    std::vector<double> out;
    for (const std::string& token : split_ws(text)) out.push_back(parse_double(key, token));
    if (out.empty()) bad_value(key, "expected at least one number");
    return out;
}

std::uint64_t parse_u64(const std::string& key, std::string_view token) {
    std::uint64_t v = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), v);
    if (res.ec != std::errc{} || res.ptr != token.data() + token.size()) {
        bad_value(key, "'" + std::string(token) + "' is not a non-negative integer");
    }
    return v;
}

std::vector<std::string> split_rows(std::string_view text) {
    std::vector<std::string> rows;
    std::string current;
    for (char c : text) {
        if (c == ';') {
            rows.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    rows.push_back(current);
    return rows;
}

std::string trim(std::string_view s) {
    size_t b = s.find_first_not_of(" \t\r");
    size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, e - b + 1));
}

// Broadcasts a single value across n DGs, otherwise demands exactly n.
void assign_per_dg(Scenario& s, const std::string& key, const std::vector<double>& values,
                   double plant::DgParams::*field) {
    const size_t n = s.dgs.size();
    if (values.size() == 1) {
        for (plant::DgParams& dg : s.dgs) dg.*field = values[0];
        return;
    }
    if (values.size() != n) {
        throw Error(ErrorCode::scenario_dimension_mismatch,
                    "key '" + key + "' lists " + std::to_string(values.size()) +
                        " values but the scenario has " + std::to_string(n) + " DGs");
    }
    for (size_t i = 0; i < n; ++i) s.dgs[i].*field = values[i];
}

} // namespace

Scenario parse_scenario(std::string_view text) {
    // First pass: flat key -> raw value, diagnosing syntax up front.
    std::map<std::string, std::string> raw;
    size_t line_no = 0;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t eol = text.find('\n', pos);
        std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
        pos = eol == std::string_view::npos ? text.size() + 1 : eol + 1;
        ++line_no;

        if (size_t hash = line.find('#'); hash != std::string_view::npos) {
            line = line.substr(0, hash);
        }
        std::string stripped = trim(line);
        if (stripped.empty()) continue;

        size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorCode::scenario_bad_value,
                        "line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key = trim(std::string_view(stripped).substr(0, eq));
        std::string value = trim(std::string_view(stripped).substr(eq + 1));
        if (key.empty()) {
            throw Error(ErrorCode::scenario_bad_value,
                        "line " + std::to_string(line_no) + ": empty key");
        }
        if (!raw.emplace(key, value).second) {
            throw Error(ErrorCode::scenario_bad_value,
                        "line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
    }

    static const std::vector<std::string> known = {
        "nodes",        "adjacency",     "dg_f0",        "dg_p0",
        "dg_kp",        "dg_tau_p",      "dg_v0",        "dg_q0",
        "dg_kq",        "pi_kp",         "pi_ki",        "pi_out_min",
        "pi_out_max",   "latency_min",   "latency_max",  "loss_prob",
        "retransmit_timeout", "consensus_rounds", "noise_sigma", "load_initial",
        "load_steps",   "plant_dt",      "duration",     "seed",
        "transport",    "base_port",
    };
    for (const auto& [key, value] : raw) {
        if (std::find(known.begin(), known.end(), key) == known.end()) {
            throw Error(ErrorCode::scenario_unknown_key, "unknown scenario key '" + key + "'");
        }
    }

    Scenario s;
    auto get = [&raw](const char* key) -> const std::string* {
        auto it = raw.find(key);
        return it == raw.end() ? nullptr : &it->second;
    };

    // Topology first: it fixes n for the dimension checks below.
    if (const std::string* v = get("adjacency")) {
        std::vector<std::vector<bool>> adjacency;
        for (const std::string& row_text : split_rows(*v)) {
            std::vector<bool> row;
            for (const std::string& token : split_ws(row_text)) {
                if (token == "0") {
                    row.push_back(false);
                } else if (token == "1") {
                    row.push_back(true);
                } else {
                    bad_value("adjacency", "entries must be 0 or 1, got '" + token + "'");
                }
            }
            adjacency.push_back(std::move(row));
        }
        const size_t n = adjacency.size();
        for (size_t i = 0; i < adjacency.size(); ++i) {
            if (adjacency[i].size() != n) {
                throw Error(ErrorCode::scenario_dimension_mismatch,
                            "key 'adjacency': row " + std::to_string(i + 1) + " has " +
                                std::to_string(adjacency[i].size()) + " entries, expected " +
                                std::to_string(n));
            }
        }
        s.adjacency = std::move(adjacency);
        if (s.adjacency.size() != s.dgs.size()) {
            // Default DG set no longer matches; keep defaults broadcastable.
            plant::DgParams base;  // uniform placeholder, droop must be supplied per node
            s.dgs.assign(s.adjacency.size(), base);
            if (!get("dg_kp")) {
                throw Error(ErrorCode::scenario_dimension_mismatch,
                            "key 'adjacency': default droop table lists 5 DGs but the graph has " +
                                std::to_string(s.adjacency.size()) +
                                " nodes; provide dg_kp for every node");
            }
        }
    }
    if (const std::string* v = get("nodes")) {
        const std::uint64_t n = parse_u64("nodes", *v);
        if (n != s.adjacency.size()) {
            throw Error(ErrorCode::scenario_dimension_mismatch,
                        "key 'nodes' says " + std::to_string(n) + " but the adjacency matrix has " +
                            std::to_string(s.adjacency.size()) + " rows");
        }
    }

    if (const std::string* v = get("dg_f0")) assign_per_dg(s, "dg_f0", parse_list("dg_f0", *v), &plant::DgParams::f0);
    if (const std::string* v = get("dg_p0")) assign_per_dg(s, "dg_p0", parse_list("dg_p0", *v), &plant::DgParams::p0);
    if (const std::string* v = get("dg_kp")) assign_per_dg(s, "dg_kp", parse_list("dg_kp", *v), &plant::DgParams::kp);
    if (const std::string* v = get("dg_tau_p")) assign_per_dg(s, "dg_tau_p", parse_list("dg_tau_p", *v), &plant::DgParams::tau_p);
    if (const std::string* v = get("dg_v0")) assign_per_dg(s, "dg_v0", parse_list("dg_v0", *v), &plant::DgParams::v0);
    if (const std::string* v = get("dg_q0")) assign_per_dg(s, "dg_q0", parse_list("dg_q0", *v), &plant::DgParams::q0);
    if (const std::string* v = get("dg_kq")) assign_per_dg(s, "dg_kq", parse_list("dg_kq", *v), &plant::DgParams::kq);

    if (const std::string* v = get("pi_kp")) s.gains.kp = parse_double("pi_kp", *v);
    if (const std::string* v = get("pi_ki")) s.gains.ki = parse_double("pi_ki", *v);
    if (const std::string* v = get("pi_out_min")) s.gains.out_min = parse_double("pi_out_min", *v);
    if (const std::string* v = get("pi_out_max")) s.gains.out_max = parse_double("pi_out_max", *v);

    if (const std::string* v = get("latency_min")) s.qos.latency_min = parse_double("latency_min", *v);
    if (const std::string* v = get("latency_max")) s.qos.latency_max = parse_double("latency_max", *v);
    if (const std::string* v = get("loss_prob")) s.qos.loss_prob = parse_double("loss_prob", *v);
    if (const std::string* v = get("retransmit_timeout")) {
        s.qos.retransmit_timeout = parse_double("retransmit_timeout", *v);
    }

    if (const std::string* v = get("consensus_rounds")) {
        s.consensus_rounds = static_cast<int>(parse_u64("consensus_rounds", *v));
    }
    if (const std::string* v = get("noise_sigma")) s.noise_sigma = parse_double("noise_sigma", *v);

    if (const std::string* v = get("load_initial")) {
        s.schedule.initial_kw = parse_double("load_initial", *v);
    }
    if (const std::string* v = get("load_steps")) {
        s.schedule.steps.clear();
        std::string stripped = trim(*v);
        if (!stripped.empty()) {
            for (const std::string& row_text : split_rows(*v)) {
                std::vector<double> pair = parse_list("load_steps", row_text);
                if (pair.size() != 2) {
                    bad_value("load_steps",
                              "each ';'-separated entry must be 'time_s load_kw', got " +
                                  std::to_string(pair.size()) + " numbers");
                }
                s.schedule.steps.emplace_back(pair[0], pair[1]);
            }
        }
    }

    if (const std::string* v = get("plant_dt")) s.plant_dt = parse_double("plant_dt", *v);
    if (const std::string* v = get("duration")) s.duration = parse_double("duration", *v);
    if (const std::string* v = get("seed")) s.seed = parse_u64("seed", *v);
    if (const std::string* v = get("transport")) {
        if (*v == "sim" || *v == "simulated") {
            s.transport = TransportMode::simulated;
        } else if (*v == "tcp") {
            s.transport = TransportMode::tcp;
        } else {
            bad_value("transport", "expected 'sim' or 'tcp', got '" + *v + "'");
        }
    }
    if (const std::string* v = get("base_port")) {
        s.base_port = static_cast<int>(parse_u64("base_port", *v));
    }

    s.validate();
    return s;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io_failure, "cannot open scenario file " + path.string());
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_scenario(buffer.str());
}

namespace {

void append_number(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, res.ptr);
}

} // namespace

void write_trace_csv(std::span<const TraceRecord> trace, const std::filesystem::path& path) {
    const int n = trace.empty() ? 0 : static_cast<int>(trace.front().p_out.size());
    std::string body = "t,f_bus";
    for (int i = 1; i <= n; ++i) body += ",p_out_" + std::to_string(i);
    for (int i = 1; i <= n; ++i) body += ",delta_f_" + std::to_string(i);
    for (int i = 1; i <= n; ++i) body += ",held_" + std::to_string(i);
    body += ",episode,residual\n";

    for (const TraceRecord& row : trace) {
        append_number(body, row.t);
        body.push_back(',');
        append_number(body, row.f_bus);
        for (double v : row.p_out) {
            body.push_back(',');
            append_number(body, v);
        }
        for (double v : row.delta_f) {
            body.push_back(',');
            append_number(body, v);
        }
        for (double v : row.held) {
            body.push_back(',');
            append_number(body, v);
        }
        body += ',' + std::to_string(row.episode) + ',';
        append_number(body, row.residual);
        body.push_back('\n');
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out || !(out << body)) {
        throw Error(ErrorCode::io_failure, "cannot write trace to " + path.string());
    }
}

Summary summarize(std::span<const TraceRecord> trace, const Scenario& s,
                  std::span<const EpisodeInfo> episodes) {
    if (trace.empty()) {
        throw Error(ErrorCode::invalid_parameter, "cannot summarize an empty trace");
    }

    Summary summary;
    summary.nodes = s.nodes();
    summary.duration = s.duration;
    summary.final_f_bus = trace.back().f_bus;
    summary.final_residual_hz = trace.back().residual;

    const double f_nominal = s.dgs.front().f0;
    const double band = 0.005;  // Hz

    // Nadir: minimum bus frequency once the first load event is in play.
    double first_event = s.schedule.steps.empty() ? 0.0 : s.schedule.steps.front().first;
    summary.nadir_hz = trace.front().f_bus;
    summary.nadir_t = trace.front().t;
    bool nadir_found = false;
    for (const TraceRecord& row : trace) {
        if (row.t < first_event) continue;
        if (!nadir_found || row.f_bus < summary.nadir_hz) {
            summary.nadir_hz = row.f_bus;
            summary.nadir_t = row.t;
            nadir_found = true;
        }
    }

    // Settling per event: the last time the +-5 mHz band is left within the
    // window that ends at the next event (or the end of the run).
    for (size_t k = 0; k < s.schedule.steps.size(); ++k) {
        const double event_t = s.schedule.steps[k].first;
        const double window_end =
            (k + 1 < s.schedule.steps.size()) ? s.schedule.steps[k + 1].first : s.duration;
        SettlingReport report;
        report.event_time = event_t;

        // Half-open window: a row landing exactly on the next event time
        // already reflects that event's step and belongs to its window.
        double last_out = -1.0;
        double last_row_t = -1.0;
        for (const TraceRecord& row : trace) {
            if (row.t <= event_t || (row.t >= window_end && k + 1 < s.schedule.steps.size())) {
                continue;
            }
            last_row_t = row.t;
            if (std::abs(row.f_bus - f_nominal) > band) last_out = row.t;
        }
        if (last_out < 0.0) {
            report.settled = true;   // never left the band
            report.settling_s = 0.0;
        } else if (last_out >= last_row_t) {
            report.settled = false;  // still outside at the window's end
            report.settling_s = window_end - event_t;
        } else {
            report.settled = true;
            report.settling_s = last_out - event_t;
        }
        summary.settling.push_back(report);
    }

    // Sharing mismatch over the steady tail (last quarter) of each
    // post-event window: spread of (p_out_i - P0_i) * kp_i across DGs.
    double mismatch = 0.0;
    for (size_t k = 0; k < s.schedule.steps.size(); ++k) {
        const double event_t = s.schedule.steps[k].first;
        const double window_end =
            (k + 1 < s.schedule.steps.size()) ? s.schedule.steps[k + 1].first : s.duration;
        const double steady_from = event_t + 0.75 * (window_end - event_t);
        for (const TraceRecord& row : trace) {
            if (row.t < steady_from ||
                (row.t >= window_end && k + 1 < s.schedule.steps.size())) {
                continue;
            }
            double lo = 0.0, hi = 0.0;
            for (size_t i = 0; i < row.p_out.size(); ++i) {
                const double share = (row.p_out[i] - s.dgs[i].p0) * s.dgs[i].kp;
                if (i == 0) {
                    lo = hi = share;
                } else {
                    lo = std::min(lo, share);
                    hi = std::max(hi, share);
                }
            }
            mismatch = std::max(mismatch, hi - lo);
        }
    }
    summary.sharing_mismatch_hz = mismatch;

    summary.episode_count = static_cast<int>(episodes.size());
    if (!episodes.empty()) {
        double total = 0.0;
        summary.episode_min_s = episodes.front().duration;
        summary.episode_max_s = episodes.front().duration;
        for (const EpisodeInfo& ep : episodes) {
            total += ep.duration;
            summary.episode_min_s = std::min(summary.episode_min_s, ep.duration);
            summary.episode_max_s = std::max(summary.episode_max_s, ep.duration);
        }
        summary.episode_mean_s = total / static_cast<double>(episodes.size());
        summary.final_residual_hz = episodes.back().residual;
    }
    return summary;
}

std::string format_summary_keyvalue(const Summary& summary) {
    std::string out;
    auto kv = [&out](const std::string& key, double v) {
        out += key;
        out.push_back('=');
        append_number(out, v);
        out.push_back('\n');
    };
    out += "nodes=" + std::to_string(summary.nodes) + "\n";
    kv("duration_s", summary.duration);
    kv("nadir_hz", summary.nadir_hz);
    kv("nadir_t_s", summary.nadir_t);
    for (size_t k = 0; k < summary.settling.size(); ++k) {
        const SettlingReport& r = summary.settling[k];
        kv("event_" + std::to_string(k + 1) + "_t_s", r.event_time);
        out += "event_" + std::to_string(k + 1) + "_settled=" + (r.settled ? "1" : "0") + "\n";
        kv("event_" + std::to_string(k + 1) + "_settling_s", r.settling_s);
    }
    kv("sharing_mismatch_hz", summary.sharing_mismatch_hz);
    out += "episodes=" + std::to_string(summary.episode_count) + "\n";
    kv("episode_mean_s", summary.episode_mean_s);
    kv("episode_min_s", summary.episode_min_s);
    kv("episode_max_s", summary.episode_max_s);
    kv("final_residual_hz", summary.final_residual_hz);
    kv("final_f_bus_hz", summary.final_f_bus);
    return out;
}

std::string format_summary_human(const Summary& summary) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(6);
    out << "microgrid run over " << summary.duration << " s, " << summary.nodes << " DGs\n";
    out << "  frequency nadir    " << summary.nadir_hz << " Hz at t = " << summary.nadir_t
        << " s\n";
    for (size_t k = 0; k < summary.settling.size(); ++k) {
        const SettlingReport& r = summary.settling[k];
        out << "  load event " << (k + 1) << " @ " << r.event_time << " s: ";
        if (r.settled) {
            out << "back inside +-5 mHz after " << r.settling_s << " s\n";
        } else {
            out << "not settled within its window\n";
        }
    }
    out << "  sharing mismatch   " << summary.sharing_mismatch_hz << " Hz\n";
    out << "  episodes           " << summary.episode_count << " (mean " << summary.episode_mean_s
        << " s, min " << summary.episode_min_s << " s, max " << summary.episode_max_s << " s)\n";
    out << "  final residual     " << summary.final_residual_hz << " Hz\n";
    out << "  final bus freq     " << summary.final_f_bus << " Hz\n";
    return out.str();
}

} // namespace mgsim::scenario
