#pragma once

#include <stdexcept>
#include <string>

namespace mgsim {

// Every failure surfaced by the library carries one of these codes so
// callers (and the CLI exit path) can react to the class of error without
// parsing message text.
enum class ErrorCode {
    adjacency_not_square,
    adjacency_asymmetric,
    graph_disconnected,
    node_index_out_of_range,
    neighbor_set_mismatch,
    non_neighbor_message,
    non_finite_value,
    invalid_parameter,
    invalid_time_step,
    frame_oversized,
    frame_truncated,
    frame_length_mismatch,
    frame_malformed,
    frame_unknown_type,
    non_edge_delivery,
    event_handler_failure,
    scenario_unknown_key,
    scenario_bad_value,
    scenario_dimension_mismatch,
    transport_failure,
    io_failure,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace mgsim
