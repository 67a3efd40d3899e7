#include "mgsim/error.hpp"

namespace mgsim {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::adjacency_not_square: return "adjacency_not_square";
        case ErrorCode::adjacency_asymmetric: return "adjacency_asymmetric";
        case ErrorCode::graph_disconnected: return "graph_disconnected";
        case ErrorCode::node_index_out_of_range: return "node_index_out_of_range";
        case ErrorCode::neighbor_set_mismatch: return "neighbor_set_mismatch";
        case ErrorCode::non_neighbor_message: return "non_neighbor_message";
        case ErrorCode::non_finite_value: return "non_finite_value";
        case ErrorCode::invalid_parameter: return "invalid_parameter";
        case ErrorCode::invalid_time_step: return "invalid_time_step";
        case ErrorCode::frame_oversized: return "frame_oversized";
        case ErrorCode::frame_truncated: return "frame_truncated";
        case ErrorCode::frame_length_mismatch: return "frame_length_mismatch";
        case ErrorCode::frame_malformed: return "frame_malformed";
        case ErrorCode::frame_unknown_type: return "frame_unknown_type";
        case ErrorCode::non_edge_delivery: return "non_edge_delivery";
        case ErrorCode::event_handler_failure: return "event_handler_failure";
        case ErrorCode::scenario_unknown_key: return "scenario_unknown_key";
        case ErrorCode::scenario_bad_value: return "scenario_bad_value";
        case ErrorCode::scenario_dimension_mismatch: return "scenario_dimension_mismatch";
        case ErrorCode::transport_failure: return "transport_failure";
        case ErrorCode::io_failure: return "io_failure";
    }
    return "unknown_error";
}

} // namespace mgsim
