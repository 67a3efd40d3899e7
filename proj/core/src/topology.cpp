#include "mgsim/topology.hpp"

#include <algorithm>
#include <string>

#include "mgsim/error.hpp"

namespace mgsim::topology {

CommGraph CommGraph::build(const std::vector<std::vector<bool>>& adjacency) {
    const int n = static_cast<int>(adjacency.size());
    if (n < 1) {
        throw Error(ErrorCode::adjacency_not_square, "adjacency matrix is empty");
    }
    for (int i = 0; i < n; ++i) {
        if (static_cast<int>(adjacency[i].size()) != n) {
            throw Error(ErrorCode::adjacency_not_square,
                        "row " + std::to_string(i + 1) + " has " +
                            std::to_string(adjacency[i].size()) + " entries, expected " +
                            std::to_string(n));
        }
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (adjacency[i][j] != adjacency[j][i]) {
                throw Error(ErrorCode::adjacency_asymmetric,
                            "entries (" + std::to_string(i + 1) + "," + std::to_string(j + 1) +
                                ") and (" + std::to_string(j + 1) + "," + std::to_string(i + 1) +
                                ") disagree");
            }
        }
    }

    CommGraph g;
    g.n_ = n;
    g.adjacency_.assign(static_cast<size_t>(n) * n, false);
    g.neighbors_.resize(n);
    for (int i = 0; i < n; ++i) {
        g.adjacency_[static_cast<size_t>(i) * n + i] = true;  // diagonal normalized
        for (int j = 0; j < n; ++j) {
            if (i != j && adjacency[i][j]) {
                g.adjacency_[static_cast<size_t>(i) * n + j] = true;
                g.neighbors_[i].push_back(j);
            }
        }
    }

    // Average consensus over a disconnected graph converges to per-component
    // means, a silently wrong answer, so connectivity is a hard error.
    std::vector<bool> seen(n, false);
    std::vector<int> stack{0};
    seen[0] = true;
    int reached = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : g.neighbors_[v]) {
            if (!seen[w]) {
                seen[w] = true;
                ++reached;
                stack.push_back(w);
            }
        }
    }
    if (reached != n) {
        throw Error(ErrorCode::graph_disconnected,
                    "only " + std::to_string(reached) + " of " + std::to_string(n) +
                        " nodes reachable from node 1");
    }
    return g;
}

void CommGraph::check_index(int i) const {
    if (i < 0 || i >= n_) {
        throw Error(ErrorCode::node_index_out_of_range,
                    "node index " + std::to_string(i) + " outside [0, " + std::to_string(n_) + ")");
    }
}

bool CommGraph::linked(int i, int j) const {
    check_index(i);
    check_index(j);
    return adjacency_[static_cast<size_t>(i) * n_ + j];
}

const std::vector<int>& CommGraph::neighbors(int i) const {
    check_index(i);
    return neighbors_[i];
}

int CommGraph::degree(int i) const {
    check_index(i);
    return static_cast<int>(neighbors_[i].size());
}

double WeightMatrix::row_sum(int i) const {
    double sum = 0.0;
    for (int j = 0; j < n_; ++j) sum += at(i, j);
    return sum;
}

WeightMatrix metropolis_weights(const CommGraph& graph) {
    const int n = graph.size();
    WeightMatrix w;
    w.n_ = n;
    w.w_.assign(static_cast<size_t>(n) * n, 0.0);
    w.neighbors_.resize(n);
    for (int i = 0; i < n; ++i) {
        w.neighbors_[i] = graph.neighbors(i);
        double off_diagonal = 0.0;
        for (int j : w.neighbors_[i]) {
            double wij = 1.0 / std::max(graph.degree(i), graph.degree(j));
            w.w_[static_cast<size_t>(i) * n + j] = wij;
            off_diagonal += wij;
        }
        // Row complement; exactly 0 for a node whose neighbors all have
        // degree <= its own (e.g. the hub of a star).
        w.w_[static_cast<size_t>(i) * n + i] = 1.0 - off_diagonal;
    }
    return w;
}

} // namespace mgsim::topology
