#pragma once

#include <vector>

namespace mgsim::topology {

/// Undirected agent communication graph. Immutable after construction and
/// safe to share across threads. Node indices are 0-based internally;
/// human-facing output renders them 1-based.
class CommGraph {
public:
    /// Validates and normalizes an n x n adjacency matrix: the diagonal is
    /// forced to true, off-diagonal entries must be symmetric, and the graph
    /// restricted to off-diagonal edges must be connected. Throws Error with
    /// code adjacency_not_square, adjacency_asymmetric or graph_disconnected.
    static CommGraph build(const std::vector<std::vector<bool>>& adjacency);

    int size() const { return n_; }

    /// True iff i == j or a communication link exists between i and j.
    bool linked(int i, int j) const;

    /// Neighbor indices of node i, ascending, excluding i itself.
    const std::vector<int>& neighbors(int i) const;

    /// Number of neighbors of node i (self excluded).
    int degree(int i) const;

private:
    CommGraph() = default;

    int n_ = 0;
    std::vector<bool> adjacency_;               // row-major n x n, diagonal true
    std::vector<std::vector<int>> neighbors_;   // ascending, self excluded

    void check_index(int i) const;
};

/// Symmetric doubly stochastic consensus weights over a CommGraph.
/// w(i, j) is the weight node i assigns to node j's value; entries for
/// non-adjacent pairs are exactly zero and diagonal entries may be zero.
class WeightMatrix {
public:
    int size() const { return n_; }
    double at(int i, int j) const { return w_[static_cast<size_t>(i) * n_ + j]; }

    /// Neighbor indices of node i, ascending (copied from the source graph).
    const std::vector<int>& neighbors(int i) const { return neighbors_[i]; }

    double row_sum(int i) const;

private:
    friend WeightMatrix metropolis_weights(const CommGraph& graph);

    int n_ = 0;
    std::vector<double> w_;
    std::vector<std::vector<int>> neighbors_;
};

/// Metropolis rule: w(i,j) = 1 / max(deg(i), deg(j)) for neighbors i != j,
/// diagonal as the complement of the off-diagonal row sum.
WeightMatrix metropolis_weights(const CommGraph& graph);

} // namespace mgsim::topology
