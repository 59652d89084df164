#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hwg/errors.hpp"

namespace hwg {

class MetricGraph;

// A point of the metric graph: either a vertex or an interior point of an
// edge, with offset measured from the edge's endpoint_a. Canonical form keeps
// edge offsets strictly inside (0, length); offsets 0 / length collapse to
// the corresponding VertexRef. Comparison is exact structural equality after
// canonicalization (no epsilon merging here; atom merging lives in the
// measure layer).
struct GraphPoint {
    std::int32_t vertex = -1; // >= 0 iff the point is a vertex
    std::int32_t edge = -1;   // >= 0 iff the point is interior to an edge
    double offset = 0.0;      // from endpoint_a, only meaningful when edge >= 0

    bool is_vertex() const { return vertex >= 0; }

    friend bool operator==(const GraphPoint& a, const GraphPoint& b) {
        if (a.is_vertex() != b.is_vertex()) return false;
        if (a.is_vertex()) return a.vertex == b.vertex;
        return a.edge == b.edge && a.offset == b.offset;
    }
    friend bool operator!=(const GraphPoint& a, const GraphPoint& b) { return !(a == b); }

    // Deterministic total order: vertices first by index, then edge points by
    // (edge, offset). Used for canonical atom ordering.
    friend bool operator<(const GraphPoint& a, const GraphPoint& b) {
        if (a.is_vertex() != b.is_vertex()) return a.is_vertex();
        if (a.is_vertex()) return a.vertex < b.vertex;
        if (a.edge != b.edge) return a.edge < b.edge;
        return a.offset < b.offset;
    }

    std::string to_string() const;
};

GraphPoint vertex_point(int v);
GraphPoint edge_point(const MetricGraph& g, int edge, double offset);

struct GraphEdge {
    std::int32_t a = 0;
    std::int32_t b = 0;
    double length = 0.0;
};

// Finite metric graph with positive edge lengths. Immutable after
// construction; all operations are pure, so instances can be shared freely
// across threads. Desk scale: all-pairs vertex distances are precomputed.
class MetricGraph {
public:
    MetricGraph(int vertex_count, std::vector<GraphEdge> edges,
                std::vector<std::string> vertex_labels = {});

    int vertex_count() const { return n_; }
    int edge_count() const { return static_cast<int>(edges_.size()); }
    const GraphEdge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
    const std::vector<GraphEdge>& edges() const { return edges_; }
    bool is_tree() const { return tree_; }
    const std::string& vertex_label(int v) const { return labels_[static_cast<std::size_t>(v)]; }

    double vertex_distance(int a, int b) const { return dist_[idx(a, b)]; }

    // Shortest-path length between two (canonical) points.
    double distance(const GraphPoint& p, const GraphPoint& q) const;

    // Point at arclength t * distance(p, q) from p along the shortest path.
    // Requires the shortest path to be unique; ties raise ambiguous_geodesic
    // carrying the tied path count (never silently tie-broken).
    GraphPoint geodesic_point(const GraphPoint& p, const GraphPoint& q, double t) const;

    void validate_point(const GraphPoint& p) const;

    double total_edge_length() const { return total_length_; }

private:
    friend GraphPoint edge_point(const MetricGraph& g, int edge, double offset);

    std::size_t idx(int a, int b) const {
        return static_cast<std::size_t>(a) * static_cast<std::size_t>(n_) +
               static_cast<std::size_t>(b);
    }

    struct Route;
    std::vector<Route> enumerate_routes(const GraphPoint& p, const GraphPoint& q) const;
    std::vector<int> reconstruct_vertex_path(int from, int to) const;

    int n_ = 0;
    bool tree_ = false;
    double total_length_ = 0.0;
    double tol_ = 1e-12;
    std::vector<GraphEdge> edges_;
    std::vector<std::string> labels_;
    std::vector<std::vector<int>> adjacency_; // vertex -> incident edge indices
    std::vector<double> dist_;                // n x n shortest vertex distances
    std::vector<std::int64_t> path_count_;    // n x n shortest-path multiplicities (saturating)
};

// Star-shaped tree: hub at vertex 0, leaf i at vertex i with edge length
// leaf_lengths[i-1].
MetricGraph star_tree(const std::vector<double>& leaf_lengths);

// Single-segment graph [0, length] (two vertices, one edge). Convenience for
// one-dimensional scenarios.
MetricGraph segment(double length);

} // namespace hwg
