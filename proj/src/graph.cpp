#include "hwg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <sstream>

namespace hwg {

namespace {
constexpr std::int64_t kCountCap = 1'000'000'000;
}

std::string GraphPoint::to_string() const {
    std::ostringstream os;
    if (is_vertex()) {
        os << "v" << vertex;
    } else {
        os << "e" << edge << "@" << offset;
    }
    return os.str();
}

GraphPoint vertex_point(int v) {
    GraphPoint p;
    p.vertex = v;
    return p;
}

GraphPoint edge_point(const MetricGraph& g, int edge, double offset) {
    if (edge < 0 || edge >= g.edge_count())
        throw invalid_argument("edge_point: edge index out of range");
    const GraphEdge& e = g.edge(edge);
    if (offset < 0.0 || offset > e.length)
        throw invalid_argument("edge_point: offset outside [0, length]");
    if (offset == 0.0) return vertex_point(e.a);
    if (offset == e.length) return vertex_point(e.b);
    GraphPoint p;
    p.edge = edge;
    p.offset = offset;
    return p;
}

MetricGraph::MetricGraph(int vertex_count, std::vector<GraphEdge> edges,
                         std::vector<std::string> vertex_labels)
    : n_(vertex_count), edges_(std::move(edges)), labels_(std::move(vertex_labels)) {
    if (n_ <= 0) throw invalid_argument("MetricGraph: needs at least one vertex");
    if (labels_.empty()) {
        labels_.resize(static_cast<std::size_t>(n_));
        for (int v = 0; v < n_; ++v) labels_[static_cast<std::size_t>(v)] = "v" + std::to_string(v);
    }
    if (static_cast<int>(labels_.size()) != n_)
        throw invalid_argument("MetricGraph: label count != vertex count");

    adjacency_.assign(static_cast<std::size_t>(n_), {});
    std::vector<std::pair<int, int>> seen;
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const GraphEdge& e = edges_[i];
        if (e.a < 0 || e.a >= n_ || e.b < 0 || e.b >= n_)
            throw invalid_argument("MetricGraph: edge endpoint out of range");
        if (e.a == e.b) throw invalid_argument("MetricGraph: self-loop edges not supported");
        if (!(e.length > 0.0)) throw invalid_argument("MetricGraph: edge length must be > 0");
        auto key = std::minmax(e.a, e.b);
        if (std::find(seen.begin(), seen.end(), std::make_pair(key.first, key.second)) != seen.end())
            throw invalid_argument("MetricGraph: duplicate edge between the same vertex pair");
        seen.emplace_back(key.first, key.second);
        adjacency_[static_cast<std::size_t>(e.a)].push_back(static_cast<int>(i));
        adjacency_[static_cast<std::size_t>(e.b)].push_back(static_cast<int>(i));
        total_length_ += e.length;
    }
    tol_ = 1e-12 * std::max(1.0, total_length_);

    // All-pairs Dijkstra with shortest-path counting. Counting saturates so
    // huge multiplicities stay representable; only 1-vs-more matters.
    const double inf = std::numeric_limits<double>::infinity();
    dist_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), inf);
    path_count_.assign(dist_.size(), 0);
    for (int s = 0; s < n_; ++s) {
        std::vector<double> d(static_cast<std::size_t>(n_), inf);
        std::vector<std::int64_t> cnt(static_cast<std::size_t>(n_), 0);
        d[static_cast<std::size_t>(s)] = 0.0;
        cnt[static_cast<std::size_t>(s)] = 1;
        using Item = std::pair<double, int>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> pq;
        pq.emplace(0.0, s);
        std::vector<char> settled(static_cast<std::size_t>(n_), 0);
        while (!pq.empty()) {
            auto [dv, v] = pq.top();
            pq.pop();
            if (settled[static_cast<std::size_t>(v)]) continue;
            settled[static_cast<std::size_t>(v)] = 1;
            for (int ei : adjacency_[static_cast<std::size_t>(v)]) {
                const GraphEdge& e = edges_[static_cast<std::size_t>(ei)];
                int w = (e.a == v) ? e.b : e.a;
                double nd = dv + e.length;
                double& dw = d[static_cast<std::size_t>(w)];
                if (nd < dw - tol_) {
                    dw = nd;
                    cnt[static_cast<std::size_t>(w)] = cnt[static_cast<std::size_t>(v)];
                    pq.emplace(nd, w);
                } else if (nd <= dw + tol_) {
                    cnt[static_cast<std::size_t>(w)] = std::min(
                        kCountCap, cnt[static_cast<std::size_t>(w)] + cnt[static_cast<std::size_t>(v)]);
                }
            }
        }
        for (int v = 0; v < n_; ++v) {
            if (!std::isfinite(d[static_cast<std::size_t>(v)]))
                throw invalid_argument("MetricGraph: graph is not connected");
            dist_[idx(s, v)] = d[static_cast<std::size_t>(v)];
            path_count_[idx(s, v)] = cnt[static_cast<std::size_t>(v)];
        }
    }
    // Dijkstra from a and from b can round differently along long paths;
    // symmetry must be exact.
    for (int a = 0; a < n_; ++a) {
        for (int b = a + 1; b < n_; ++b) {
            double d = std::min(dist_[idx(a, b)], dist_[idx(b, a)]);
            dist_[idx(a, b)] = d;
            dist_[idx(b, a)] = d;
        }
    }

    tree_ = (static_cast<int>(edges_.size()) == n_ - 1);
}

void MetricGraph::validate_point(const GraphPoint& p) const {
    if (p.is_vertex()) {
        if (p.vertex >= n_) throw invalid_argument("GraphPoint: vertex index out of range");
        return;
    }
    if (p.edge < 0 || p.edge >= edge_count())
        throw invalid_argument("GraphPoint: edge index out of range");
    const GraphEdge& e = edges_[static_cast<std::size_t>(p.edge)];
    if (!(p.offset > 0.0) || !(p.offset < e.length))
        throw invalid_argument("GraphPoint: non-canonical edge offset");
}

// A candidate shortest route between two points: a possible entry vertex on
// p's edge and exit vertex onto q's edge, or the direct same-edge segment.
struct MetricGraph::Route {
    double length = 0.0;
    std::int64_t multiplicity = 1;
    bool direct = false; // p and q on the same edge, path stays on the edge
    int exit_vertex = -1;  // vertex where the route leaves p's edge (-1 if p is a vertex)
    int entry_vertex = -1; // vertex where the route enters q's edge (-1 if q is a vertex)
};

std::vector<MetricGraph::Route> MetricGraph::enumerate_routes(const GraphPoint& p,
                                                              const GraphPoint& q) const {
    std::vector<Route> routes;
    auto endpoints = [&](const GraphPoint& pt) {
        std::vector<std::pair<int, double>> out; // (vertex, cost from pt to vertex)
        if (pt.is_vertex()) {
            out.emplace_back(pt.vertex, 0.0);
        } else {
            const GraphEdge& e = edges_[static_cast<std::size_t>(pt.edge)];
            out.emplace_back(e.a, pt.offset);
            out.emplace_back(e.b, e.length - pt.offset);
        }
        return out;
    };

    if (!p.is_vertex() && !q.is_vertex() && p.edge == q.edge) {
        Route r;
        r.length = std::abs(p.offset - q.offset);
        r.direct = true;
        routes.push_back(r);
    }
    for (auto [x, cx] : endpoints(p)) {
        for (auto [y, cy] : endpoints(q)) {
            Route r;
            // (cx + cy) first: symmetric in (p, q), so distances are exact
            r.length = (cx + cy) + vertex_distance(x, y);
            r.multiplicity = path_count_[idx(x, y)];
            r.exit_vertex = p.is_vertex() ? -1 : x;
            r.entry_vertex = q.is_vertex() ? -1 : y;
            routes.push_back(r);
        }
    }
    return routes;
}

double MetricGraph::distance(const GraphPoint& p, const GraphPoint& q) const {
    validate_point(p);
    validate_point(q);
    if (p == q) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    for (const Route& r : enumerate_routes(p, q)) best = std::min(best, r.length);
    return best;
}

std::vector<int> MetricGraph::reconstruct_vertex_path(int from, int to) const {
    // Walk backwards from `to`; uniqueness of the shortest path guarantees a
    // single admissible predecessor at each step.
    std::vector<int> rev{to};
    int cur = to;
    while (cur != from) {
        int pred = -1;
        for (int ei : adjacency_[static_cast<std::size_t>(cur)]) {
            const GraphEdge& e = edges_[static_cast<std::size_t>(ei)];
            int w = (e.a == cur) ? e.b : e.a;
            if (std::abs(vertex_distance(from, w) + e.length - vertex_distance(from, cur)) <= tol_) {
                pred = w;
                break;
            }
        }
        if (pred < 0) throw std::logic_error("reconstruct_vertex_path: no predecessor found");
        rev.push_back(pred);
        cur = pred;
    }
    std::reverse(rev.begin(), rev.end());
    return rev;
}

GraphPoint MetricGraph::geodesic_point(const GraphPoint& p, const GraphPoint& q, double t) const {
    validate_point(p);
    validate_point(q);
    if (t < 0.0 || t > 1.0) throw invalid_argument("geodesic_point: t outside [0, 1]");
    if (p == q || t == 0.0) return p;
    if (t == 1.0) return q;

    auto routes = enumerate_routes(p, q);
    double best = std::numeric_limits<double>::infinity();
    for (const Route& r : routes) best = std::min(best, r.length);

    std::int64_t ties = 0;
    const Route* winner = nullptr;
    for (const Route& r : routes) {
        if (r.length <= best + tol_) {
            ties = std::min(kCountCap, ties + r.multiplicity);
            if (!winner) winner = &r;
        }
    }
    if (ties > 1)
        throw ambiguous_geodesic("geodesic_point: shortest path is not unique",
                                 static_cast<int>(ties));

    // Segments of the unique geodesic: (edge, from_offset, to_offset).
    struct Seg {
        int edge;
        double from;
        double to;
    };
    std::vector<Seg> segs;
    auto push_edge_between = [&](int u, int v) {
        for (int ei : adjacency_[static_cast<std::size_t>(u)]) {
            const GraphEdge& e = edges_[static_cast<std::size_t>(ei)];
            if ((e.a == u && e.b == v)) {
                segs.push_back({ei, 0.0, e.length});
                return;
            }
            if (e.b == u && e.a == v) {
                segs.push_back({ei, e.length, 0.0});
                return;
            }
        }
        throw std::logic_error("geodesic_point: missing edge on reconstructed path");
    };

    if (winner->direct) {
        segs.push_back({p.edge, p.offset, q.offset});
    } else {
        int path_from = p.is_vertex() ? p.vertex : winner->exit_vertex;
        int path_to = q.is_vertex() ? q.vertex : winner->entry_vertex;
        if (!p.is_vertex()) {
            const GraphEdge& e = edges_[static_cast<std::size_t>(p.edge)];
            segs.push_back({p.edge, p.offset, (winner->exit_vertex == e.a) ? 0.0 : e.length});
        }
        auto vp = reconstruct_vertex_path(path_from, path_to);
        for (std::size_t i = 0; i + 1 < vp.size(); ++i) push_edge_between(vp[i], vp[i + 1]);
        if (!q.is_vertex()) {
            const GraphEdge& e = edges_[static_cast<std::size_t>(q.edge)];
            segs.push_back({q.edge, (winner->entry_vertex == e.a) ? 0.0 : e.length, q.offset});
        }
    }

    double target = t * winner->length;
    double acc = 0.0;
    for (const Seg& s : segs) {
        double len = std::abs(s.to - s.from);
        if (target <= acc + len) {
            double rem = target - acc;
            if (rem <= 0.0) {
                double off = s.from;
                return edge_point(*this, s.edge, off);
            }
            if (rem >= len) {
                return edge_point(*this, s.edge, s.to);
            }
            double off = (s.to >= s.from) ? s.from + rem : s.from - rem;
            return edge_point(*this, s.edge, off);
        }
        acc += len;
    }
    return q; // rounding pushed target past the last segment
}

MetricGraph star_tree(const std::vector<double>& leaf_lengths) {
    if (leaf_lengths.empty()) throw invalid_argument("star_tree: at least one leaf required");
    std::vector<GraphEdge> edges;
    edges.reserve(leaf_lengths.size());
    for (std::size_t i = 0; i < leaf_lengths.size(); ++i) {
        if (!(leaf_lengths[i] > 0.0)) throw invalid_argument("star_tree: leaf length must be > 0");
        edges.push_back({0, static_cast<std::int32_t>(i + 1), leaf_lengths[i]});
    }
    std::vector<std::string> labels{"hub"};
    for (std::size_t i = 0; i < leaf_lengths.size(); ++i)
        labels.push_back("leaf" + std::to_string(i + 1));
    return MetricGraph(static_cast<int>(leaf_lengths.size()) + 1, std::move(edges),
                       std::move(labels));
}

MetricGraph segment(double length) {
    if (!(length > 0.0)) throw invalid_argument("segment: length must be > 0");
    return MetricGraph(2, {{0, 1, length}}, {"left", "right"});
}

} // namespace hwg
