#include "hwg/transport.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace hwg {

namespace {

struct Simplex {
    int k, l;
    const std::vector<double>& cost;
    std::vector<double> flow;
    std::vector<char> basic;

    Simplex(const std::vector<double>& c, int k_, int l_)
        : k(k_), l(l_), cost(c), flow(static_cast<std::size_t>(k_) * l_, 0.0),
          basic(static_cast<std::size_t>(k_) * l_, 0) {}

    std::size_t cell(int i, int j) const {
        return static_cast<std::size_t>(i) * static_cast<std::size_t>(l) +
               static_cast<std::size_t>(j);
    }

    void northwest_start(std::vector<double> a, std::vector<double> b) {
        int i = 0, j = 0;
        int placed = 0;
        while (placed < k + l - 1) {
            std::size_t c = cell(i, j);
            double q = std::min(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)]);
            flow[c] = q;
            basic[c] = 1;
            ++placed;
            a[static_cast<std::size_t>(i)] -= q;
            b[static_cast<std::size_t>(j)] -= q;
            if (i == k - 1 && j == l - 1) break;
            // Advance along the row or the column; prefer the exhausted side,
            // break ties toward the row so the basis stays a spanning tree.
            if (i < k - 1 && (a[static_cast<std::size_t>(i)] <= b[static_cast<std::size_t>(j)] || j == l - 1)) {
                ++i;
            } else {
                ++j;
            }
        }
    }

    // Dual potentials from the basis tree: u_i + v_j = c_ij on basic cells.
    void potentials(std::vector<double>& u, std::vector<double>& v) const {
        const double unset = std::numeric_limits<double>::quiet_NaN();
        u.assign(static_cast<std::size_t>(k), unset);
        v.assign(static_cast<std::size_t>(l), unset);
        u[0] = 0.0;
        std::deque<int> queue{0}; // nodes: rows 0..k-1, cols k..k+l-1
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            if (node < k) {
                for (int j = 0; j < l; ++j) {
                    if (basic[cell(node, j)] && std::isnan(v[static_cast<std::size_t>(j)])) {
                        v[static_cast<std::size_t>(j)] =
                            cost[cell(node, j)] - u[static_cast<std::size_t>(node)];
                        queue.push_back(k + j);
                    }
                }
            } else {
                int j = node - k;
                for (int i = 0; i < k; ++i) {
                    if (basic[cell(i, j)] && std::isnan(u[static_cast<std::size_t>(i)])) {
                        u[static_cast<std::size_t>(i)] =
                            cost[cell(i, j)] - v[static_cast<std::size_t>(j)];
                        queue.push_back(i);
                    }
                }
            }
        }
    }

    // Unique tree path from row node ei to column node k+ej through the basis.
    std::vector<std::size_t> tree_path(int ei, int ej) const {
        int nodes = k + l;
        std::vector<int> parent(static_cast<std::size_t>(nodes), -1);
        std::vector<std::size_t> via(static_cast<std::size_t>(nodes), 0);
        std::vector<char> seen(static_cast<std::size_t>(nodes), 0);
        std::deque<int> queue{ei};
        seen[static_cast<std::size_t>(ei)] = 1;
        while (!queue.empty()) {
            int node = queue.front();
            queue.pop_front();
            if (node == k + ej) break;
            if (node < k) {
                for (int j = 0; j < l; ++j) {
                    std::size_t c = cell(node, j);
                    if (basic[c] && !seen[static_cast<std::size_t>(k + j)]) {
                        seen[static_cast<std::size_t>(k + j)] = 1;
                        parent[static_cast<std::size_t>(k + j)] = node;
                        via[static_cast<std::size_t>(k + j)] = c;
                        queue.push_back(k + j);
                    }
                }
            } else {
                int j = node - k;
                for (int i = 0; i < k; ++i) {
                    std::size_t c = cell(i, j);
                    if (basic[c] && !seen[static_cast<std::size_t>(i)]) {
                        seen[static_cast<std::size_t>(i)] = 1;
                        parent[static_cast<std::size_t>(i)] = node;
                        via[static_cast<std::size_t>(i)] = c;
                        queue.push_back(i);
                    }
                }
            }
        }
        std::vector<std::size_t> path;
        int cur = k + ej;
        while (cur != ei) {
            path.push_back(via[static_cast<std::size_t>(cur)]);
            cur = parent[static_cast<std::size_t>(cur)];
        }
        std::reverse(path.begin(), path.end()); // path[0] shares the entering row
        return path;
    }
};

} // namespace

MatrixPlan solve_transport_matrix(const std::vector<double>& cost, int k, int l,
                                  const std::vector<double>& a, const std::vector<double>& b) {
    if (k <= 0 || l <= 0) throw invalid_argument("solve_transport_matrix: empty instance");
    if (cost.size() != static_cast<std::size_t>(k) * static_cast<std::size_t>(l))
        throw invalid_argument("solve_transport_matrix: cost size mismatch");
    double cost_scale = 0.0;
    for (double c : cost) cost_scale = std::max(cost_scale, std::abs(c));
    const double tol = 1e-12 * std::max(1.0, cost_scale);

    Simplex s(cost, k, l);
    s.northwest_start(a, b);

    std::vector<double> u, v;
    const long max_iters = 200000L + 50L * static_cast<long>(k) * static_cast<long>(l);
    long iter = 0;
    while (true) {
        if (++iter > max_iters) throw std::logic_error("transportation simplex: iteration cap hit");
        s.potentials(u, v);

        int ei = -1, ej = -1;
        for (int i = 0; i < k && ei < 0; ++i) {
            for (int j = 0; j < l; ++j) {
                std::size_t c = s.cell(i, j);
                if (s.basic[c]) continue;
                double rc = cost[c] - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
                if (rc < -tol) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        }
        if (ei < 0) break;

        auto path = s.tree_path(ei, ej);
        // Entering cell gains theta; path cells alternate -,+,- starting from
        // the one sharing the entering row.
        double theta = std::numeric_limits<double>::infinity();
        std::size_t leaving = 0;
        for (std::size_t p = 0; p < path.size(); p += 2) {
            double f = s.flow[path[p]];
            if (f < theta - 1e-18 || (std::abs(f - theta) <= 1e-18 && path[p] < leaving)) {
                theta = f;
                leaving = path[p];
            }
        }
        s.flow[s.cell(ei, ej)] += theta;
        s.basic[s.cell(ei, ej)] = 1;
        for (std::size_t p = 0; p < path.size(); ++p) {
            if (p % 2 == 0) {
                s.flow[path[p]] -= theta;
            } else {
                s.flow[path[p]] += theta;
            }
        }
        s.flow[leaving] = 0.0;
        s.basic[leaving] = 0;
    }

    MatrixPlan out;
    out.flow = std::move(s.flow);
    for (std::size_t c = 0; c < out.flow.size(); ++c) {
        if (out.flow[c] < 0.0) out.flow[c] = 0.0; // rounding dust
        out.cost += out.flow[c] * cost[c];
    }
    s.potentials(u, v);
    out.unique_basis = true;
    for (int i = 0; i < k && out.unique_basis; ++i) {
        for (int j = 0; j < l; ++j) {
            std::size_t c = s.cell(i, j);
            if (s.basic[c]) continue;
            double rc = cost[c] - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
            if (rc <= 1e-10) {
                out.unique_basis = false;
                break;
            }
        }
    }
    return out;
}

MatrixPlan brute_force_transport_matrix(const std::vector<double>& cost, int k, int l,
                                        const std::vector<double>& a,
                                        const std::vector<double>& b) {
    if (k > kMaxBruteForceSide || l > kMaxBruteForceSide)
        throw capacity_error("brute_force_transport_matrix: instance exceeds 5x5 cap");
    const int nodes = k + l;
    const int cells = k * l;
    const int need = nodes - 1;

    std::vector<int> chosen;
    chosen.reserve(static_cast<std::size_t>(need));
    std::vector<int> dsu(static_cast<std::size_t>(nodes));

    MatrixPlan best;
    best.cost = std::numeric_limits<double>::infinity();

    auto find = [&](int x) {
        while (dsu[static_cast<std::size_t>(x)] != x) x = dsu[static_cast<std::size_t>(x)];
        return x;
    };

    // Solve the tree flows by leaf elimination; reject infeasible supports.
    auto score = [&]() {
        std::vector<double> supply(static_cast<std::size_t>(nodes));
        for (int i = 0; i < k; ++i) supply[static_cast<std::size_t>(i)] = a[static_cast<std::size_t>(i)];
        for (int j = 0; j < l; ++j) supply[static_cast<std::size_t>(k + j)] = -b[static_cast<std::size_t>(j)];
        std::vector<int> degree(static_cast<std::size_t>(nodes), 0);
        std::vector<char> alive(chosen.size(), 1);
        for (int c : chosen) {
            ++degree[static_cast<std::size_t>(c / l)];
            ++degree[static_cast<std::size_t>(k + c % l)];
        }
        std::vector<double> flow(static_cast<std::size_t>(cells), 0.0);
        for (std::size_t round = 0; round < chosen.size(); ++round) {
            // find a leaf edge
            int pick = -1;
            for (std::size_t e = 0; e < chosen.size(); ++e) {
                if (!alive[e]) continue;
                int i = chosen[e] / l, j = chosen[e] % l;
                if (degree[static_cast<std::size_t>(i)] == 1 ||
                    degree[static_cast<std::size_t>(k + j)] == 1) {
                    pick = static_cast<int>(e);
                    break;
                }
            }
            if (pick < 0) return; // should not happen on a tree
            int i = chosen[static_cast<std::size_t>(pick)] / l;
            int j = chosen[static_cast<std::size_t>(pick)] % l;
            double f;
            if (degree[static_cast<std::size_t>(i)] == 1) {
                f = supply[static_cast<std::size_t>(i)];
            } else {
                f = -supply[static_cast<std::size_t>(k + j)];
            }
            if (f < -1e-12) return; // infeasible vertex of the support
            if (f < 0.0) f = 0.0;
            flow[static_cast<std::size_t>(chosen[static_cast<std::size_t>(pick)])] = f;
            supply[static_cast<std::size_t>(i)] -= f;
            supply[static_cast<std::size_t>(k + j)] += f;
            alive[static_cast<std::size_t>(pick)] = 0;
            --degree[static_cast<std::size_t>(i)];
            --degree[static_cast<std::size_t>(k + j)];
        }
        double total = 0.0;
        for (int c = 0; c < cells; ++c) total += flow[static_cast<std::size_t>(c)] * cost[static_cast<std::size_t>(c)];
        if (total < best.cost - 1e-15) {
            best.cost = total;
            best.flow = flow;
        }
    };

    // Enumerate spanning trees of the complete bipartite support graph in
    // lexicographic cell order, pruning cycles with a rollback-free DSU copy.
    auto recurse = [&](auto&& self, int next) -> void {
        if (static_cast<int>(chosen.size()) == need) {
            score();
            return;
        }
        int remaining_needed = need - static_cast<int>(chosen.size());
        for (int c = next; c <= cells - remaining_needed; ++c) {
            int ra = find(c / l);
            int rb = find(k + c % l);
            if (ra == rb) continue; // cycle
            auto saved = dsu;
            dsu[static_cast<std::size_t>(ra)] = rb;
            chosen.push_back(c);
            self(self, c + 1);
            chosen.pop_back();
            dsu = saved;
        }
    };
    std::iota(dsu.begin(), dsu.end(), 0);
    recurse(recurse, 0);

    if (!std::isfinite(best.cost))
        throw std::logic_error("brute_force_transport_matrix: no feasible basis found");
    best.unique_basis = true; // computed by the simplex path; not meaningful here
    return best;
}

namespace {

std::vector<double> squared_cost_matrix(const MetricGraph& g, const DiscreteMeasure& m1,
                                        const DiscreteMeasure& m2) {
    std::vector<double> cost(m1.size() * m2.size());
    for (std::size_t i = 0; i < m1.size(); ++i) {
        for (std::size_t j = 0; j < m2.size(); ++j) {
            double d = g.distance(m1.atoms()[i].point, m2.atoms()[j].point);
            cost[i * m2.size() + j] = d * d;
        }
    }
    return cost;
}

TransportPlan plan_from_matrix(const MetricGraph&, const DiscreteMeasure& m1,
                               const DiscreteMeasure& m2, const MatrixPlan& mp) {
    TransportPlan plan;
    for (const Atom& a : m1.atoms()) {
        plan.source_points.push_back(a.point);
        plan.source_masses.push_back(a.mass);
    }
    for (const Atom& a : m2.atoms()) {
        plan.target_points.push_back(a.point);
        plan.target_masses.push_back(a.mass);
    }
    int l = static_cast<int>(m2.size());
    for (int i = 0; i < static_cast<int>(m1.size()); ++i) {
        for (int j = 0; j < l; ++j) {
            double f = mp.flow[static_cast<std::size_t>(i) * static_cast<std::size_t>(l) +
                               static_cast<std::size_t>(j)];
            if (f > 0.0) plan.entries.push_back({i, j, f});
        }
    }
    plan.cost = mp.cost;
    plan.unique_basis = mp.unique_basis;
    return plan;
}

} // namespace

TransportPlan solve_ot(const MetricGraph& g, const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
    if (static_cast<int>(m1.size() + m2.size()) > kMaxTransportAtoms)
        throw capacity_error("solve_ot: combined support exceeds " +
                             std::to_string(kMaxTransportAtoms) + " atoms");
    std::vector<double> a, b;
    for (const Atom& at : m1.atoms()) a.push_back(at.mass);
    for (const Atom& at : m2.atoms()) b.push_back(at.mass);
    auto cost = squared_cost_matrix(g, m1, m2);
    auto mp = solve_transport_matrix(cost, static_cast<int>(m1.size()),
                                     static_cast<int>(m2.size()), a, b);
    return plan_from_matrix(g, m1, m2, mp);
}

TransportPlan brute_force_ot(const MetricGraph& g, const DiscreteMeasure& m1,
                             const DiscreteMeasure& m2) {
    std::vector<double> a, b;
    for (const Atom& at : m1.atoms()) a.push_back(at.mass);
    for (const Atom& at : m2.atoms()) b.push_back(at.mass);
    auto cost = squared_cost_matrix(g, m1, m2);
    auto mp = brute_force_transport_matrix(cost, static_cast<int>(m1.size()),
                                           static_cast<int>(m2.size()), a, b);
    return plan_from_matrix(g, m1, m2, mp);
}

double w2(const MetricGraph& g, const DiscreteMeasure& m1, const DiscreteMeasure& m2) {
    if (m1 == m2) return 0.0;
    return std::sqrt(std::max(0.0, solve_ot(g, m1, m2).cost));
}

DiscreteMeasure displacement(const MetricGraph& g, const TransportPlan& plan, double t) {
    if (t < 0.0 || t > 1.0) throw invalid_argument("displacement: t outside [0, 1]");
    std::vector<Atom> atoms;
    if (t == 0.0 || t == 1.0) {
        // endpoints reproduce the marginal measures bit-exactly
        const auto& points = (t == 0.0) ? plan.source_points : plan.target_points;
        const auto& masses = (t == 0.0) ? plan.source_masses : plan.target_masses;
        for (std::size_t i = 0; i < points.size(); ++i) atoms.push_back({points[i], masses[i]});
        return DiscreteMeasure::make(std::move(atoms));
    }
    atoms.reserve(plan.entries.size());
    for (const PlanEntry& e : plan.entries) {
        GraphPoint p = g.geodesic_point(plan.source_points[static_cast<std::size_t>(e.k)],
                                        plan.target_points[static_cast<std::size_t>(e.l)], t);
        atoms.push_back({p, e.mass});
    }
    return DiscreteMeasure::make(std::move(atoms));
}

double field_w(const MetricGraph& g, const MemoryField& f1, const MemoryField& f2) {
    if (f1.size() != f2.size()) throw invalid_argument("field_w: fiber sets differ");
    double s = 0.0;
    for (const Fiber& fa : f1.fibers()) {
        if (!f2.has_fiber(fa.id)) throw invalid_argument("field_w: fiber '" + fa.id + "' missing");
        const Fiber& fb = f2.fiber(fa.id);
        if (fa.weight != fb.weight) throw invalid_argument("field_w: fiber weights differ");
        double d = w2(g, fa.measure, fb.measure);
        s += fa.weight * d * d;
    }
    return std::sqrt(s);
}

double induced_pseudometric(const MemoryField& f, const MetricGraph& g, const std::string& x,
                            const std::string& y) {
    if (x == y) {
        if (!f.has_fiber(x)) throw invalid_argument("induced_pseudometric: unknown fiber");
        return 0.0;
    }
    return w2(g, f.fiber(x).measure, f.fiber(y).measure);
}

} // namespace hwg
