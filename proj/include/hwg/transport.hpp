#pragma once

#include <vector>

#include "hwg/measure.hpp"

namespace hwg {

struct PlanEntry {
    int k = 0; // source atom index
    int l = 0; // target atom index
    double mass = 0.0;
};

// Optimal coupling between two discrete measures for quadratic cost.
// Row sums reproduce source masses, column sums target masses; cost is
// sum pi_kl * d(y_k, y_l)^2.
struct TransportPlan {
    std::vector<GraphPoint> source_points;
    std::vector<GraphPoint> target_points;
    std::vector<double> source_masses;
    std::vector<double> target_masses;
    std::vector<PlanEntry> entries; // only entries with mass > 0
    double cost = 0.0;
    // True when the optimal basis is unique (all nonbasic reduced costs
    // exceed 1e-10). Projector results built on a non-unique plan carry a
    // plan_dependent flag downstream.
    bool unique_basis = true;

    double mass(int k, int l) const {
        for (const PlanEntry& e : entries) {
            if (e.k == k && e.l == l) return e.mass;
        }
        return 0.0;
    }
};

inline constexpr int kMaxTransportAtoms = 512; // combined support cap
inline constexpr int kMaxBruteForceSide = 5;

// Low-level transportation problem on an explicit cost matrix (row-major
// k x l), supplies a, demands b. Exact transportation simplex, northwest
// corner start, Bland's rule (lowest-index entering variable, lowest-index
// leaving among ties) for anti-cycling and reproducibility.
struct MatrixPlan {
    std::vector<double> flow; // k x l row-major
    double cost = 0.0;
    bool unique_basis = true;
};
MatrixPlan solve_transport_matrix(const std::vector<double>& cost, int k, int l,
                                  const std::vector<double>& a, const std::vector<double>& b);

// Independent oracle: enumerates all spanning-forest supports (basic feasible
// solutions of the transportation polytope). Capped at 5 x 5.
MatrixPlan brute_force_transport_matrix(const std::vector<double>& cost, int k, int l,
                                        const std::vector<double>& a,
                                        const std::vector<double>& b);

TransportPlan solve_ot(const MetricGraph& g, const DiscreteMeasure& m1, const DiscreteMeasure& m2);
TransportPlan brute_force_ot(const MetricGraph& g, const DiscreteMeasure& m1,
                             const DiscreteMeasure& m2);

double w2(const MetricGraph& g, const DiscreteMeasure& m1, const DiscreteMeasure& m2);

// Push the plan's mass along geodesics to parameter t (McCann interpolation).
DiscreteMeasure displacement(const MetricGraph& g, const TransportPlan& plan, double t);

// Product field metric: ( sum_x mu_x W2^2(f1_x, f2_x) )^(1/2) over aligned fibers.
double field_w(const MetricGraph& g, const MemoryField& f1, const MemoryField& f2);

} // namespace hwg
