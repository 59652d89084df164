#pragma once

#include <vector>

#include "hwg/rng.hpp"
#include "hwg/scheme.hpp"

namespace hwg {

// Bookkeeping of one purely quadratic step for a single fiber, built from the
// plan the step actually used. Each point of supp(rho^{n+1}) is decomposed
// into the plan masses that produced it: standing mass (source == target) and
// moving mass interpolated at t_tau from (source, target) couples. The
// decomposition also covers mass that happens to land on a point of S^n, so
// the expectation identity E(rho^{n+1}) = (1-t) rho^n + t h^n holds even when
// interpolants collide with existing support points.
struct ProjectorStep {
    struct Part {
        GraphPoint source;
        GraphPoint target;
        double mass = 0.0;
        bool standing = false;
    };
    struct PointSplit {
        GraphPoint point;
        std::vector<Part> parts;
        double total = 0.0;
    };

    double t_tau = 0.0;
    bool plan_unique = true;
    std::vector<PointSplit> splits;       // sorted by point
    std::vector<GraphPoint> old_support;  // S^n, sorted

    const PointSplit* find_split(const GraphPoint& p) const;
    bool in_old_support(const GraphPoint& p) const;
};

ProjectorStep make_projector_step(const MetricGraph& g, const FiberStep& step,
                                  const std::vector<GraphPoint>& support_before);

// Exact expectation operator E^n: measures on S^{n+1} -> measures on S^n.
// Old-point mass is kept, interpolated mass is split back (1-t) to the source
// atom and t to the target atom, weighted by pi_kl / rho^{n+1}({y}).
DiscreteMeasure expectation_operator(const ProjectorStep& step, const DiscreteMeasure& nu);

// One draw of the stochastic backward projector: each atom's mass picks a
// generating couple with probability pi_kl / rho^{n+1}({y}) and lands on the
// source with probability (1-t), on the target with probability t.
DiscreteMeasure sample_backward(const ProjectorStep& step, const DiscreteMeasure& nu, Rng& rng);

// A recorded purely quadratic trajectory: initial field, per-step results and
// frozen signals.
struct QuadraticTrajectory {
    MemoryField initial;
    std::vector<StepResult> steps;
    std::vector<SignalMap> signals; // h^n, observable (supported on Y_M)
    double tau = 1.0;
};

// Convenience driver: runs `steps` purely quadratic updates from `initial`,
// freezing the signal rule at each step.
QuadraticTrajectory run_quadratic_trajectory(const MetricGraph& g, const MemoryField& initial,
                                             const Context& context, const SignalRule& rule,
                                             const EnergySpec& energy, double tau, int steps,
                                             const MemoryField* coupled = nullptr);

struct ObservableTrajectory {
    // observables[n] is the projected field after n steps (n = 0 is initial).
    std::vector<SignalMap> fast; // affine recurrence rho^ = (1-t) rho^ + t h
    std::vector<SignalMap> slow; // composed expectation operators
    double max_route_gap = 0.0;  // max atom gap between the two routes
    bool plan_dependent = false; // some step used a non-unique plan
};

// Projects a quadratic trajectory onto the observable set both ways and
// compares. Initial measures and signals must be supported on observable_set.
ObservableTrajectory project_trajectory(const MetricGraph& g, const QuadraticTrajectory& traj,
                                        const std::vector<GraphPoint>& observable_set);

// Closed form (1-t)^n rho0 + t * sum_{k<n} (1-t)^{n-1-k} h^k.
DiscreteMeasure observable_closed_form(const DiscreteMeasure& rho_hat0,
                                       const std::vector<DiscreteMeasure>& h_sequence,
                                       double t_tau, int n);

// Piecewise-constant signal on [0, T): segments of (duration, value).
struct PiecewiseSignal {
    std::vector<std::pair<double, DiscreteMeasure>> segments;
    double total_duration() const;
};

// Exact exponential integration of d/dt rho^ = -alpha (rho^ - h(t)),
// interval by interval (no time-stepping error).
DiscreteMeasure ode_limit(const DiscreteMeasure& rho_hat0, const PiecewiseSignal& h, double alpha,
                          double t);

struct ConsensusResult {
    std::vector<double> gaps; // per-step L1 gap of the observable fields
    double fitted_rate = 0.0; // least-squares slope of log(gap) vs time
    std::vector<SignalMap> observables_a;
    std::vector<SignalMap> observables_b;
};

// Two observable fields cross-coupled as each other's signal:
// a^{n+1} = (1-t) a^n + t b^n and symmetrically. The gap contracts by
// (1 - 2 t_tau) each step; the continuous rate is -2 alpha.
ConsensusResult consensus_gap(const SignalMap& initial_a, const SignalMap& initial_b, double alpha,
                              double tau, int steps);

} // namespace hwg
