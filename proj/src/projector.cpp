#include "hwg/projector.hpp"

#include <algorithm>
#include <cmath>

namespace hwg {

const ProjectorStep::PointSplit* ProjectorStep::find_split(const GraphPoint& p) const {
    auto it = std::lower_bound(splits.begin(), splits.end(), p,
                               [](const PointSplit& s, const GraphPoint& q) { return s.point < q; });
    if (it != splits.end() && it->point == p) return &*it;
    return nullptr;
}

bool ProjectorStep::in_old_support(const GraphPoint& p) const {
    return std::binary_search(old_support.begin(), old_support.end(), p);
}

ProjectorStep make_projector_step(const MetricGraph& g, const FiberStep& step,
                                  const std::vector<GraphPoint>& support_before) {
    ProjectorStep out;
    out.t_tau = step.t_tau;
    out.plan_unique = step.plan_unique;
    out.old_support = support_before;
    std::sort(out.old_support.begin(), out.old_support.end());

    // Same arithmetic as displacement(): interpolated points match the step's
    // support bit-for-bit.
    std::vector<std::pair<GraphPoint, ProjectorStep::Part>> landed;
    for (const PlanEntry& e : step.plan.entries) {
        const GraphPoint& src = step.plan.source_points[static_cast<std::size_t>(e.k)];
        const GraphPoint& dst = step.plan.target_points[static_cast<std::size_t>(e.l)];
        ProjectorStep::Part part;
        part.source = src;
        part.target = dst;
        part.mass = e.mass;
        part.standing = (src == dst);
        GraphPoint where = part.standing ? src : g.geodesic_point(src, dst, step.t_tau);
        landed.emplace_back(where, part);
    }
    std::sort(landed.begin(), landed.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (auto& [pt, part] : landed) {
        if (out.splits.empty() || !(out.splits.back().point == pt)) {
            out.splits.push_back({pt, {}, 0.0});
        }
        out.splits.back().parts.push_back(part);
        out.splits.back().total += part.mass;
    }
    return out;
}

DiscreteMeasure expectation_operator(const ProjectorStep& step, const DiscreteMeasure& nu) {
    std::vector<Atom> atoms;
    for (const Atom& a : nu.atoms()) {
        const auto* split = step.find_split(a.point);
        if (!split) {
            if (!step.in_old_support(a.point))
                throw invalid_argument("expectation_operator: nu charges a point outside S^{n+1}");
            atoms.push_back(a);
            continue;
        }
        for (const auto& part : split->parts) {
            double share = a.mass * part.mass / split->total;
            if (part.standing) {
                atoms.push_back({part.source, share});
            } else {
                atoms.push_back({part.source, share * (1.0 - step.t_tau)});
                atoms.push_back({part.target, share * step.t_tau});
            }
        }
    }
    return DiscreteMeasure::make(std::move(atoms));
}

DiscreteMeasure sample_backward(const ProjectorStep& step, const DiscreteMeasure& nu, Rng& rng) {
    std::vector<Atom> atoms;
    for (const Atom& a : nu.atoms()) {
        const auto* split = step.find_split(a.point);
        if (!split) {
            if (!step.in_old_support(a.point))
                throw invalid_argument("sample_backward: nu charges a point outside S^{n+1}");
            atoms.push_back(a);
            continue;
        }
        // choose the generating couple, then the endpoint
        double u = rng.next_double() * split->total;
        const ProjectorStep::Part* chosen = &split->parts.back();
        double acc = 0.0;
        for (const auto& part : split->parts) {
            acc += part.mass;
            if (u < acc) {
                chosen = &part;
                break;
            }
        }
        if (chosen->standing) {
            atoms.push_back({chosen->source, a.mass});
        } else if (step.t_tau >= 1.0) {
            atoms.push_back({chosen->target, a.mass});
        } else if (step.t_tau <= 0.0) {
            atoms.push_back({chosen->source, a.mass});
        } else {
            bool to_target = rng.next_double() < step.t_tau;
            atoms.push_back({to_target ? chosen->target : chosen->source, a.mass});
        }
    }
    return DiscreteMeasure::make(std::move(atoms));
}

QuadraticTrajectory run_quadratic_trajectory(const MetricGraph& g, const MemoryField& initial,
                                             const Context& context, const SignalRule& rule,
                                             const EnergySpec& energy, double tau, int steps,
                                             const MemoryField* coupled) {
    QuadraticTrajectory traj;
    traj.initial = initial;
    traj.tau = tau;
    MemoryField current = initial;
    for (int n = 0; n < steps; ++n) {
        SchemeState state = make_scheme_state(n, tau, current, context, rule, energy, coupled);
        StepResult result = jko_step_quadratic(state, g);
        traj.signals.push_back(state.frozen_signal);
        current = result.next;
        traj.steps.push_back(std::move(result));
    }
    return traj;
}

namespace {

void require_supported_on(const DiscreteMeasure& m, const std::vector<GraphPoint>& allowed,
                          const char* what) {
    for (const Atom& a : m.atoms()) {
        if (std::find(allowed.begin(), allowed.end(), a.point) == allowed.end())
            throw invalid_argument(std::string(what) + ": measure charges a non-observable point " +
                                   a.point.to_string());
    }
}

} // namespace

ObservableTrajectory project_trajectory(const MetricGraph& g, const QuadraticTrajectory& traj,
                                        const std::vector<GraphPoint>& observable_set) {
    if (observable_set.empty()) throw invalid_argument("project_trajectory: empty observable set");
    for (const Fiber& f : traj.initial.fibers())
        require_supported_on(f.measure, observable_set, "project_trajectory initial state");
    for (const SignalMap& sm : traj.signals) {
        for (const auto& [id, h] : sm)
            require_supported_on(h, observable_set, "project_trajectory signal");
    }

    ObservableTrajectory out;
    SignalMap current_fast;
    for (const Fiber& f : traj.initial.fibers()) current_fast.emplace(f.id, f.measure);
    out.fast.push_back(current_fast);
    out.slow.push_back(current_fast);

    // Per-fiber support chains and per-step bookkeeping.
    std::map<std::string, std::vector<GraphPoint>> chains;
    std::vector<GraphPoint> y_m = observable_set;
    std::sort(y_m.begin(), y_m.end());
    for (const Fiber& f : traj.initial.fibers()) chains.emplace(f.id, y_m);
    std::map<std::string, std::vector<ProjectorStep>> history;

    for (std::size_t n = 0; n < traj.steps.size(); ++n) {
        const StepResult& sr = traj.steps[n];
        out.plan_dependent = out.plan_dependent || sr.any_plan_nonunique;
        SignalMap next_fast;
        SignalMap next_slow;
        for (const FiberStep& fs : sr.fibers) {
            auto& chain = chains.at(fs.fiber);
            ProjectorStep ps = make_projector_step(g, fs, chain);
            // grow the chain: S^{n+1} = supp(rho^{n+1}) union S^n
            for (const auto& split : ps.splits) {
                auto it = std::lower_bound(chain.begin(), chain.end(), split.point);
                if (it == chain.end() || !(*it == split.point)) chain.insert(it, split.point);
            }
            if (chain.size() > 1'000'000)
                throw capacity_error("project_trajectory: support chain exceeds 1e6 points");
            history[fs.fiber].push_back(std::move(ps));

            // fast route: affine recurrence
            const DiscreteMeasure& h = traj.signals[n].at(fs.fiber);
            next_fast.emplace(fs.fiber,
                              mixture(out.fast.back().at(fs.fiber), h, history[fs.fiber].back().t_tau));

            // slow route: compose expectation operators down the chain
            DiscreteMeasure nu = fs.next;
            const auto& hist = history[fs.fiber];
            for (std::size_t k = hist.size(); k-- > 0;) nu = expectation_operator(hist[k], nu);
            next_slow.emplace(fs.fiber, std::move(nu));
        }
        for (const auto& [id, fast_m] : next_fast) {
            out.max_route_gap = std::max(out.max_route_gap, fast_m.linf_gap(next_slow.at(id)));
        }
        out.fast.push_back(std::move(next_fast));
        out.slow.push_back(std::move(next_slow));
    }
    return out;
}

DiscreteMeasure observable_closed_form(const DiscreteMeasure& rho_hat0,
                                       const std::vector<DiscreteMeasure>& h_sequence,
                                       double t_tau, int n) {
    if (n < 0) throw invalid_argument("observable_closed_form: n must be >= 0");
    if (static_cast<std::size_t>(n) > h_sequence.size())
        throw invalid_argument("observable_closed_form: signal sequence shorter than n");
    if (n == 0) return rho_hat0;
    double decay = 1.0 - t_tau;
    std::vector<Atom> atoms;
    double w0 = std::pow(decay, n);
    for (const Atom& a : rho_hat0.atoms()) atoms.push_back({a.point, w0 * a.mass});
    for (int k = 0; k < n; ++k) {
        double w = t_tau * std::pow(decay, n - 1 - k);
        for (const Atom& a : h_sequence[static_cast<std::size_t>(k)].atoms())
            atoms.push_back({a.point, w * a.mass});
    }
    return DiscreteMeasure::make(std::move(atoms));
}

double PiecewiseSignal::total_duration() const {
    double t = 0.0;
    for (const auto& [d, m] : segments) t += d;
    return t;
}

DiscreteMeasure ode_limit(const DiscreteMeasure& rho_hat0, const PiecewiseSignal& h, double alpha,
                          double t) {
    if (!(alpha > 0.0)) throw invalid_argument("ode_limit: alpha must be > 0");
    if (t < 0.0) throw invalid_argument("ode_limit: negative time");
    if (t > h.total_duration() + 1e-12)
        throw invalid_argument("ode_limit: t beyond the signal's domain");
    DiscreteMeasure state = rho_hat0;
    double clock = 0.0;
    for (const auto& [duration, value] : h.segments) {
        if (clock >= t) break;
        double dt = std::min(duration, t - clock);
        double decay = std::exp(-alpha * dt);
        state = mixture(state, value, 1.0 - decay);
        clock += dt;
    }
    return state;
}

ConsensusResult consensus_gap(const SignalMap& initial_a, const SignalMap& initial_b, double alpha,
                              double tau, int steps) {
    if (initial_a.size() != initial_b.size())
        throw invalid_argument("consensus_gap: mismatched fiber sets");
    for (const auto& [id, m] : initial_a) {
        if (initial_b.find(id) == initial_b.end())
            throw invalid_argument("consensus_gap: fiber '" + id + "' missing in second field");
    }
    double t = contraction_factor(alpha, tau);
    ConsensusResult out;
    SignalMap a = initial_a, b = initial_b;
    auto total_gap = [](const SignalMap& x, const SignalMap& y) {
        double gap = 0.0;
        for (const auto& [id, m] : x) gap += m.l1_gap(y.at(id));
        return gap;
    };
    out.observables_a.push_back(a);
    out.observables_b.push_back(b);
    out.gaps.push_back(total_gap(a, b));
    for (int n = 0; n < steps; ++n) {
        SignalMap na, nb;
        for (const auto& [id, m] : a) {
            na.emplace(id, mixture(m, b.at(id), t));
            nb.emplace(id, mixture(b.at(id), m, t));
        }
        a = std::move(na);
        b = std::move(nb);
        out.observables_a.push_back(a);
        out.observables_b.push_back(b);
        out.gaps.push_back(total_gap(a, b));
    }

    // least-squares slope of log(gap) against time
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (std::size_t n = 0; n < out.gaps.size(); ++n) {
        if (out.gaps[n] < 1e-250) break;
        double x = static_cast<double>(n) * tau;
        double y = std::log(out.gaps[n]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++count;
    }
    if (count >= 2) {
        double denom = count * sxx - sx * sx;
        out.fitted_rate = (denom != 0.0) ? (count * sxy - sx * sy) / denom : 0.0;
    }
    return out;
}

} // namespace hwg
