#include "hwg/scheme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hwg/parallel.hpp"

namespace hwg {

namespace {

void validate_profile_monotone(const std::function<double(double)>& f, double radius,
                               const char* what) {
    if (!f) throw invalid_argument(std::string(what) + ": missing profile");
    constexpr int kGrid = 64;
    double prev = f(0.0);
    if (!std::isfinite(prev)) throw invalid_argument(std::string(what) + ": profile(0) not finite");
    for (int i = 1; i < kGrid; ++i) {
        double r = radius * static_cast<double>(i) / (kGrid - 1);
        double v = f(r);
        if (!std::isfinite(v)) throw invalid_argument(std::string(what) + ": profile not finite");
        if (v < prev - 1e-9)
            throw invalid_argument(std::string(what) + ": profile not nondecreasing on grid");
        prev = v;
    }
}

void validate_profile_convex(const std::function<double(double)>& f, double radius,
                             const char* what) {
    constexpr int kGrid = 64;
    double h = radius / (kGrid - 1);
    for (int i = 1; i + 1 < kGrid; ++i) {
        double second = f((i + 1) * h) - 2.0 * f(i * h) + f((i - 1) * h);
        if (second < -1e-9)
            throw invalid_argument(std::string(what) + ": profile not convex on grid");
    }
}

} // namespace

EnergySpec::EnergySpec(PurelyQuadratic e) : spec_(std::move(e)) {
    const auto& q = std::get<PurelyQuadratic>(spec_);
    if (!(q.alpha > 0.0)) throw invalid_argument("PurelyQuadratic: alpha must be > 0");
    for (const auto& [id, a] : q.alpha_overrides) {
        if (!(a > 0.0)) throw invalid_argument("PurelyQuadratic: alpha cluster for '" + id +
                                               "' must be > 0");
    }
}

EnergySpec::EnergySpec(Isotropic e) : spec_(std::move(e)) {
    const auto& iso = std::get<Isotropic>(spec_);
    validate_profile_monotone(iso.profile, iso.sample_radius, "Isotropic");
}

EnergySpec::EnergySpec(W2Quadratic e) : spec_(std::move(e)) {
    const auto& w = std::get<W2Quadratic>(spec_);
    validate_profile_monotone(w.f, w.sample_radius, "W2Quadratic");
    validate_profile_convex(w.f, w.sample_radius, "W2Quadratic");
}

EnergySpec::EnergySpec(GeneralizedQuadratic e) : spec_(std::move(e)) {
    const auto& g = std::get<GeneralizedQuadratic>(spec_);
    if (!(g.alpha > 0.0)) throw invalid_argument("GeneralizedQuadratic: alpha must be > 0");
    if (!g.map.identity && !g.map.apply)
        throw invalid_argument("GeneralizedQuadratic: non-identity map without apply()");
    if (g.lipschitz_signal < 0.0 || g.lipschitz_map < 0.0)
        throw invalid_argument("GeneralizedQuadratic: negative Lipschitz metadata");
}

bool EnergySpec::is_purely_quadratic() const {
    return std::holds_alternative<PurelyQuadratic>(spec_);
}

bool EnergySpec::has_closed_form() const {
    if (is_purely_quadratic()) return true;
    if (const auto* g = as_gqe()) return g->map.identity;
    return false;
}

double EnergySpec::alpha_for(const std::string& fiber) const {
    if (const auto* q = as_quadratic()) return q->alpha_for(fiber);
    if (const auto* g = as_gqe()) return g->alpha;
    throw invalid_argument("EnergySpec: alpha undefined for this energy class");
}

double EnergySpec::local_energy(const std::string& fiber, double d) const {
    if (const auto* q = as_quadratic()) {
        double a = q->alpha_for(fiber);
        return 0.5 * a * d * d;
    }
    if (const auto* iso = as_isotropic()) return iso->profile(d);
    if (const auto* w = as_w2_quadratic()) return w->f(d * d);
    const auto* g = as_gqe();
    if (!g->map.identity)
        throw invalid_argument("EnergySpec: non-identity GQE has no distance-only local energy");
    return 0.5 * g->alpha * d * d;
}

SignalMap evaluate_signal(const SignalRule& rule, const MemoryField& field, const Context& context,
                          int step, const MemoryField* coupled) {
    SignalMap out;
    if (const auto* c = std::get_if<ConstantTarget>(&rule)) {
        for (const Fiber& f : field.fibers()) {
            auto it = c->targets.find(f.id);
            if (it == c->targets.end())
                throw invalid_argument("ConstantTarget: no target for fiber '" + f.id + "'");
            out.emplace(f.id, it->second);
        }
        return out;
    }
    if (const auto* c = std::get_if<ContextTarget>(&rule)) {
        if (c->gamma_points.size() != context.gamma_size())
            throw invalid_argument("ContextTarget: gamma point list does not match context");
        for (const Fiber& f : field.fibers()) {
            const auto& phi = context.at(f.id);
            std::vector<Atom> atoms;
            double total = 0.0;
            for (std::size_t g = 0; g < phi.size(); ++g) total += std::abs(phi[g]);
            if (!(total > 0.0))
                throw invalid_argument("ContextTarget: context carries no mass on fiber '" + f.id +
                                       "'");
            for (std::size_t g = 0; g < phi.size(); ++g) {
                double m = std::abs(phi[g]) / total;
                if (m > 0.0) atoms.push_back({c->gamma_points[g], m});
            }
            out.emplace(f.id, DiscreteMeasure::make(std::move(atoms)));
        }
        return out;
    }
    if (std::holds_alternative<FieldCoupling>(rule)) {
        if (!coupled) throw invalid_argument("FieldCoupling: no coupled field supplied");
        for (const Fiber& f : field.fibers()) out.emplace(f.id, coupled->fiber(f.id).measure);
        return out;
    }
    const auto& seq = std::get<SequenceSignal>(rule);
    if (step < 0 || static_cast<std::size_t>(step) >= seq.per_step.size())
        throw invalid_argument("SequenceSignal: step outside the provided sequence");
    const SignalMap& m = seq.per_step[static_cast<std::size_t>(step)];
    for (const Fiber& f : field.fibers()) {
        auto it = m.find(f.id);
        if (it == m.end())
            throw invalid_argument("SequenceSignal: no target for fiber '" + f.id + "'");
        out.emplace(f.id, it->second);
    }
    return out;
}

SchemeState make_scheme_state(int step, double tau, MemoryField field, Context context,
                              const SignalRule& rule, EnergySpec energy,
                              const MemoryField* coupled) {
    if (!(tau > 0.0)) throw invalid_argument("SchemeState: tau must be > 0");
    SignalMap frozen = evaluate_signal(rule, field, context, step, coupled);
    return SchemeState{step, tau, std::move(field), std::move(context), std::move(frozen),
                       std::move(energy)};
}

double contraction_factor(double alpha, double tau) {
    if (!(alpha > 0.0) || !(tau > 0.0))
        throw invalid_argument("contraction_factor: alpha and tau must be > 0");
    return alpha * tau / (1.0 + alpha * tau);
}

namespace {

TransportPlan diagonal_plan(const DiscreteMeasure& m) {
    TransportPlan plan;
    for (const Atom& a : m.atoms()) {
        plan.source_points.push_back(a.point);
        plan.target_points.push_back(a.point);
        plan.source_masses.push_back(a.mass);
        plan.target_masses.push_back(a.mass);
    }
    for (int i = 0; i < static_cast<int>(m.size()); ++i)
        plan.entries.push_back({i, i, m.atoms()[static_cast<std::size_t>(i)].mass});
    plan.cost = 0.0;
    return plan;
}

const DiscreteMeasure& target_for(const SignalMap& targets, const std::string& fiber) {
    auto it = targets.find(fiber);
    if (it == targets.end())
        throw invalid_argument("scheme: frozen signal missing fiber '" + fiber + "'");
    return it->second;
}

} // namespace

StepResult jko_step_quadratic(const SchemeState& state, const MetricGraph& g) {
    if (!state.energy.has_closed_form())
        throw invalid_argument("jko_step_quadratic: energy has no closed-form update");
    const auto& fibers = state.field.fibers();
    std::vector<FiberStep> steps(fibers.size());
    parallel_for(fibers.size(), [&](std::size_t i) {
        const Fiber& f = fibers[i];
        const DiscreteMeasure& h = target_for(state.frozen_signal, f.id);
        double t = contraction_factor(state.energy.alpha_for(f.id), state.tau);
        FiberStep fs;
        fs.fiber = f.id;
        fs.t_tau = t;
        if (f.measure == h) {
            fs.plan = diagonal_plan(f.measure);
            fs.next = f.measure;
        } else {
            fs.plan = solve_ot(g, f.measure, h);
            fs.next = displacement(g, fs.plan, t);
        }
        fs.plan_unique = fs.plan.unique_basis;
        steps[i] = std::move(fs);
    });

    StepResult out;
    std::vector<DiscreteMeasure> measures;
    measures.reserve(steps.size());
    for (const FiberStep& fs : steps) {
        measures.push_back(fs.next);
        out.any_plan_nonunique = out.any_plan_nonunique || !fs.plan_unique;
    }
    out.next = state.field.with_measures(std::move(measures));
    out.fibers = std::move(steps);
    return out;
}

namespace {

double golden_section_minimize(const std::function<double(double)>& f, double tol) {
    const double gr = 0.6180339887498949; // (sqrt(5) - 1) / 2
    double a = 0.0, b = 1.0;
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > tol) {
        if (f1 <= f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = f(x2);
        }
    }
    double mid = 0.5 * (a + b);

    // Value comparisons flatten out at sqrt(machine eps) around the minimum;
    // one parabolic fit with a wide stencil recovers full precision.
    const double h = 1e-5;
    if (mid > h && mid < 1.0 - h) {
        double fp = f(mid + h), fm = f(mid - h), fc = f(mid);
        double denom = fp - 2.0 * fc + fm;
        if (denom > 0.0) {
            double shift = -0.5 * h * (fp - fm) / denom;
            if (std::abs(shift) <= 2.0 * h) mid += shift;
        }
    }

    // include the endpoints; the minimizer may sit on the boundary
    double fmid = f(mid), f0 = f(0.0), fe = f(1.0);
    if (f0 <= fmid && f0 <= fe) return 0.0;
    if (fe <= fmid && fe <= f0) return 1.0;
    return mid;
}

std::int64_t simplex_grid_count(int points, int q) {
    // C(q + points - 1, points - 1), saturating
    std::int64_t c = 1;
    for (int i = 1; i < points; ++i) {
        c = c * (q + i) / i;
        if (c > 100'000'000) return 100'000'000;
    }
    return c;
}

struct GridEval {
    const EnergySpec* energy;
    const std::string* fiber;
    double inv_two_tau;
    int q;
    std::vector<GraphPoint> candidates;
    std::vector<double> cost_to_rho; // candidates x supp(rho)
    std::vector<double> cost_to_h;   // candidates x supp(h)
    std::vector<double> rho_masses;
    std::vector<double> h_masses;

    double objective(const std::vector<int>& counts) const {
        int m = static_cast<int>(candidates.size());
        std::vector<double> nu(static_cast<std::size_t>(m));
        for (int i = 0; i < m; ++i)
            nu[static_cast<std::size_t>(i)] =
                static_cast<double>(counts[static_cast<std::size_t>(i)]) / q;
        double c_h = solve_transport_matrix(cost_to_h, m, static_cast<int>(h_masses.size()), nu,
                                            h_masses)
                         .cost;
        double c_r = solve_transport_matrix(cost_to_rho, m, static_cast<int>(rho_masses.size()),
                                            nu, rho_masses)
                         .cost;
        return energy->local_energy(*fiber, std::sqrt(std::max(0.0, c_h))) + c_r * inv_two_tau;
    }
};

// Enumerates compositions of q over m slots in increasing lexicographic
// order, calling visit(counts).
template <typename Visit>
void enumerate_simplex_grid(int m, int q, Visit&& visit) {
    std::vector<int> counts(static_cast<std::size_t>(m), 0);
    auto rec = [&](auto&& self, int slot, int remaining) -> void {
        if (slot == m - 1) {
            counts[static_cast<std::size_t>(slot)] = remaining;
            visit(counts);
            return;
        }
        for (int v = 0; v <= remaining; ++v) {
            counts[static_cast<std::size_t>(slot)] = v;
            self(self, slot + 1, remaining - v);
        }
    };
    rec(rec, 0, q);
}

} // namespace

NumericStepResult jko_step_numeric(const SchemeState& state, const MetricGraph& g,
                                   const NumericOptions& options) {
    const auto& fibers = state.field.fibers();
    std::vector<NumericFiberStep> steps(fibers.size());

    if (options.mode == NumericMode::GridBruteForce &&
        (options.grid_denominator < 1 || options.grid_denominator > 64))
        throw invalid_argument("jko_step_numeric: grid step must satisfy epsilon >= 1/64");

    for (std::size_t i = 0; i < fibers.size(); ++i) {
        const Fiber& f = fibers[i];
        const DiscreteMeasure& h = target_for(state.frozen_signal, f.id);
        NumericFiberStep fs;
        fs.fiber = f.id;

        if (f.measure == h) {
            fs.next = f.measure;
            steps[i] = std::move(fs);
            continue;
        }

        TransportPlan plan = solve_ot(g, f.measure, h);
        double dist = std::sqrt(std::max(0.0, plan.cost));

        if (options.mode == NumericMode::GeodesicSearch) {
            double inv_two_tau = 1.0 / (2.0 * state.tau);
            auto along = [&](double t) {
                double d = t * dist;
                return state.energy.local_energy(f.id, (1.0 - t) * dist) + d * d * inv_two_tau;
            };
            double t_star = golden_section_minimize(along, options.t_tolerance);
            DiscreteMeasure cand = displacement(g, plan, t_star);
            double j_cand = state.energy.local_energy(f.id, w2(g, cand, h)) +
                            w2(g, cand, f.measure) * w2(g, cand, f.measure) * inv_two_tau;
            double j_stay = state.energy.local_energy(f.id, dist);
            if (j_cand <= j_stay) {
                fs.next = std::move(cand);
                fs.t_star = t_star;
            } else {
                fs.next = f.measure;
                fs.t_star = 0.0;
            }
            steps[i] = std::move(fs);
            continue;
        }

        // Grid brute force over a finite candidate support.
        GridEval ev;
        ev.energy = &state.energy;
        ev.fiber = &f.id;
        ev.inv_two_tau = 1.0 / (2.0 * state.tau);
        ev.q = options.grid_denominator;
        for (const Atom& a : f.measure.atoms()) ev.candidates.push_back(a.point);
        for (const Atom& a : h.atoms()) ev.candidates.push_back(a.point);
        std::vector<double> fractions;
        if (state.energy.has_closed_form()) {
            fractions = {contraction_factor(state.energy.alpha_for(f.id), state.tau)};
        } else {
            fractions = {0.25, 0.5, 0.75};
        }
        for (const PlanEntry& e : plan.entries) {
            const GraphPoint& src = plan.source_points[static_cast<std::size_t>(e.k)];
            const GraphPoint& dst = plan.target_points[static_cast<std::size_t>(e.l)];
            if (src == dst) continue;
            for (double frac : fractions) ev.candidates.push_back(g.geodesic_point(src, dst, frac));
        }
        std::sort(ev.candidates.begin(), ev.candidates.end());
        ev.candidates.erase(std::unique(ev.candidates.begin(), ev.candidates.end()),
                            ev.candidates.end());
        int m = static_cast<int>(ev.candidates.size());
        if (m > options.max_candidate_points)
            throw capacity_error("jko_step_numeric: candidate support exceeds cap");
        if (simplex_grid_count(m, ev.q) > 10'000'000)
            throw capacity_error("jko_step_numeric: mass grid exceeds 1e7 candidates");

        for (const Atom& a : f.measure.atoms()) ev.rho_masses.push_back(a.mass);
        for (const Atom& a : h.atoms()) ev.h_masses.push_back(a.mass);
        ev.cost_to_rho.resize(static_cast<std::size_t>(m) * f.measure.size());
        ev.cost_to_h.resize(static_cast<std::size_t>(m) * h.size());
        for (int c = 0; c < m; ++c) {
            for (std::size_t j = 0; j < f.measure.size(); ++j) {
                double d = g.distance(ev.candidates[static_cast<std::size_t>(c)],
                                      f.measure.atoms()[j].point);
                ev.cost_to_rho[static_cast<std::size_t>(c) * f.measure.size() + j] = d * d;
            }
            for (std::size_t j = 0; j < h.size(); ++j) {
                double d = g.distance(ev.candidates[static_cast<std::size_t>(c)],
                                      h.atoms()[j].point);
                ev.cost_to_h[static_cast<std::size_t>(c) * h.size() + j] = d * d;
            }
        }

        std::int64_t combos = simplex_grid_count(m, ev.q);
        bool cache = combos <= 2'000'000;
        std::vector<double> values;
        if (cache) values.reserve(static_cast<std::size_t>(combos));

        double best = std::numeric_limits<double>::infinity();
        enumerate_simplex_grid(m, ev.q, [&](const std::vector<int>& counts) {
            double v = ev.objective(counts);
            if (cache) values.push_back(v);
            if (v < best) best = v;
        });

        // Second pass: first (lexicographically smallest) mass vector within
        // 1e-12 of the optimum wins; more than one such vector sets the
        // multiplicity flag.
        std::vector<int> winner;
        int near_ties = 0;
        std::size_t index = 0;
        enumerate_simplex_grid(m, ev.q, [&](const std::vector<int>& counts) {
            double v = cache ? values[index++] : ev.objective(counts);
            if (v <= best + 1e-12) {
                ++near_ties;
                if (winner.empty()) winner = counts;
            }
        });

        double j_stay = state.energy.local_energy(f.id, dist);
        if (best > j_stay) {
            fs.next = f.measure;
        } else {
            std::vector<Atom> atoms;
            for (int c = 0; c < m; ++c) {
                if (winner[static_cast<std::size_t>(c)] > 0)
                    atoms.push_back({ev.candidates[static_cast<std::size_t>(c)],
                                     static_cast<double>(winner[static_cast<std::size_t>(c)]) / ev.q});
            }
            fs.next = DiscreteMeasure::make(std::move(atoms));
            fs.tie_multiplicity = near_ties > 1;
        }
        steps[i] = std::move(fs);
    }

    NumericStepResult out;
    std::vector<DiscreteMeasure> measures;
    measures.reserve(steps.size());
    for (const NumericFiberStep& fs : steps) measures.push_back(fs.next);
    out.next = state.field.with_measures(std::move(measures));
    out.fibers = std::move(steps);
    return out;
}

double frozen_energy(const MemoryField& field, const SignalMap& targets, const EnergySpec& spec,
                     const MetricGraph& g) {
    double total = 0.0;
    for (const Fiber& f : field.fibers()) {
        const DiscreteMeasure& h = target_for(targets, f.id);
        double local;
        const auto* gqe = spec.as_gqe();
        if (gqe && !gqe->map.identity) {
            DiscreteMeasure mapped = gqe->map.apply(f.id, f.measure, h);
            double d = w2(g, mapped, h);
            local = 0.5 * gqe->alpha * d * d;
        } else {
            local = spec.local_energy(f.id, w2(g, f.measure, h));
        }
        total += f.weight * local;
    }
    return total;
}

double edi_residual(const MemoryField& prev, const MemoryField& next, const SignalMap& targets,
                    const EnergySpec& spec, double tau, const MetricGraph& g) {
    double e_prev = frozen_energy(prev, targets, spec, g);
    double e_next = frozen_energy(next, targets, spec, g);
    double step = field_w(g, next, prev);
    return e_prev - e_next - step * step / (2.0 * tau);
}

} // namespace hwg
