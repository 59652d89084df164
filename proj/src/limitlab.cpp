#include "hwg/limitlab.hpp"

#include <algorithm>
#include <cmath>

#include "hwg/rng.hpp"

namespace hwg {

namespace {

struct SleepRig {
    MetricGraph graph;
    std::vector<GraphPoint> leaf_points;
    MemoryField initial;
    EnergySpec energy;
    double alpha;
    double kappa;
    double context_scale;
    bool constant_signal;

    SleepRig(const SleepScenario& s, bool constant)
        : graph(star_tree(std::vector<double>(static_cast<std::size_t>(s.leaves), 1.0))),
          energy(GeneralizedQuadratic{s.alpha, HebbianMap{}, 0.0, 1.0}),
          alpha(s.alpha), kappa(s.kappa), context_scale(s.context_scale),
          constant_signal(constant) {
        for (int i = 1; i <= s.leaves; ++i) leaf_points.push_back(vertex_point(i));
        Rng rng(s.seed);
        std::vector<Fiber> fibers;
        for (int x = 0; x < s.fiber_count; ++x) {
            std::vector<Atom> atoms;
            double total = 0.0;
            std::vector<double> raw;
            for (int i = 0; i < s.leaves; ++i) {
                double m = 0.1 + rng.next_double();
                raw.push_back(m);
                total += m;
            }
            for (int i = 0; i < s.leaves; ++i)
                atoms.push_back({leaf_points[static_cast<std::size_t>(i)], raw[static_cast<std::size_t>(i)] / total});
            fibers.push_back({"x" + std::to_string(x), 1.0 / s.fiber_count,
                              DiscreteMeasure::make(std::move(atoms))});
        }
        initial = MemoryField(std::move(fibers));
    }

    Context context_of(const MemoryField& field) const {
        std::map<std::string, std::vector<std::complex<double>>> values;
        for (const Fiber& f : field.fibers()) {
            std::vector<std::complex<double>> v;
            for (const GraphPoint& leaf : leaf_points)
                v.emplace_back(context_scale * w2(graph, f.measure, DiscreteMeasure::dirac(leaf)),
                               0.0);
            values.emplace(f.id, std::move(v));
        }
        return Context(leaf_points.size(), std::move(values));
    }

    SignalMap signal_of(const MemoryField& field, const Context& ctx) const {
        SignalMap out;
        int edge_count = graph.edge_count();
        int fiber_index = 0;
        for (const Fiber& f : field.fibers()) {
            if (constant_signal) {
                out.emplace(f.id, DiscreteMeasure::dirac(
                                      leaf_points[static_cast<std::size_t>(fiber_index %
                                                                           leaf_points.size())]));
            } else {
                const auto& phi = ctx.at(f.id);
                double v = 0.0;
                for (const auto& z : phi) v += z.real();
                v /= static_cast<double>(phi.size());
                int e = fiber_index % edge_count;
                double len = graph.edge(e).length;
                double offset = std::clamp(kappa * v, 0.0, len);
                out.emplace(f.id, DiscreteMeasure::dirac(edge_point(graph, e, offset)));
            }
            ++fiber_index;
        }
        return out;
    }

    double true_energy(const MemoryField& field, const Context& ctx) const {
        return frozen_energy(field, signal_of(field, ctx), energy, graph);
    }

    double field_moment(const MemoryField& field) const {
        double s = 0.0;
        for (const Fiber& f : field.fibers())
            s += f.weight * second_moment(f.measure, graph, vertex_point(0));
        return s;
    }
};

TrajectoryReport run_rig(const SleepRig& rig, const SleepScenario& s, double tau, double horizon) {
    TrajectoryReport report;
    report.tau = tau;
    report.alpha = s.alpha;
    report.lipschitz_total = sleep_scenario_constants(s).lipschitz_total;

    MemoryField field = rig.initial;
    Context ctx = rig.context_of(field);
    report.energy.push_back(rig.true_energy(field, ctx));
    report.moment.push_back(rig.field_moment(field));
    report.fields.push_back(field);

    int steps = static_cast<int>(std::floor(horizon / tau + 1e-9));
    for (int n = 0; n < steps; ++n) {
        SignalMap h = rig.signal_of(field, ctx);
        SchemeState state{n, tau, field, ctx, h, rig.energy};
        StepResult result = jko_step_quadratic(state, rig.graph);

        report.w_step.push_back(field_w(rig.graph, result.next, field));
        report.frozen_next.push_back(frozen_energy(result.next, h, rig.energy, rig.graph));

        field = result.next;
        ctx = rig.context_of(field);
        report.energy.push_back(rig.true_energy(field, ctx));
        report.moment.push_back(rig.field_moment(field));
        report.fields.push_back(field);
    }
    return report;
}

} // namespace

ScenarioConstants sleep_scenario_constants(const SleepScenario& s) {
    ScenarioConstants c;
    // Weights are 1/K each, mu(X) = 1; the per-fiber TV norm is bounded by
    // d_C / sqrt(min weight) = sqrt(K) d_C.
    double min_weight = 1.0 / s.fiber_count;
    c.lipschitz_signal = (s.kappa / s.leaves) / std::sqrt(min_weight);
    c.lipschitz_map = 1.0;
    c.lipschitz_context = s.context_scale * s.leaves;
    double mu_total = 1.0;
    c.lipschitz_total = c.lipschitz_signal * (1.0 + c.lipschitz_map) *
                        std::sqrt(1.0 + c.lipschitz_context * c.lipschitz_context) *
                        std::sqrt(mu_total);
    return c;
}

TrajectoryReport run_sleep_scenario(const SleepScenario& s, double tau, double horizon) {
    SleepRig rig(s, false);
    return run_rig(rig, s, tau, horizon);
}

TrajectoryReport run_constant_target_scenario(const SleepScenario& s, double tau, double horizon) {
    SleepRig rig(s, true);
    TrajectoryReport report = run_rig(rig, s, tau, horizon);
    report.lipschitz_total = 0.0; // constant signal: no freezing error source
    return report;
}

std::vector<CheckRow> freezing_error_check(const TrajectoryReport& report, double alpha, double L,
                                           double tau) {
    if (report.frozen_next.empty())
        throw invalid_argument("freezing_error_check: empty trajectory");
    std::vector<CheckRow> rows;
    for (int n = 0; n < report.steps(); ++n) {
        double lhs = std::abs(report.energy[static_cast<std::size_t>(n + 1)] -
                              report.frozen_next[static_cast<std::size_t>(n)]);
        double w = report.w_step[static_cast<std::size_t>(n)];
        double rhs = w * w / (4.0 * tau) +
                     alpha * L * L * tau *
                         (report.energy[static_cast<std::size_t>(n + 1)] +
                          report.energy[static_cast<std::size_t>(n)]);
        rows.push_back({"freezing", n, lhs, rhs, lhs <= rhs + 1e-9});
    }
    return rows;
}

GroenwallResult groenwall_check(const TrajectoryReport& report, double alpha, double L,
                                double tau) {
    if (alpha * L * L * tau > 0.5)
        throw invalid_argument("groenwall_check: smallness condition alpha L^2 tau <= 1/2 fails");
    GroenwallResult out;
    double factor = 1.0 + 4.0 * alpha * L * L * tau;
    for (int n = 0; n < report.steps(); ++n) {
        double e0 = report.energy[static_cast<std::size_t>(n)];
        double e1 = report.energy[static_cast<std::size_t>(n + 1)];
        bool pass = e1 <= factor * e0 + 1e-9;
        out.rows.push_back({"groenwall-step", n, e1, factor * e0, pass});
        out.pass = out.pass && pass;
        if (e0 > 1e-300) out.max_ratio = std::max(out.max_ratio, e1 / e0);
        double cumulative = report.energy[0] * std::exp(2.0 * alpha * L * L * (n + 1) * tau);
        bool cpass = e1 <= cumulative + 1e-9;
        out.rows.push_back({"groenwall-cumulative", n, e1, cumulative, cpass});
        out.pass = out.pass && cpass;
    }
    return out;
}

StabilityResult stability_report(const TrajectoryReport& report, double horizon) {
    StabilityResult out;
    int max_steps = static_cast<int>(std::floor(horizon / report.tau + 1e-9));
    int n_steps = std::min(max_steps, report.steps());
    for (int n = 0; n <= n_steps; ++n) {
        out.sup_energy = std::max(out.sup_energy, report.energy[static_cast<std::size_t>(n)]);
        out.sup_moment = std::max(out.sup_moment, report.moment[static_cast<std::size_t>(n)]);
    }
    for (int n = 0; n < n_steps; ++n) {
        double w = report.w_step[static_cast<std::size_t>(n)];
        out.action_sum += w * w / report.tau;
    }
    if (!std::isfinite(out.sup_energy) || !std::isfinite(out.action_sum) ||
        !std::isfinite(out.sup_moment))
        throw std::logic_error("stability_report: non-finite supremum");
    return out;
}

PerturbedEdiResult perturbed_edi_check(const TrajectoryReport& report, double alpha, double L,
                                       double tau) {
    PerturbedEdiResult out;
    double action_quarter = 0.0;
    double energy_integral = 0.0;
    double scale = std::max(1.0, report.energy[0]);
    for (int n = 1; n <= report.steps(); ++n) {
        double w = report.w_step[static_cast<std::size_t>(n - 1)];
        action_quarter += 0.25 * w * w / tau;
        energy_integral += tau * report.energy[static_cast<std::size_t>(n - 1)];
        double lhs = report.energy[static_cast<std::size_t>(n)] + action_quarter;
        double rhs = report.energy[0] + 2.0 * alpha * L * L * energy_integral;
        double residual = lhs - rhs;
        out.max_residual = std::max(out.max_residual, residual);
        bool pass = residual <= 1e-6 * scale;
        out.rows.push_back({"perturbed-edi", n, lhs, rhs, pass});
        out.pass = out.pass && pass;
    }
    return out;
}

TauRefinementResult tau_refinement(const SleepScenario& s, const std::vector<double>& taus,
                                   double horizon, const std::vector<double>& probe_times) {
    if (taus.size() < 2) throw invalid_argument("tau_refinement: needs at least two tau values");
    for (std::size_t i = 0; i + 1 < taus.size(); ++i) {
        if (std::abs(taus[i + 1] - 0.5 * taus[i]) > 1e-12)
            throw invalid_argument("tau_refinement: tau list must halve at each entry");
    }
    SleepRig rig(s, false);
    std::vector<TrajectoryReport> reports;
    for (double tau : taus) reports.push_back(run_rig(rig, s, tau, horizon));

    TauRefinementResult out;
    out.taus = taus;
    auto field_at = [&](const TrajectoryReport& r, double t) -> const MemoryField& {
        auto idx = static_cast<std::size_t>(std::floor(t / r.tau + 1e-9));
        idx = std::min(idx, r.fields.size() - 1);
        return r.fields[idx];
    };

    for (std::size_t i = 0; i + 1 < reports.size(); ++i) {
        double gap = 0.0;
        for (double t : probe_times)
            gap = std::max(gap,
                           field_w(rig.graph, field_at(reports[i], t), field_at(reports[i + 1], t)));
        out.gaps.push_back(gap);
    }
    for (std::size_t i = 0; i + 1 < out.gaps.size(); ++i) {
        out.cauchy_factors.push_back(out.gaps[i + 1] > 0.0 ? out.gaps[i] / out.gaps[i + 1] : 0.0);
    }

    for (const auto& r : reports) {
        auto st = stability_report(r, horizon);
        out.stability.push_back(st);
        out.holder_constant = std::max(out.holder_constant, st.action_sum);
    }
    for (const auto& r : reports) {
        for (double t : probe_times) {
            for (double u : probe_times) {
                if (u <= t) continue;
                double w = field_w(rig.graph, field_at(r, t), field_at(r, u));
                double bound = std::sqrt(2.0 * out.holder_constant * (u - t));
                out.max_holder_violation = std::max(out.max_holder_violation, w - bound);
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

ParametricEnergy make_quadratic_energy(std::vector<double> stiffness,
                                       std::vector<double> center) {
    if (stiffness.size() != center.size())
        throw invalid_argument("make_quadratic_energy: size mismatch");
    ParametricEnergy e;
    e.dim = static_cast<int>(stiffness.size());
    e.value = [stiffness, center](const std::vector<double>& y) {
        double v = 0.0;
        for (std::size_t i = 0; i < stiffness.size(); ++i) {
            double d = y[i] - center[i];
            v += 0.5 * stiffness[i] * d * d;
        }
        return v;
    };
    e.gradient = [stiffness, center](const std::vector<double>& y) {
        std::vector<double> g(y.size());
        for (std::size_t i = 0; i < stiffness.size(); ++i) g[i] = stiffness[i] * (y[i] - center[i]);
        return g;
    };
    return e;
}

ParametricEnergy make_coupled_quadratic_energy(std::vector<double> matrix,
                                               std::vector<double> center) {
    int dim = static_cast<int>(center.size());
    if (matrix.size() != static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim))
        throw invalid_argument("make_coupled_quadratic_energy: matrix size mismatch");
    ParametricEnergy e;
    e.dim = dim;
    e.value = [matrix, center, dim](const std::vector<double>& y) {
        double v = 0.0;
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                v += 0.5 * (y[static_cast<std::size_t>(i)] - center[static_cast<std::size_t>(i)]) *
                     matrix[static_cast<std::size_t>(i) * dim + j] *
                     (y[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)]);
            }
        }
        return v;
    };
    e.gradient = [matrix, center, dim](const std::vector<double>& y) {
        std::vector<double> g(static_cast<std::size_t>(dim), 0.0);
        for (int i = 0; i < dim; ++i) {
            for (int j = 0; j < dim; ++j) {
                g[static_cast<std::size_t>(i)] +=
                    matrix[static_cast<std::size_t>(i) * dim + j] *
                    (y[static_cast<std::size_t>(j)] - center[static_cast<std::size_t>(j)]);
            }
        }
        return g;
    };
    return e;
}

ParametricEnergy make_quartic_energy(std::vector<double> stiffness, std::vector<double> center,
                                     double quartic) {
    if (stiffness.size() != center.size())
        throw invalid_argument("make_quartic_energy: size mismatch");
    ParametricEnergy e;
    e.dim = static_cast<int>(stiffness.size());
    e.value = [stiffness, center, quartic](const std::vector<double>& y) {
        double v = 0.0;
        for (std::size_t i = 0; i < stiffness.size(); ++i) {
            double d = y[i] - center[i];
            v += 0.5 * stiffness[i] * d * d + quartic * d * d * d * d;
        }
        return v;
    };
    e.gradient = [stiffness, center, quartic](const std::vector<double>& y) {
        std::vector<double> g(y.size());
        for (std::size_t i = 0; i < stiffness.size(); ++i) {
            double d = y[i] - center[i];
            g[i] = stiffness[i] * d + 4.0 * quartic * d * d * d;
        }
        return g;
    };
    return e;
}

namespace {

double norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

std::vector<double> descend_to_critical(const ParametricEnergy& e, std::vector<double> y,
                                        double grad_tol) {
    double lr = 0.5;
    double value = e.value(y);
    for (long iter = 0; iter < 2'000'000; ++iter) {
        auto g = e.gradient(y);
        if (norm(g) <= grad_tol) return y;
        std::vector<double> trial(y.size());
        double step = lr;
        bool accepted = false;
        for (int halving = 0; halving < 60; ++halving) {
            for (std::size_t i = 0; i < y.size(); ++i) trial[i] = y[i] - step * g[i];
            double tv = e.value(trial);
            if (tv <= value) {
                y = trial;
                value = tv;
                lr = std::min(0.5, step * 2.0);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
    }
    throw std::logic_error("descend_to_critical: no convergence to a critical point");
}

std::vector<double> flow_map(const ParametricEnergy& e, std::vector<double> y, double tau,
                             int substeps) {
    double h = tau / substeps;
    std::vector<double> k1, k2, k3, k4, tmp(y.size());
    for (int s = 0; s < substeps; ++s) {
        k1 = e.gradient(y);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] - 0.5 * h * k1[i];
        k2 = e.gradient(tmp);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] - 0.5 * h * k2[i];
        k3 = e.gradient(tmp);
        for (std::size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] - h * k3[i];
        k4 = e.gradient(tmp);
        for (std::size_t i = 0; i < y.size(); ++i)
            y[i] -= h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return y;
}

} // namespace

std::vector<double> symmetric_eigenvalues(std::vector<double> a, int dim) {
    auto at = [&](int i, int j) -> double& {
        return a[static_cast<std::size_t>(i) * dim + j];
    };
    for (int sweep = 0; sweep < 200; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < dim; ++i) {
            for (int j = i + 1; j < dim; ++j) off += at(i, j) * at(i, j);
        }
        if (off < 1e-28) break;
        for (int p = 0; p < dim; ++p) {
            for (int q = p + 1; q < dim; ++q) {
                if (std::abs(at(p, q)) < 1e-300) continue;
                double theta = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
                double t = (theta >= 0.0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < dim; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < dim; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    std::vector<double> eig(static_cast<std::size_t>(dim));
    for (int i = 0; i < dim; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
    std::sort(eig.begin(), eig.end());
    return eig;
}

SpectralCheckResult spectral_stability_check(const ParametricEnergy& energy,
                                             const std::vector<double>& start, double tau,
                                             const std::vector<double>& tau_invariance_list) {
    if (static_cast<int>(start.size()) != energy.dim)
        throw invalid_argument("spectral_stability_check: start dimension mismatch");
    SpectralCheckResult out;
    out.fixed_point = descend_to_critical(energy, start, 1e-10);
    out.grad_norm = norm(energy.gradient(out.fixed_point));

    const int dim = energy.dim;
    const double h = 1e-5;
    std::vector<double> hessian(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int j = 0; j < dim; ++j) {
        auto yp = out.fixed_point;
        auto ym = out.fixed_point;
        yp[static_cast<std::size_t>(j)] += h;
        ym[static_cast<std::size_t>(j)] -= h;
        auto gp = energy.gradient(yp);
        auto gm = energy.gradient(ym);
        for (int i = 0; i < dim; ++i)
            hessian[static_cast<std::size_t>(i) * dim + j] =
                (gp[static_cast<std::size_t>(i)] - gm[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
    // symmetrize
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            double m = 0.5 * (hessian[static_cast<std::size_t>(i) * dim + j] +
                              hessian[static_cast<std::size_t>(j) * dim + i]);
            hessian[static_cast<std::size_t>(i) * dim + j] = m;
            hessian[static_cast<std::size_t>(j) * dim + i] = m;
        }
    }
    out.hessian_eigenvalues = symmetric_eigenvalues(hessian, dim);
    out.saddle = !out.hessian_eigenvalues.empty() && out.hessian_eigenvalues.front() < -1e-8;

    const int substeps = 4000;
    std::vector<double> jac(static_cast<std::size_t>(dim) * dim, 0.0);
    for (int j = 0; j < dim; ++j) {
        auto yp = out.fixed_point;
        auto ym = out.fixed_point;
        yp[static_cast<std::size_t>(j)] += h;
        ym[static_cast<std::size_t>(j)] -= h;
        auto fp = flow_map(energy, yp, tau, substeps);
        auto fm = flow_map(energy, ym, tau, substeps);
        for (int i = 0; i < dim; ++i)
            jac[static_cast<std::size_t>(i) * dim + j] =
                (fp[static_cast<std::size_t>(i)] - fm[static_cast<std::size_t>(i)]) / (2.0 * h);
    }
    for (int i = 0; i < dim; ++i) {
        for (int j = i + 1; j < dim; ++j) {
            double m = 0.5 * (jac[static_cast<std::size_t>(i) * dim + j] +
                              jac[static_cast<std::size_t>(j) * dim + i]);
            jac[static_cast<std::size_t>(i) * dim + j] = m;
            jac[static_cast<std::size_t>(j) * dim + i] = m;
        }
    }
    out.flow_eigenvalues = symmetric_eigenvalues(jac, dim);
    std::sort(out.flow_eigenvalues.begin(), out.flow_eigenvalues.end(), std::greater<double>());

    for (int i = 0; i < dim; ++i) {
        double expected = std::exp(-tau * out.hessian_eigenvalues[static_cast<std::size_t>(i)]);
        out.max_relation_gap = std::max(
            out.max_relation_gap,
            std::abs(out.flow_eigenvalues[static_cast<std::size_t>(i)] - expected));
    }

    // tau-invariance of the located fixed point under the proximal step
    for (double t : tau_invariance_list) {
        ParametricEnergy prox;
        prox.dim = dim;
        auto base = out.fixed_point;
        prox.value = [&energy, base, t](const std::vector<double>& y) {
            double v = energy.value(y);
            for (std::size_t i = 0; i < y.size(); ++i) {
                double d = y[i] - base[i];
                v += d * d / (2.0 * t);
            }
            return v;
        };
        prox.gradient = [&energy, base, t](const std::vector<double>& y) {
            auto g = energy.gradient(y);
            for (std::size_t i = 0; i < y.size(); ++i) g[i] += (y[i] - base[i]) / t;
            return g;
        };
        auto prox_point = descend_to_critical(prox, base, 1e-12);
        double gap = 0.0;
        for (std::size_t i = 0; i < prox_point.size(); ++i)
            gap = std::max(gap, std::abs(prox_point[i] - base[i]));
        out.max_tau_invariance_gap = std::max(out.max_tau_invariance_gap, gap);
    }
    return out;
}

} // namespace hwg
