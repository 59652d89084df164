#include "hwg/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>

#include "hwg/io.hpp"
#include "hwg/limitlab.hpp"
#include "hwg/mirror.hpp"
#include "hwg/projector.hpp"
#include "hwg/spectral.hpp"

namespace hwg {

namespace {

namespace fs = std::filesystem;

struct Verdicts {
    nlohmann::json rows = nlohmann::json::array();
    bool all_pass = true;

    void add(const std::string& check, int step, double lhs, double rhs, bool pass) {
        rows.push_back({{"check", check}, {"step", step}, {"lhs", lhs}, {"rhs", rhs},
                        {"pass", pass}});
        all_pass = all_pass && pass;
    }
    void add(const CheckRow& row) { add(row.check, row.step, row.lhs, row.rhs, row.pass); }

    void write(const std::string& path) const {
        std::ofstream out(path);
        out << rows.dump(2) << '\n';
    }
};

std::string out_path(const RunConfig& cfg, const std::string& file) {
    fs::create_directories(cfg.out);
    return (fs::path(cfg.out) / file).string();
}

void write_observable_csv(const RunConfig& cfg, const std::string& name,
                          const std::vector<SignalMap>& observables) {
    if (cfg.format == "json") {
        nlohmann::json steps = nlohmann::json::array();
        for (std::size_t n = 0; n < observables.size(); ++n) {
            nlohmann::json fibers = nlohmann::json::object();
            for (const auto& [id, m] : observables[n]) fibers[id] = measure_to_json(m);
            steps.push_back({{"step", n}, {"fibers", fibers}});
        }
        std::ofstream out(out_path(cfg, name + "_observable.json"));
        out << steps.dump(2) << '\n';
        return;
    }
    CsvWriter csv(out_path(cfg, name + "_observable.csv"));
    csv.row({"step", "fiber", "point", "mass"});
    for (std::size_t n = 0; n < observables.size(); ++n) {
        for (const auto& [id, m] : observables[n]) {
            for (const Atom& a : m.atoms())
                csv.row({std::to_string(n), id, a.point.to_string(), format_double(a.mass)});
        }
    }
}

void write_trajectory_csv(const RunConfig& cfg, const std::string& name, const MetricGraph& g,
                          const QuadraticTrajectory& traj, const EnergySpec& energy) {
    CsvWriter atoms(out_path(cfg, name + "_trajectory.csv"));
    atoms.row({"step", "fiber", "point", "mass"});
    auto dump_field = [&](int step, const MemoryField& f) {
        for (const Fiber& fb : f.fibers()) {
            for (const Atom& a : fb.measure.atoms())
                atoms.row({std::to_string(step), fb.id, a.point.to_string(),
                           format_double(a.mass)});
        }
    };
    dump_field(0, traj.initial);
    for (std::size_t n = 0; n < traj.steps.size(); ++n)
        dump_field(static_cast<int>(n + 1), traj.steps[n].next);

    CsvWriter stats(out_path(cfg, name + "_steps.csv"));
    stats.row({"step", "energy", "edi_residual", "field_w_step"});
    const MemoryField* prev = &traj.initial;
    for (std::size_t n = 0; n < traj.steps.size(); ++n) {
        const MemoryField& next = traj.steps[n].next;
        double e = frozen_energy(*prev, traj.signals[n], energy, g);
        double res = edi_residual(*prev, next, traj.signals[n], energy, traj.tau, g);
        double w = field_w(g, next, *prev);
        stats.row({std::to_string(n), format_double(e), format_double(res), format_double(w)});
        prev = &next;
    }
}

MetricGraph unit_star(int leaves) {
    return star_tree(std::vector<double>(static_cast<std::size_t>(leaves), 1.0));
}

DiscreteMeasure random_leaf_measure(Rng& rng, int leaves) {
    std::vector<Atom> atoms;
    double total = 0.0;
    std::vector<double> raw;
    for (int i = 0; i < leaves; ++i) {
        double m = 0.05 + rng.next_double();
        raw.push_back(m);
        total += m;
    }
    for (int i = 0; i < leaves; ++i) atoms.push_back({vertex_point(i + 1), raw[static_cast<std::size_t>(i)] / total});
    return DiscreteMeasure::make(std::move(atoms));
}

Context empty_context() { return Context(0, {}); }

// ----------------------------------------------------------------- scenarios

int scenario_ema_basic(const RunConfig& cfg) {
    MetricGraph g = unit_star(3);
    DiscreteMeasure start = DiscreteMeasure::dirac(vertex_point(1));
    Rng target_rng = Rng::derive(cfg.seed, "ema-basic-target", 0);
    DiscreteMeasure target = random_leaf_measure(target_rng, 3);
    MemoryField field({{"x0", 1.0, start}});
    SignalRule rule = ConstantTarget{{{"x0", target}}};
    EnergySpec energy(PurelyQuadratic{cfg.alpha, {}});
    auto traj = run_quadratic_trajectory(g, field, empty_context(), rule, energy, cfg.tau,
                                         cfg.steps);
    auto projected = project_trajectory(g, traj, {vertex_point(1), vertex_point(2),
                                                  vertex_point(3)});
    write_trajectory_csv(cfg, "ema-basic", g, traj, energy);
    write_observable_csv(cfg, "ema-basic", projected.fast);
    Verdicts v;
    v.add("route-agreement", static_cast<int>(traj.steps.size()), projected.max_route_gap, 1e-12,
          projected.max_route_gap <= 1e-12);
    v.write(out_path(cfg, "ema-basic_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

int scenario_star_transport(const RunConfig& cfg) {
    MetricGraph g = unit_star(3);
    DiscreteMeasure from = DiscreteMeasure::make({{vertex_point(1), 1.0 / 3.0},
                                                  {vertex_point(2), 1.0 / 3.0},
                                                  {vertex_point(3), 1.0 / 3.0}});
    DiscreteMeasure to = DiscreteMeasure::make({{vertex_point(1), 2.0 / 3.0},
                                                {vertex_point(2), 1.0 / 6.0},
                                                {vertex_point(3), 1.0 / 6.0}});
    TransportPlan plan = solve_ot(g, from, to);
    {
        std::ofstream out(out_path(cfg, "star-transport_plan.json"));
        out << plan_to_json(plan).dump(2) << '\n';
    }
    write_plan_csv(out_path(cfg, "star-transport_plan.csv"), plan, g);
    CsvWriter csv(out_path(cfg, "star-transport_interpolation.csv"));
    csv.row({"t", "point", "mass"});
    for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        DiscreteMeasure mid = displacement(g, plan, t);
        for (const Atom& a : mid.atoms())
            csv.row({format_double(t), a.point.to_string(), format_double(a.mass)});
    }
    Verdicts v;
    v.add("plan-cost", 0, plan.cost, 4.0 / 3.0, std::abs(plan.cost - 4.0 / 3.0) <= 1e-12);
    v.write(out_path(cfg, "star-transport_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

int scenario_quadratic_contraction(const RunConfig& cfg) {
    Verdicts v;
    CsvWriter csv(out_path(cfg, "quadratic-contraction.csv"));
    csv.row({"instance", "alpha", "tau", "t_tau", "measured_ratio", "gap"});
    for (int k = 0; k < 100; ++k) {
        Rng rng = Rng::derive(cfg.seed, "contraction", static_cast<std::uint64_t>(k));
        int leaves = 3 + static_cast<int>(rng.next_below(3));
        MetricGraph g = unit_star(leaves);
        DiscreteMeasure rho = random_leaf_measure(rng, leaves);
        DiscreteMeasure h = random_leaf_measure(rng, leaves);
        double alpha = 0.25 + 2.0 * rng.next_double();
        double tau = 0.1 + rng.next_double();
        MemoryField field({{"x0", 1.0, rho}});
        SignalRule rule = ConstantTarget{{{"x0", h}}};
        EnergySpec energy(PurelyQuadratic{alpha, {}});
        SchemeState state = make_scheme_state(0, tau, field, empty_context(), rule, energy);
        StepResult result = jko_step_quadratic(state, g);
        double d_before = w2(g, rho, h);
        double d_step = w2(g, result.next.fiber("x0").measure, rho);
        double t_expected = contraction_factor(alpha, tau);
        double ratio = d_before > 0.0 ? d_step / d_before : t_expected;
        double gap = std::abs(ratio - t_expected);
        csv.row({std::to_string(k), format_double(alpha), format_double(tau),
                 format_double(t_expected), format_double(ratio), format_double(gap)});
        v.add("contraction-ratio", k, gap, 1e-9, gap <= 1e-9);
    }
    v.write(out_path(cfg, "quadratic-contraction_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

int scenario_projector_ema(const RunConfig& cfg) {
    MetricGraph g = unit_star(3);
    std::vector<GraphPoint> y_m{vertex_point(1), vertex_point(2), vertex_point(3)};
    Rng rng = Rng::derive(cfg.seed, "projector-ema", 0);
    MemoryField field({{"x0", 0.5, random_leaf_measure(rng, 3)},
                       {"x1", 0.5, random_leaf_measure(rng, 3)}});
    std::vector<SignalMap> sequence;
    for (int n = 0; n < cfg.steps; ++n) {
        SignalMap m;
        m.emplace("x0", random_leaf_measure(rng, 3));
        m.emplace("x1", random_leaf_measure(rng, 3));
        sequence.push_back(std::move(m));
    }
    SignalRule rule = SequenceSignal{sequence};
    EnergySpec energy(PurelyQuadratic{cfg.alpha, {}});
    auto traj = run_quadratic_trajectory(g, field, empty_context(), rule, energy, cfg.tau,
                                         cfg.steps);
    auto projected = project_trajectory(g, traj, y_m);
    write_observable_csv(cfg, "projector-ema", projected.fast);
    Verdicts v;
    v.add("route-agreement", cfg.steps, projected.max_route_gap, 1e-12,
          projected.max_route_gap <= 1e-12);
    // closed form vs recurrence
    double t = contraction_factor(cfg.alpha, cfg.tau);
    double closed_gap = 0.0;
    for (const Fiber& f : field.fibers()) {
        std::vector<DiscreteMeasure> h_seq;
        for (const auto& sm : traj.signals) h_seq.push_back(sm.at(f.id));
        DiscreteMeasure closed = observable_closed_form(f.measure, h_seq, t, cfg.steps);
        closed_gap = std::max(closed_gap,
                              closed.linf_gap(projected.fast.back().at(f.id)));
    }
    v.add("closed-form", cfg.steps, closed_gap, 1e-12, closed_gap <= 1e-12);
    v.write(out_path(cfg, "projector-ema_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

int scenario_mirror_equivalence(const RunConfig& cfg) {
    int m = 3, n = 2;
    MirrorProblem problem;
    problem.m = m;
    problem.n = n;
    problem.eta = cfg.eta;
    problem.c_max = 1.0;
    problem.w0 = WeightMatrix(m, n);
    Rng rng = Rng::derive(cfg.seed, "mirror", 0);
    for (int j = 0; j < n; ++j) {
        double sum = 0.0;
        std::vector<double> raw;
        for (int i = 0; i < m; ++i) {
            raw.push_back(0.2 + rng.next_double());
            sum += raw.back();
        }
        for (int i = 0; i < m; ++i) problem.w0.at(i, j) = raw[static_cast<std::size_t>(i)] / sum;
    }
    if (cfg.loss == "quadratic") {
        WeightMatrix target(m, n, 1.0 / m);
        problem.loss_gradient = [target](const WeightMatrix& w) {
            WeightMatrix grad(w.m, w.n);
            for (std::size_t c = 0; c < w.data.size(); ++c)
                grad.data[c] = w.data[c] - target.data[c];
            return grad;
        };
    } else {
        WeightMatrix direction(m, n);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i) direction.at(i, j) = 0.9 * (i + 1) / m * (j % 2 ? -1 : 1);
        }
        problem.loss_gradient = [direction](const WeightMatrix&) { return direction; };
    }
    double t = std::max(cfg.t_tau, min_admissible_t(problem.eta, problem.c_max) + 1e-6);
    auto result = verify_equivalence(problem, cfg.steps, t);

    CsvWriter csv(out_path(cfg, "mirror-equivalence.csv"));
    csv.row({"step", "i", "j", "w_md", "w_hwg", "gap"});
    for (std::size_t s = 0; s < result.w_path.size(); ++s) {
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i) {
                double wm = result.w_path[s].at(i, j);
                double wh = result.rho_path[s].at(i, j);
                csv.row({std::to_string(s), std::to_string(i), std::to_string(j),
                         format_double(wm), format_double(wh), format_double(std::abs(wm - wh))});
            }
        }
    }
    Verdicts v;
    v.add("md-equivalence", cfg.steps, result.max_deviation, 1e-12,
          result.max_deviation <= 1e-12);
    v.add("signal-simplex", cfg.steps, result.min_signal_entry, 0.0,
          result.min_signal_entry >= 0.0);
    v.add("signal-columns", cfg.steps, result.max_column_sum_error, 1e-12,
          result.max_column_sum_error <= 1e-12);
    v.write(out_path(cfg, "mirror-equivalence_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

int scenario_consensus(const RunConfig& cfg) {
    SignalMap a{{"x0", DiscreteMeasure::dirac(vertex_point(1))}};
    SignalMap b{{"x0", DiscreteMeasure::dirac(vertex_point(2))}};
    auto result = consensus_gap(a, b, cfg.alpha, cfg.tau, cfg.steps);
    CsvWriter csv(out_path(cfg, "consensus.csv"));
    csv.row({"step", "gap"});
    for (std::size_t nn = 0; nn < result.gaps.size(); ++nn)
        csv.row({std::to_string(nn), format_double(result.gaps[nn])});
    double t = contraction_factor(cfg.alpha, cfg.tau);
    double recurrence_gap = 0.0;
    for (std::size_t nn = 0; nn + 1 < result.gaps.size(); ++nn)
        recurrence_gap = std::max(recurrence_gap, std::abs(result.gaps[nn + 1] -
                                                           std::abs(1.0 - 2.0 * t) *
                                                               result.gaps[nn]));
    Verdicts v;
    v.add("consensus-recurrence", cfg.steps, recurrence_gap, 1e-12, recurrence_gap <= 1e-12);
    double target_rate = -2.0 * cfg.alpha;
    bool rate_ok = cfg.alpha * cfg.tau > 1.0 / 16.0 ||
                   std::abs(result.fitted_rate - target_rate) <= 0.05 * std::abs(target_rate);
    v.add("consensus-rate", cfg.steps, result.fitted_rate, target_rate, rate_ok);
    v.write(out_path(cfg, "consensus_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

// Replays the descent to recover per-step synapse values for the diagnostics
// CSV: (step, energy, per-synapse p / r / theta, alignment cosine, pressure
// residual).
int run_spectral_scenario(const RunConfig& cfg, const std::string& name, SpectralNetwork net,
                          const std::vector<cplx>& psi, const std::vector<cplx>& phi,
                          const PlasticityOptions& options,
                          const std::function<void(Verdicts&, const PlasticityResult&)>& judge) {
    net.validate();
    auto result = run_plasticity(net, psi, phi, options);

    CsvWriter csv(out_path(cfg, name + ".csv"));
    std::vector<std::string> header{"step", "energy"};
    for (int j = 0; j < net.outputs(); ++j) {
        for (int i = 0; i < net.inputs(); ++i) {
            std::string s = std::to_string(i) + "_" + std::to_string(j);
            header.push_back("p_" + s);
            header.push_back("r_" + s);
            header.push_back("theta_" + s);
            header.push_back("align_cos_" + s);
        }
        header.push_back("pressure_residual_" + std::to_string(j));
    }
    csv.row(header);

    SpectralNetwork state = net;
    for (const auto& d : result.trajectory) {
        if (d.step > 0) {
            PlasticityOptions one = options;
            one.steps = 1;
            one.learning_rate = d.learning_rate;
            state = run_plasticity(state, psi, phi, one).net;
        }
        std::vector<std::string> row{std::to_string(d.step), format_double(d.energy)};
        for (int j = 0; j < state.outputs(); ++j) {
            auto rep = pressure_report(state, psi, phi, j);
            for (int i = 0; i < state.inputs(); ++i) {
                row.push_back(format_double(state.p(i, j)));
                row.push_back(format_double(state.r_hat(i, j)));
                row.push_back(format_double(state.theta_hat(i, j)));
                double align = std::cos(state.theta_hat(i, j) +
                                        std::arg(psi[static_cast<std::size_t>(i)]) +
                                        std::arg(state.a(j)) -
                                        std::arg(phi[static_cast<std::size_t>(j)] - state.b(j)));
                row.push_back(format_double(align));
            }
            row.push_back(format_double(rep.equalization_residual));
        }
        csv.row(row);
    }

    Verdicts v;
    judge(v, result);
    v.write(out_path(cfg, name + "_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

int scenario_spectral_pruning(const RunConfig& cfg) {
    SpectralNetwork net(2, 1);
    net.p(0, 0) = 0.6;
    net.p(1, 0) = 0.4;
    net.r_hat(0, 0) = 1.0;
    net.r_hat(1, 0) = 1.0;
    net.theta_hat(0, 0) = 0.0;
    net.theta_hat(1, 0) = 3.14159265358979312;
    std::vector<cplx> psi{cplx(1.0, 0.0), cplx(1.0, 0.0)};
    std::vector<cplx> phi{cplx(2.0, 0.0)};
    PlasticityOptions opt;
    opt.steps = cfg.steps > 10 ? cfg.steps : 400;
    opt.learning_rate = 0.05;
    opt.freeze_phase = true;
    return run_spectral_scenario(cfg, "spectral-pruning", net, psi, phi, opt,
                                 [](Verdicts& v, const PlasticityResult& r) {
                                     double final_p = r.net.p(1, 0);
                                     v.add("pruned-structural", r.trajectory.back().step, final_p,
                                           1e-9, final_p <= 1e-9);
                                     // r decays only while p_1 > 0; it freezes at 0 influence
                                     double final_r = r.net.r_hat(1, 0);
                                     v.add("amplitude-decayed", r.trajectory.back().step, final_r,
                                           1.0, final_r < 1.0);
                                 });
}

int scenario_spectral_selectivity(const RunConfig& cfg) {
    SpectralNetwork net(2, 1);
    net.p(0, 0) = 0.5;
    net.p(1, 0) = 0.5;
    net.r_hat(0, 0) = 2.0;
    net.r_hat(1, 0) = 0.5;
    std::vector<cplx> psi{cplx(1.0, 0.0), cplx(1.0, 0.0)};
    std::vector<cplx> phi{cplx(3.0, 0.0)};
    PlasticityOptions opt;
    opt.steps = cfg.steps > 10 ? cfg.steps : 400;
    opt.learning_rate = 0.05;
    opt.freeze_amplitude = true;
    opt.freeze_phase = true;
    return run_spectral_scenario(cfg, "spectral-selectivity", net, psi, phi, opt,
                                 [](Verdicts& v, const PlasticityResult& r) {
                                     v.add("selected", r.trajectory.back().step, r.net.p(0, 0),
                                           1.0, std::abs(r.net.p(0, 0) - 1.0) <= 1e-9);
                                     v.add("suppressed", r.trajectory.back().step, r.net.p(1, 0),
                                           0.0, r.net.p(1, 0) <= 1e-9);
                                 });
}

int scenario_spectral_alignment(const RunConfig& cfg) {
    SpectralNetwork net(3, 1);
    net.theta_hat(0, 0) = 0.3;
    net.theta_hat(1, 0) = 0.1;
    net.theta_hat(2, 0) = 6.0; // mildly spread but synchronized (pairwise cos > 0)
    for (int i = 0; i < 3; ++i) {
        net.p(i, 0) = 1.0 / 3.0;
        net.r_hat(i, 0) = 1.0;
    }
    std::vector<cplx> psi{cplx(1.0, 0.0), cplx(1.0, 0.0), cplx(1.0, 0.0)};
    std::vector<cplx> phi{cplx(2.5, 0.0)};
    PlasticityOptions opt;
    opt.steps = cfg.steps > 10 ? cfg.steps : 600;
    opt.learning_rate = 0.05;
    return run_spectral_scenario(cfg, "spectral-alignment", net, psi, phi, opt,
                                 [](Verdicts& v, const PlasticityResult& r) {
                                     double min_align = 1.0;
                                     for (double c : r.trajectory.back().min_alignment_cos)
                                         min_align = std::min(min_align, c);
                                     v.add("phase-locking", r.trajectory.back().step, min_align,
                                           0.0, min_align >= 0.0);
                                 });
}

int scenario_spectral_multiscale(const RunConfig& cfg) {
    SpectralNetwork net(4, 1);
    for (int i = 0; i < 4; ++i) {
        net.p(i, 0) = 0.25;
        net.r_hat(i, 0) = 1.0;
    }
    std::vector<cplx> psi{cplx(1.2, 0.0), cplx(0.8, 0.0), cplx(0.4, 0.0), cplx(0.6, 0.0)};
    std::vector<cplx> phi{cplx(2.0, 0.0)};
    MultiscaleOptions opt;
    opt.assemblies = {{0, 1}, {2, 3}};
    opt.rounds = 2;
    opt.fast_steps = 60;
    opt.slow_steps = 60;
    opt.learning_rate = 0.05;
    net.validate();
    auto result = run_multiscale(net, psi, phi, opt);
    CsvWriter csv(out_path(cfg, "spectral-multiscale.csv"));
    csv.row({"row", "energy"});
    for (std::size_t k = 0; k < result.trajectory.size(); ++k)
        csv.row({std::to_string(k), format_double(result.trajectory[k].energy)});
    Verdicts v;
    double first = result.trajectory.front().energy;
    double last = result.trajectory.back().energy;
    v.add("multiscale-descent", static_cast<int>(result.trajectory.size()), last, first,
          last <= first + 1e-12);
    v.write(out_path(cfg, "spectral-multiscale_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

int scenario_sleep_mode(const RunConfig& cfg) {
    SleepScenario s;
    s.seed = cfg.seed;
    s.alpha = cfg.alpha;
    auto constants = sleep_scenario_constants(s);
    std::vector<double> taus = cfg.tau_list;
    if (taus.empty()) taus = {1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0};
    double horizon = cfg.horizon > 0.0 ? cfg.horizon : 1.0;

    Verdicts v;
    CsvWriter csv(out_path(cfg, "sleep-mode-limit.csv"));
    csv.row({"tau", "step", "energy", "frozen_next", "w_step", "moment"});
    for (double tau : taus) {
        auto report = run_sleep_scenario(s, tau, horizon);
        for (int n = 0; n < report.steps(); ++n) {
            csv.row({format_double(tau), std::to_string(n),
                     format_double(report.energy[static_cast<std::size_t>(n)]),
                     format_double(report.frozen_next[static_cast<std::size_t>(n)]),
                     format_double(report.w_step[static_cast<std::size_t>(n)]),
                     format_double(report.moment[static_cast<std::size_t>(n)])});
        }
        for (const auto& row : freezing_error_check(report, s.alpha, constants.lipschitz_total, tau))
            v.add(row);
        auto gr = groenwall_check(report, s.alpha, constants.lipschitz_total, tau);
        for (const auto& row : gr.rows) v.add(row);
        auto pe = perturbed_edi_check(report, s.alpha, constants.lipschitz_total, tau);
        for (const auto& row : pe.rows) v.add(row);
    }
    v.write(out_path(cfg, "sleep-mode-limit_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

int scenario_fixed_point_spectral(const RunConfig& cfg) {
    Verdicts v;
    std::vector<double> invariance{0.25, 0.5, 1.0};

    auto quad1 = make_quadratic_energy({1.0}, {0.5});
    auto r1 = spectral_stability_check(quad1, {3.0}, 1.0, invariance);
    v.add("spectral-1d", 0, r1.max_relation_gap, 1e-6, r1.max_relation_gap <= 1e-6);
    v.add("tau-invariance-1d", 0, r1.max_tau_invariance_gap, 1e-9,
          r1.max_tau_invariance_gap <= 1e-9);

    auto quad2 = make_quadratic_energy({2.0, 2.0}, {0.0, 0.0});
    auto r2 = spectral_stability_check(quad2, {1.0, -2.0}, cfg.tau, invariance);
    v.add("spectral-isotropic-2d", 0, r2.max_relation_gap, 1e-6, r2.max_relation_gap <= 1e-6);

    auto flat = make_quadratic_energy({1.5, 0.0}, {0.0, 0.0});
    auto r3 = spectral_stability_check(flat, {2.0, 1.0}, cfg.tau, {});
    v.add("spectral-flat-direction", 0, std::abs(r3.flow_eigenvalues.front() - 1.0), 1e-6,
          std::abs(r3.flow_eigenvalues.front() - 1.0) <= 1e-6);

    auto quartic = make_quartic_energy({1.0, 0.5}, {0.2, -0.3}, 0.8);
    auto r4 = spectral_stability_check(quartic, {1.0, 1.0}, cfg.tau, invariance);
    v.add("spectral-nonquadratic", 0, r4.max_relation_gap, 1e-4, r4.max_relation_gap <= 1e-4);

    v.write(out_path(cfg, "fixed-point-spectral_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

// Network spec from the config: M, N, p matrix, moments (r, theta), affine
// parameters (a, b), activations psi / phi. Runs plasticity and writes the
// per-synapse diagnostics CSV.
int scenario_custom_spectral(const RunConfig& cfg) {
    if (!cfg.extra.contains("network"))
        throw invalid_argument("custom-spectral: config requires a network spec");
    const auto& spec = cfg.extra.at("network");
    int m = spec.at("inputs").get<int>();
    int n = spec.at("outputs").get<int>();
    SpectralNetwork net(m, n);
    auto fill = [&](const char* key, auto setter) {
        if (!spec.contains(key)) return;
        const auto& matrix = spec.at(key);
        for (int j = 0; j < n; ++j) {
            for (int i = 0; i < m; ++i)
                setter(i, j, matrix.at(static_cast<std::size_t>(j)).at(static_cast<std::size_t>(i))
                                 .template get<double>());
        }
    };
    fill("p", [&](int i, int j, double v) { net.p(i, j) = v; });
    fill("r", [&](int i, int j, double v) { net.r_hat(i, j) = v; });
    fill("theta", [&](int i, int j, double v) { net.theta_hat(i, j) = v; });
    auto complex_of = [](const nlohmann::json& j) {
        if (j.is_array()) return cplx(j.at(0).get<double>(), j.at(1).get<double>());
        return cplx(j.get<double>(), 0.0);
    };
    if (spec.contains("a")) {
        for (int j = 0; j < n; ++j) net.a(j) = complex_of(spec.at("a").at(static_cast<std::size_t>(j)));
    }
    if (spec.contains("b")) {
        for (int j = 0; j < n; ++j) net.b(j) = complex_of(spec.at("b").at(static_cast<std::size_t>(j)));
    }
    if (spec.value("real_mode", false)) net.set_real_mode(true);

    std::vector<cplx> psi, phi;
    for (const auto& v : cfg.extra.at("psi")) psi.push_back(complex_of(v));
    for (const auto& v : cfg.extra.at("phi")) phi.push_back(complex_of(v));

    PlasticityOptions opt;
    opt.steps = cfg.steps;
    opt.learning_rate = cfg.extra.value("learning_rate", 0.05);
    return run_spectral_scenario(cfg, "custom-spectral", std::move(net), psi, phi, opt,
                                 [](Verdicts& v, const PlasticityResult& r) {
                                     double first = r.trajectory.front().energy;
                                     double last = r.trajectory.back().energy;
                                     v.add("energy-descent",
                                           r.trajectory.back().step, last, first,
                                           last <= first + 1e-12);
                                 });
}

int scenario_custom_quadratic(const RunConfig& cfg) {
    if (!cfg.extra.contains("graph") || !cfg.extra.contains("field") ||
        !cfg.extra.contains("targets"))
        throw invalid_argument("custom-quadratic: config requires graph, field, and targets");
    MetricGraph g = graph_from_json(cfg.extra.at("graph"));
    MemoryField field = field_from_json(cfg.extra.at("field"), g);
    SignalMap targets;
    for (const auto& [id, j] : cfg.extra.at("targets").items())
        targets.emplace(id, measure_from_json(j, g));
    SignalRule rule = ConstantTarget{targets};
    EnergySpec energy(PurelyQuadratic{cfg.alpha, {}});
    auto traj = run_quadratic_trajectory(g, field, empty_context(), rule, energy, cfg.tau,
                                         cfg.steps);
    write_trajectory_csv(cfg, "custom-quadratic", g, traj, energy);
    Verdicts v;
    const MemoryField* prev = &traj.initial;
    for (std::size_t n = 0; n < traj.steps.size(); ++n) {
        double res = edi_residual(*prev, traj.steps[n].next, traj.signals[n], energy, cfg.tau, g);
        v.add("edi", static_cast<int>(n), res, -1e-9, res >= -1e-9);
        prev = &traj.steps[n].next;
    }
    v.write(out_path(cfg, "custom-quadratic_verdicts.json"));
    return v.all_pass ? 0 : 1;
}

using ScenarioFn = int (*)(const RunConfig&);

const std::vector<std::tuple<std::string, std::string, ScenarioFn>>& registry() {
    static const std::vector<std::tuple<std::string, std::string, ScenarioFn>> table = {
        {"ema-basic", "single-fiber EMA of a constant target on the unit 3-star",
         &scenario_ema_basic},
        {"star-transport", "transport plan and displacement interpolation between two leaf profiles",
         &scenario_star_transport},
        {"quadratic-contraction", "state-independent contraction ratio on random star instances",
         &scenario_quadratic_contraction},
        {"projector-ema", "stochastic geodesic projector vs the affine observable recurrence",
         &scenario_projector_ema},
        {"mirror-equivalence", "mirror descent realized as an observable quadratic scheme",
         &scenario_mirror_equivalence},
        {"consensus", "two cross-coupled observable fields contracting at rate -2 alpha",
         &scenario_consensus},
        {"spectral-pruning", "anti-aligned synapse driven to zero structural weight",
         &scenario_spectral_pruning},
        {"spectral-alignment", "synchronized synapses reach nonnegative alignment cosines",
         &scenario_spectral_alignment},
        {"spectral-selectivity", "dominant synapse saturates the simplex, pruning the rest",
         &scenario_spectral_selectivity},
        {"spectral-multiscale", "fast embedding phase and slow structural phase with assemblies",
         &scenario_spectral_multiscale},
        {"sleep-mode-limit", "freezing-error, Groenwall and perturbed EDI checks across tau",
         &scenario_sleep_mode},
        {"fixed-point-spectral", "fixed points and the spectral relation lambda = exp(-tau mu)",
         &scenario_fixed_point_spectral},
        {"custom-quadratic", "purely quadratic run from a user config (graph, field, targets)",
         &scenario_custom_quadratic},
        {"custom-spectral", "plasticity run from a user config (network spec, psi, phi)",
         &scenario_custom_spectral},
    };
    return table;
}

} // namespace

std::vector<ScenarioInfo> list_scenarios() {
    std::vector<ScenarioInfo> out;
    for (const auto& [name, desc, fn] : registry()) out.push_back({name, desc});
    return out;
}

int run_scenario(const RunConfig& config) {
    RunConfig cfg = config;
    if (cfg.horizon > 0.0 && cfg.tau > 0.0)
        cfg.steps = static_cast<int>(std::floor(cfg.horizon / cfg.tau + 1e-9));
    for (const auto& [name, desc, fn] : registry()) {
        if (name == cfg.scenario) return fn(cfg);
    }
    throw invalid_argument("unknown scenario '" + cfg.scenario + "'");
}

// --------------------------------------------------------------------- verify

namespace {

int verify_edi(const RunConfig& cfg) {
    Verdicts v;
    for (int k = 0; k < 1000; ++k) {
        Rng rng = Rng::derive(cfg.seed, "verify-edi", static_cast<std::uint64_t>(k));
        int leaves = 2 + static_cast<int>(rng.next_below(3));
        std::vector<double> lengths;
        for (int i = 0; i < leaves; ++i) lengths.push_back(0.5 + rng.next_double());
        MetricGraph g = star_tree(lengths);
        DiscreteMeasure rho = random_leaf_measure(rng, leaves);
        DiscreteMeasure h = random_leaf_measure(rng, leaves);
        double alpha = 0.25 + 2.0 * rng.next_double();
        double tau = std::pow(2.0, -static_cast<double>(rng.next_below(5)));
        MemoryField field({{"x0", 1.0, rho}});
        SignalRule rule = ConstantTarget{{{"x0", h}}};
        EnergySpec energy(PurelyQuadratic{alpha, {}});
        SchemeState state = make_scheme_state(0, tau, field, Context(0, {}), rule, energy);
        StepResult result = jko_step_quadratic(state, g);
        double res = edi_residual(field, result.next, state.frozen_signal, energy, tau, g);
        v.add("edi-random", k, res, -1e-9, res >= -1e-9);
    }
    v.write((std::filesystem::path(cfg.out) / "verify_edi.json").string());
    return v.all_pass ? 0 : 1;
}

int verify_freezing(const RunConfig& cfg) {
    SleepScenario s;
    s.seed = cfg.seed;
    auto constants = sleep_scenario_constants(s);
    auto report = run_sleep_scenario(s, 1.0 / 16.0, 1.0);
    Verdicts v;
    for (const auto& row :
         freezing_error_check(report, s.alpha, constants.lipschitz_total, 1.0 / 16.0))
        v.add(row);
    auto constant = run_constant_target_scenario(s, 1.0 / 16.0, 1.0);
    for (const auto& row : freezing_error_check(constant, s.alpha, 0.0, 1.0 / 16.0))
        v.add("freezing-constant-signal", row.step, row.lhs, row.rhs, row.pass);
    v.write((std::filesystem::path(cfg.out) / "verify_freezing.json").string());
    return v.all_pass ? 0 : 1;
}

int verify_groenwall(const RunConfig& cfg) {
    SleepScenario s;
    s.seed = cfg.seed;
    auto constants = sleep_scenario_constants(s);
    Verdicts v;
    for (double tau : {1.0 / 8.0, 1.0 / 16.0}) {
        auto report = run_sleep_scenario(s, tau, 1.0);
        auto res = groenwall_check(report, s.alpha, constants.lipschitz_total, tau);
        for (const auto& row : res.rows) v.add(row);
    }
    auto constant = run_constant_target_scenario(s, 1.0 / 8.0, 1.0);
    auto res0 = groenwall_check(constant, s.alpha, 0.0, 1.0 / 8.0);
    for (const auto& row : res0.rows) v.add(row);
    v.write((std::filesystem::path(cfg.out) / "verify_groenwall.json").string());
    return v.all_pass ? 0 : 1;
}

int verify_stability(const RunConfig& cfg) {
    SleepScenario s;
    s.seed = cfg.seed;
    Verdicts v;
    std::vector<double> taus{1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0};
    std::vector<StabilityResult> results;
    for (double tau : taus) {
        auto report = run_sleep_scenario(s, tau, 1.0);
        results.push_back(stability_report(report, 1.0));
    }
    double e_lo = 1e300, e_hi = 0.0, a_lo = 1e300, a_hi = 0.0, m_lo = 1e300, m_hi = 0.0;
    for (const auto& r : results) {
        e_lo = std::min(e_lo, r.sup_energy);
        e_hi = std::max(e_hi, r.sup_energy);
        a_lo = std::min(a_lo, r.action_sum);
        a_hi = std::max(a_hi, r.action_sum);
        m_lo = std::min(m_lo, r.sup_moment);
        m_hi = std::max(m_hi, r.sup_moment);
    }
    v.add("stability-energy-uniform", 0, e_hi - e_lo, 0.10 * e_hi, (e_hi - e_lo) <= 0.10 * e_hi);
    v.add("stability-action-uniform", 0, a_hi - a_lo, 0.10 * a_hi, (a_hi - a_lo) <= 0.10 * a_hi);
    v.add("stability-moment-uniform", 0, m_hi - m_lo, 0.10 * m_hi, (m_hi - m_lo) <= 0.10 * m_hi);
    v.write((std::filesystem::path(cfg.out) / "verify_stability.json").string());
    return v.all_pass ? 0 : 1;
}

int verify_tau_refine(const RunConfig& cfg) {
    SleepScenario s;
    s.seed = cfg.seed;
    std::vector<double> taus{1.0 / 4.0, 1.0 / 8.0, 1.0 / 16.0, 1.0 / 32.0};
    std::vector<double> probes{0.25, 0.5, 0.75, 1.0};
    auto result = tau_refinement(s, taus, 1.0, probes);
    Verdicts v;
    for (std::size_t i = 0; i < result.cauchy_factors.size(); ++i) {
        double f = result.cauchy_factors[i];
        v.add("tau-cauchy-factor", static_cast<int>(i), f, 4.0, f >= 1.2 && f <= 4.0);
    }
    v.add("holder-modulus", 0, result.max_holder_violation, 1e-9,
          result.max_holder_violation <= 1e-9);
    v.write((std::filesystem::path(cfg.out) / "verify_tau_refine.json").string());
    return v.all_pass ? 0 : 1;
}

int verify_spectral(const RunConfig& cfg) {
    RunConfig sub = cfg;
    sub.tau = 0.5;
    return scenario_fixed_point_spectral(sub);
}

} // namespace

int run_verify(const std::string& check, const RunConfig& config) {
    std::filesystem::create_directories(config.out);
    if (check == "edi") return verify_edi(config);
    if (check == "freezing") return verify_freezing(config);
    if (check == "groenwall") return verify_groenwall(config);
    if (check == "stability") return verify_stability(config);
    if (check == "tau-refine") return verify_tau_refine(config);
    if (check == "spectral") return verify_spectral(config);
    if (check == "all") {
        int status = 0;
        for (const char* c : {"edi", "freezing", "groenwall", "stability", "tau-refine",
                              "spectral"})
            status |= run_verify(c, config);
        return status;
    }
    throw invalid_argument("unknown verify check '" + check + "'");
}

// --------------------------------------------------------------------- config

void apply_config_json(RunConfig& config, const nlohmann::json& j) {
    if (j.contains("scenario")) config.scenario = j.at("scenario").get<std::string>();
    if (j.contains("tau")) config.tau = j.at("tau").get<double>();
    if (j.contains("tau_list")) config.tau_list = j.at("tau_list").get<std::vector<double>>();
    if (j.contains("steps")) config.steps = j.at("steps").get<int>();
    if (j.contains("horizon")) config.horizon = j.at("horizon").get<double>();
    if (j.contains("seed")) config.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("out")) config.out = j.at("out").get<std::string>();
    if (j.contains("format")) config.format = j.at("format").get<std::string>();
    if (j.contains("alpha")) config.alpha = j.at("alpha").get<double>();
    if (j.contains("eta")) config.eta = j.at("eta").get<double>();
    if (j.contains("t_tau")) config.t_tau = j.at("t_tau").get<double>();
    if (j.contains("loss")) config.loss = j.at("loss").get<std::string>();
    config.extra = j;
    if (!(config.tau > 0.0)) throw invalid_argument("config: tau must be > 0");
    if (config.steps < 0) throw invalid_argument("config: steps must be >= 0");
    if (config.format != "csv" && config.format != "json")
        throw invalid_argument("config: format must be csv or json");
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'", 0, 0);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // byte offset -> line / column
        int line = 1, col = 1;
        for (std::size_t k = 0; k + 1 < e.byte && k < text.size(); ++k) {
            if (text[k] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw config_error("config parse error at line " + std::to_string(line) + ", column " +
                               std::to_string(col) + ": " + e.what(),
                           line, col);
    }
    RunConfig config;
    apply_config_json(config, j);
    return config;
}

} // namespace hwg
