#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hwg/projector.hpp"

namespace hwg {

// Concrete sleep-mode scenario family on a unit star tree. The Lipschitz
// constants hold by construction rather than estimation:
//  - context rule  phi_x[i] = context_scale * W2(rho_x, delta_leaf_i), so the
//    triangle inequality gives d_C <= context_scale * M * W (L_C exact);
//  - signal  S_x = Dirac on fiber x's edge at offset clip(kappa * mean Re phi_x),
//    so W2(S_x, S'_x) <= (kappa / M) ||phi_x - phi'_x||_TV (L_S follows with
//    the fiber-weight factor).
struct SleepScenario {
    int leaves = 3;
    int fiber_count = 2;
    double alpha = 1.0;
    double kappa = 0.5;         // signal sensitivity to the context
    double context_scale = 0.2; // scale of the context rule
    std::uint64_t seed = 1;
};

struct ScenarioConstants {
    double lipschitz_signal = 0.0;  // L_S
    double lipschitz_map = 1.0;     // L_H (identity map)
    double lipschitz_context = 0.0; // L_C
    double lipschitz_total = 0.0;   // L = L_S (1+L_H) sqrt(1+L_C^2) mu(X)^{1/2}
};

ScenarioConstants sleep_scenario_constants(const SleepScenario& s);

struct TrajectoryReport {
    double tau = 0.0;
    double alpha = 0.0;
    double lipschitz_total = 0.0;
    std::vector<double> energy;      // E(rho^n, phi^n), size steps+1
    std::vector<double> frozen_next; // frozen energy at rho^{n+1}, size steps
    std::vector<double> w_step;      // field metric per step, size steps
    std::vector<double> moment;      // second moment of rho^n, size steps+1
    std::vector<MemoryField> fields; // size steps+1
    int steps() const { return static_cast<int>(w_step.size()); }
};

TrajectoryReport run_sleep_scenario(const SleepScenario& s, double tau, double horizon);

// Same family with a constant signal (kappa irrelevant): L = 0, pure descent.
TrajectoryReport run_constant_target_scenario(const SleepScenario& s, double tau, double horizon);

struct CheckRow {
    std::string check;
    int step = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    bool pass = true;
};

// |E(rho^{n+1}, phi^{n+1}) - E_frozen(rho^{n+1})| vs W^2/(4 tau) + alpha L^2
// tau (E^{n+1} + E^n), slack 1e-9 per step.
std::vector<CheckRow> freezing_error_check(const TrajectoryReport& report, double alpha, double L,
                                           double tau);

struct GroenwallResult {
    bool pass = true;
    double max_ratio = 0.0; // max measured E^{n+1}/E^n
    std::vector<CheckRow> rows;
};

// Per-step bound E^{n+1} <= (1 + 4 alpha L^2 tau) E^n and the cumulative
// exponential bound E^n <= E^0 exp(2 alpha L^2 n tau). Requires the smallness
// condition alpha L^2 tau <= 1/2.
GroenwallResult groenwall_check(const TrajectoryReport& report, double alpha, double L, double tau);

struct StabilityResult {
    double sup_energy = 0.0;
    double action_sum = 0.0; // sum of W^2 / tau
    double sup_moment = 0.0;
};

StabilityResult stability_report(const TrajectoryReport& report, double horizon);

struct PerturbedEdiResult {
    double max_residual = 0.0; // max over n of LHS - RHS
    bool pass = true;
    std::vector<CheckRow> rows;
};

// Discrete surrogate of E(t) + 1/4 int |rho dot|^2 <= E(0) + 2 alpha L^2 int E
// with rectangle-rule integrals.
PerturbedEdiResult perturbed_edi_check(const TrajectoryReport& report, double alpha, double L,
                                       double tau);

struct TauRefinementResult {
    std::vector<double> taus;
    std::vector<double> gaps;           // max-over-probes field_w between consecutive taus
    std::vector<double> cauchy_factors; // gaps[i] / gaps[i+1]
    double holder_constant = 0.0;       // measured C_T (max action bound)
    double max_holder_violation = 0.0;  // max of W(t,s) - sqrt(2 C_T |t-s|)
    std::vector<StabilityResult> stability; // per tau
};

TauRefinementResult tau_refinement(const SleepScenario& s, const std::vector<double>& taus,
                                   double horizon, const std::vector<double>& probe_times);

// ---------------------------------------------------------------------------
// Appendix A: fixed points and the spectral relation lambda = exp(-tau mu)

// Smooth energy on atom positions identified with Euclidean coordinates
// (fixed-cardinality equal-mass Dirac systems).
struct ParametricEnergy {
    int dim = 0;
    std::function<double(const std::vector<double>&)> value;
    std::function<std::vector<double>(const std::vector<double>&)> gradient;
};

ParametricEnergy make_quadratic_energy(std::vector<double> stiffness, std::vector<double> center);
ParametricEnergy make_coupled_quadratic_energy(std::vector<double> matrix,
                                               std::vector<double> center);
ParametricEnergy make_quartic_energy(std::vector<double> stiffness, std::vector<double> center,
                                     double quartic);

struct SpectralCheckResult {
    std::vector<double> fixed_point;
    double grad_norm = 0.0;
    std::vector<double> hessian_eigenvalues; // mu, ascending
    std::vector<double> flow_eigenvalues;    // lambda, descending
    double max_relation_gap = 0.0;           // max |lambda_i - exp(-tau mu_i)|
    bool saddle = false;                     // some mu_i < 0 (reported, still checked)
    double max_tau_invariance_gap = 0.0;     // located fixed point under jko steps
};

// Locates a critical point by descent (grad norm <= 1e-10), takes the Hessian
// by central differences of the gradient, integrates the gradient flow to
// time tau (fine RK4), differentiates the flow map, and compares eigenvalues.
SpectralCheckResult spectral_stability_check(const ParametricEnergy& energy,
                                             const std::vector<double>& start, double tau,
                                             const std::vector<double>& tau_invariance_list = {});

// Symmetric eigenvalues via cyclic Jacobi (ascending order).
std::vector<double> symmetric_eigenvalues(std::vector<double> matrix, int dim);

} // namespace hwg
