#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <vector>

#include "hwg/errors.hpp"
#include "hwg/rng.hpp"

namespace hwg {

using cplx = std::complex<double>;

// Discrete synaptic embedding distribution: atoms (value, probability).
using EmbeddingAtoms = std::vector<std::pair<cplx, double>>;

// Generalized network: structural weights p on the simplex per output column,
// complex embedding first moments (r_hat, theta_hat) per synapse, affine
// activation parameters (a, b) per output, optional full embedding
// distributions and an optional non-affine activation profile.
//
// Real mode is the complex mode restricted to phases {0, pi}: one code path,
// one flag (phases then stay frozen under plasticity).
class SpectralNetwork {
public:
    SpectralNetwork(int inputs, int outputs);

    int inputs() const { return m_; }
    int outputs() const { return n_; }

    double& p(int i, int j) { return p_[index(i, j)]; }
    double p(int i, int j) const { return p_[index(i, j)]; }
    double& r_hat(int i, int j) { return r_[index(i, j)]; }
    double r_hat(int i, int j) const { return r_[index(i, j)]; }
    double& theta_hat(int i, int j) { return theta_[index(i, j)]; }
    double theta_hat(int i, int j) const { return theta_[index(i, j)]; }

    cplx& a(int j) { return a_[static_cast<std::size_t>(j)]; }
    cplx a(int j) const { return a_[static_cast<std::size_t>(j)]; }
    cplx& b(int j) { return b_[static_cast<std::size_t>(j)]; }
    cplx b(int j) const { return b_[static_cast<std::size_t>(j)]; }

    bool real_mode() const { return real_mode_; }
    void set_real_mode(bool on) { real_mode_ = on; }

    void set_embedding(int i, int j, EmbeddingAtoms atoms);
    bool has_embeddings() const;
    const EmbeddingAtoms& embedding(int i, int j) const;

    // Non-affine activation for the forward path; affine params are used when
    // absent. Gradient/energy closed forms always use the affine parameters.
    void set_activation(int j, std::function<cplx(cplx)> f);
    cplx activate(int j, cplx z) const;
    bool activation_affine(int j) const;

    // Validates simplex columns, nonnegative amplitudes, embedding moments
    // matching (r_hat, theta_hat) within 1e-12, and real-mode phases.
    void validate() const;

private:
    std::size_t index(int i, int j) const {
        return static_cast<std::size_t>(j) * static_cast<std::size_t>(m_) +
               static_cast<std::size_t>(i);
    }

    int m_ = 0;
    int n_ = 0;
    bool real_mode_ = false;
    std::vector<double> p_, r_, theta_;
    std::vector<cplx> a_, b_;
    std::vector<EmbeddingAtoms> embeddings_;
    std::vector<std::function<cplx(cplx)>> activations_;
};

struct ActivationState {
    std::vector<cplx> psi; // input activations, length M
    std::vector<cplx> phi; // feedback output activations, length N
};

// w_ij = p_ij * r_hat_ij * exp(i theta_hat_ij), column-major M x N.
std::vector<cplx> observable_weights(const SpectralNetwork& net);

struct ForwardResult {
    std::vector<cplx> pre_activations; // ps_j = sum_i psi_i w_ij
    std::vector<cplx> prediction;      // F_j(ps_j)
};

ForwardResult forward_expected(const SpectralNetwork& net, const std::vector<cplx>& psi);

// Samples Z_ij per synapse from the stored embedding distributions.
ForwardResult forward_sample(const SpectralNetwork& net, const std::vector<cplx>& psi, Rng& rng);

// (1/2) sum_j |F_j(ps_j) - phi_j|^2.
double alignment_energy(const SpectralNetwork& net, const std::vector<cplx>& psi,
                        const std::vector<cplx>& phi);

// Two conventions for the constant term: the full residual |phi_j - b_j|^2,
// or half of it (which is what expanding (1/2)||F(psi w) - phi||^2 yields).
// They differ by a state-independent offset only; gradients are unaffected.
enum class ConstantConvention { Full, Half };

double local_energy_affine(const SpectralNetwork& net, const std::vector<cplx>& psi,
                           const std::vector<cplx>& phi, int j,
                           ConstantConvention convention = ConstantConvention::Full);

// Closed-form partials of the affine alignment energy.
double grad_amplitude(const SpectralNetwork& net, const std::vector<cplx>& psi,
                      const std::vector<cplx>& phi, int i, int j);
double grad_structural(const SpectralNetwork& net, const std::vector<cplx>& psi,
                       const std::vector<cplx>& phi, int i, int j);
double grad_phase(const SpectralNetwork& net, const std::vector<cplx>& psi,
                  const std::vector<cplx>& phi, int i, int j);

// Equilibrium formulas (may leave [0,1] or drop below 0: that signals pruning
// or selectivity rather than an attainable stationary value).
double equilibrium_amplitude(const SpectralNetwork& net, const std::vector<cplx>& psi,
                             const std::vector<cplx>& phi, int i, int j);
double equilibrium_structural(const SpectralNetwork& net, const std::vector<cplx>& psi,
                              const std::vector<cplx>& phi, int i, int j);

// LHS - RHS of the Hebbian equilibrium equation; vanishes at interior
// stationary points of the amplitude.
double hebbian_equilibrium_residual(const SpectralNetwork& net, const std::vector<cplx>& psi,
                                    const std::vector<cplx>& phi, int i, int j);

struct PressureReport {
    std::vector<double> pressures; // dE/dp_ij for all i
    std::vector<int> active;       // indices with p_ij > 0
    double lambda = 0.0;           // -mean(active pressures)
    double equalization_residual = 0.0; // max - min over active pressures
    double min_inactive_slack = 0.0;    // min over inactive of pressure + lambda
    bool kkt_ok = true;                 // slackness >= -1e-6 on inactive indices
};

PressureReport pressure_report(const SpectralNetwork& net, const std::vector<cplx>& psi,
                               const std::vector<cplx>& phi, int j);

struct PlasticityOptions {
    int steps = 200;
    double learning_rate = 0.05;
    int max_halvings = 30;
    bool freeze_structural = false; // p
    bool freeze_amplitude = false;  // r_hat
    bool freeze_phase = false;      // theta_hat (implied by real mode)
};

struct PlasticityDiagnostics {
    int step = 0;
    double energy = 0.0;
    double learning_rate = 0.0;
    std::vector<std::vector<int>> active_sets;   // per output
    std::vector<double> pressure_spread;         // per output, max-min on active
    std::vector<double> min_pair_cos;            // per output, min pairwise phase cosine (active)
    std::vector<double> max_pair_cos;            // per output
    std::vector<double> min_alignment_cos;       // per output, min alignment cosine (active)
};

struct PlasticityResult {
    SpectralNetwork net;
    std::vector<PlasticityDiagnostics> trajectory;
    bool stalled = false; // no descent after max halvings (report, not an exception)
    int stall_step = -1;
};

// Projected gradient descent: p columns via Euclidean simplex projection,
// r_hat clamped at 0, theta_hat unconstrained mod 2 pi. Energy is
// non-increasing along accepted steps (backtracking halves the rate).
PlasticityResult run_plasticity(const SpectralNetwork& net, const std::vector<cplx>& psi,
                                const std::vector<cplx>& phi, const PlasticityOptions& options);

struct MultiscaleOptions {
    std::vector<std::vector<int>> assemblies; // partition of input indices
    int rounds = 3;
    int fast_steps = 100; // evolve (r_hat, theta_hat) at fixed p
    int slow_steps = 100; // evolve p under assembly-averaged psi
    double learning_rate = 0.05;
};

// Fast phase: structural weights frozen, embeddings evolve under the raw
// activations. Slow phase: embeddings frozen, psi averaged across each
// assembly, structural weights evolve.
PlasticityResult run_multiscale(const SpectralNetwork& net, const std::vector<cplx>& psi,
                                const std::vector<cplx>& phi, const MultiscaleOptions& options);

// Euclidean projection onto the probability simplex (sort and threshold).
std::vector<double> project_to_simplex(std::vector<double> v);

} // namespace hwg
