#pragma once

#include <functional>
#include <vector>

#include "hwg/errors.hpp"

namespace hwg {

// Column-major M x N weight matrix; each column lives on the simplex.
struct WeightMatrix {
    int m = 0;
    int n = 0;
    std::vector<double> data;

    WeightMatrix() = default;
    WeightMatrix(int m_, int n_, double fill = 0.0)
        : m(m_), n(n_), data(static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_), fill) {}

    double& at(int i, int j) { return data[static_cast<std::size_t>(j) * m + i]; }
    double at(int i, int j) const { return data[static_cast<std::size_t>(j) * m + i]; }
};

using LossGradient = std::function<WeightMatrix(const WeightMatrix&)>;

struct MirrorProblem {
    int m = 0;        // inputs
    int n = 0;        // outputs
    LossGradient loss_gradient;
    double eta = 0.1;
    double c_max = 1.0; // declared bound |dLoss/dw| < c_max, checked at runtime
    WeightMatrix w0;
};

// Multiplicative (exponentiated-gradient) update with per-column
// normalization: w~ = w * exp(-eta * grad), then columns renormalized.
WeightMatrix md_step(const WeightMatrix& w, const WeightMatrix& grad, double eta);

// h^n = (w^{n+1} - (1-t) w^n) / t. Columns sum to 1 by construction; negative
// entries mean t is below the admissibility threshold and raise
// admissibility_error carrying the offending entry and the minimal admissible t.
WeightMatrix signal_from_md(const WeightMatrix& w_curr, const WeightMatrix& w_next, double t_tau);

// 1 - exp(-2 eta c_max): signals stay in the simplex for any t above this.
double min_admissible_t(double eta, double c_max);

struct EquivalenceResult {
    double max_deviation = 0.0;         // max |w_md - rho_hwg| over all steps/entries
    std::vector<WeightMatrix> w_path;   // mirror descent iterates, size steps+1
    std::vector<WeightMatrix> rho_path; // observable recurrence iterates
    std::vector<WeightMatrix> signals;  // reconstructed h^n
    double min_signal_entry = 0.0;
    double max_column_sum_error = 0.0;
};

// Runs mirror descent, reconstructs the signals, feeds them into the
// observable recurrence rho^{n+1} = (1-t) rho^n + t h^n with rho^0 = w^0, and
// reports the max deviation (an exact algebraic identity: machine zero).
EquivalenceResult verify_equivalence(const MirrorProblem& problem, int steps, double t_tau);

} // namespace hwg
