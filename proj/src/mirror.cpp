#include "hwg/mirror.hpp"

#include <cmath>
#include <string>

namespace hwg {

namespace {

void check_column_simplex(const WeightMatrix& w, const char* what) {
    for (int j = 0; j < w.n; ++j) {
        double sum = 0.0;
        for (int i = 0; i < w.m; ++i) {
            if (w.at(i, j) < 0.0) throw invalid_argument(std::string(what) + ": negative weight");
            sum += w.at(i, j);
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw invalid_argument(std::string(what) + ": column does not sum to 1");
    }
}

} // namespace

WeightMatrix md_step(const WeightMatrix& w, const WeightMatrix& grad, double eta) {
    if (grad.m != w.m || grad.n != w.n) throw invalid_argument("md_step: gradient shape mismatch");
    check_column_simplex(w, "md_step");
    WeightMatrix out(w.m, w.n);
    for (int j = 0; j < w.n; ++j) {
        double sum = 0.0;
        for (int i = 0; i < w.m; ++i) {
            double v = w.at(i, j) * std::exp(-eta * grad.at(i, j));
            out.at(i, j) = v;
            sum += v;
        }
        if (!(sum > 0.0)) throw std::logic_error("md_step: column vanished after update");
        for (int i = 0; i < w.m; ++i) out.at(i, j) /= sum;
    }
    return out;
}

WeightMatrix signal_from_md(const WeightMatrix& w_curr, const WeightMatrix& w_next, double t_tau) {
    if (!(t_tau > 0.0) || t_tau > 1.0)
        throw invalid_argument("signal_from_md: t_tau must lie in (0, 1]");
    if (w_next.m != w_curr.m || w_next.n != w_curr.n)
        throw invalid_argument("signal_from_md: shape mismatch");
    WeightMatrix h(w_curr.m, w_curr.n);
    for (int j = 0; j < w_curr.n; ++j) {
        for (int i = 0; i < w_curr.m; ++i) {
            double v = (w_next.at(i, j) - (1.0 - t_tau) * w_curr.at(i, j)) / t_tau;
            if (v < 0.0) {
                // minimal admissible t for this pair of iterates
                double min_t = 0.0;
                for (int jj = 0; jj < w_curr.n; ++jj) {
                    for (int ii = 0; ii < w_curr.m; ++ii) {
                        if (w_curr.at(ii, jj) > 0.0)
                            min_t = std::max(min_t, 1.0 - w_next.at(ii, jj) / w_curr.at(ii, jj));
                    }
                }
                throw admissibility_error(
                    "signal_from_md: negative signal entry at (" + std::to_string(i) + ", " +
                        std::to_string(j) + "); minimal admissible t_tau is " + std::to_string(min_t),
                    i, j, min_t);
            }
            h.at(i, j) = v;
        }
    }
    return h;
}

double min_admissible_t(double eta, double c_max) {
    if (eta < 0.0 || c_max < 0.0) throw invalid_argument("min_admissible_t: negative input");
    return 1.0 - std::exp(-2.0 * eta * c_max);
}

EquivalenceResult verify_equivalence(const MirrorProblem& problem, int steps, double t_tau) {
    if (steps < 0) throw invalid_argument("verify_equivalence: negative step count");
    if (!(t_tau > min_admissible_t(problem.eta, problem.c_max)) || t_tau > 1.0)
        throw invalid_argument(
            "verify_equivalence: t_tau must exceed 1 - exp(-2 eta C_max) and stay <= 1");
    check_column_simplex(problem.w0, "verify_equivalence");

    EquivalenceResult out;
    WeightMatrix w = problem.w0;
    WeightMatrix rho = problem.w0;
    out.w_path.push_back(w);
    out.rho_path.push_back(rho);
    out.min_signal_entry = 1.0;

    for (int step = 0; step < steps; ++step) {
        WeightMatrix grad = problem.loss_gradient(w);
        for (double gv : grad.data) {
            if (!(std::abs(gv) < problem.c_max))
                throw invalid_argument(
                    "verify_equivalence: loss gradient violates the declared C_max bound");
        }
        WeightMatrix w_next = md_step(w, grad, problem.eta);
        WeightMatrix h = signal_from_md(w, w_next, t_tau);

        WeightMatrix rho_next(rho.m, rho.n);
        for (std::size_t c = 0; c < rho.data.size(); ++c)
            rho_next.data[c] = (1.0 - t_tau) * rho.data[c] + t_tau * h.data[c];

        for (int j = 0; j < h.n; ++j) {
            double col = 0.0;
            for (int i = 0; i < h.m; ++i) {
                col += h.at(i, j);
                out.min_signal_entry = std::min(out.min_signal_entry, h.at(i, j));
            }
            out.max_column_sum_error = std::max(out.max_column_sum_error, std::abs(col - 1.0));
        }

        w = std::move(w_next);
        rho = std::move(rho_next);
        out.signals.push_back(std::move(h));
        out.w_path.push_back(w);
        out.rho_path.push_back(rho);
        for (std::size_t c = 0; c < w.data.size(); ++c)
            out.max_deviation = std::max(out.max_deviation, std::abs(w.data[c] - rho.data[c]));
    }
    return out;
}

} // namespace hwg
