#include "hwg/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace hwg {

namespace {
constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double theta) {
    double t = std::fmod(theta, kTwoPi);
    if (t < 0.0) t += kTwoPi;
    return t;
}
} // namespace

SpectralNetwork::SpectralNetwork(int inputs, int outputs) : m_(inputs), n_(outputs) {
    if (inputs <= 0 || outputs <= 0)
        throw invalid_argument("SpectralNetwork: needs at least one input and one output");
    std::size_t mn = static_cast<std::size_t>(m_) * static_cast<std::size_t>(n_);
    p_.assign(mn, 1.0 / m_);
    r_.assign(mn, 1.0);
    theta_.assign(mn, 0.0);
    a_.assign(static_cast<std::size_t>(n_), cplx(1.0, 0.0));
    b_.assign(static_cast<std::size_t>(n_), cplx(0.0, 0.0));
    embeddings_.assign(mn, {});
    activations_.assign(static_cast<std::size_t>(n_), nullptr);
}

void SpectralNetwork::set_embedding(int i, int j, EmbeddingAtoms atoms) {
    embeddings_[index(i, j)] = std::move(atoms);
}

bool SpectralNetwork::has_embeddings() const {
    for (const auto& e : embeddings_) {
        if (e.empty()) return false;
    }
    return true;
}

const EmbeddingAtoms& SpectralNetwork::embedding(int i, int j) const {
    return embeddings_[index(i, j)];
}

void SpectralNetwork::set_activation(int j, std::function<cplx(cplx)> f) {
    activations_[static_cast<std::size_t>(j)] = std::move(f);
}

cplx SpectralNetwork::activate(int j, cplx z) const {
    const auto& f = activations_[static_cast<std::size_t>(j)];
    if (f) return f(z);
    return a(j) * z + b(j);
}

bool SpectralNetwork::activation_affine(int j) const {
    return !activations_[static_cast<std::size_t>(j)];
}

void SpectralNetwork::validate() const {
    for (int j = 0; j < n_; ++j) {
        double sum = 0.0;
        for (int i = 0; i < m_; ++i) {
            if (p(i, j) < 0.0) throw invalid_argument("SpectralNetwork: negative structural weight");
            if (r_hat(i, j) < 0.0) throw invalid_argument("SpectralNetwork: negative amplitude");
            sum += p(i, j);
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw invalid_argument("SpectralNetwork: structural column does not sum to 1");
    }
    for (int j = 0; j < n_; ++j) {
        for (int i = 0; i < m_; ++i) {
            const auto& emb = embeddings_[index(i, j)];
            if (emb.empty()) continue;
            double ptot = 0.0;
            cplx moment(0.0, 0.0);
            for (const auto& [z, q] : emb) {
                if (q < 0.0) throw invalid_argument("SpectralNetwork: negative embedding mass");
                ptot += q;
                moment += q * z;
            }
            if (std::abs(ptot - 1.0) > 1e-12)
                throw invalid_argument("SpectralNetwork: embedding masses do not sum to 1");
            cplx declared = std::polar(r_hat(i, j), theta_hat(i, j));
            if (std::abs(moment - declared) > 1e-12)
                throw invalid_argument(
                    "SpectralNetwork: embedding first moment disagrees with (r_hat, theta_hat)");
        }
    }
    if (real_mode_) {
        for (double t : theta_) {
            double w = wrap_angle(t);
            if (std::min(std::abs(w), std::abs(w - kTwoPi)) > 1e-12 &&
                std::abs(w - std::numbers::pi) > 1e-12)
                throw invalid_argument("SpectralNetwork: real mode requires phases in {0, pi}");
        }
    }
}

std::vector<cplx> observable_weights(const SpectralNetwork& net) {
    std::vector<cplx> w(static_cast<std::size_t>(net.inputs()) *
                        static_cast<std::size_t>(net.outputs()));
    for (int j = 0; j < net.outputs(); ++j) {
        for (int i = 0; i < net.inputs(); ++i) {
            w[static_cast<std::size_t>(j) * net.inputs() + i] =
                net.p(i, j) * std::polar(net.r_hat(i, j), net.theta_hat(i, j));
        }
    }
    return w;
}

ForwardResult forward_expected(const SpectralNetwork& net, const std::vector<cplx>& psi) {
    if (static_cast<int>(psi.size()) != net.inputs())
        throw invalid_argument("forward_expected: psi length must equal the input count");
    ForwardResult out;
    out.pre_activations.resize(static_cast<std::size_t>(net.outputs()));
    out.prediction.resize(static_cast<std::size_t>(net.outputs()));
    auto w = observable_weights(net);
    for (int j = 0; j < net.outputs(); ++j) {
        cplx ps(0.0, 0.0);
        for (int i = 0; i < net.inputs(); ++i)
            ps += psi[static_cast<std::size_t>(i)] * w[static_cast<std::size_t>(j) * net.inputs() + i];
        out.pre_activations[static_cast<std::size_t>(j)] = ps;
        out.prediction[static_cast<std::size_t>(j)] = net.activate(j, ps);
    }
    return out;
}

ForwardResult forward_sample(const SpectralNetwork& net, const std::vector<cplx>& psi, Rng& rng) {
    if (static_cast<int>(psi.size()) != net.inputs())
        throw invalid_argument("forward_sample: psi length must equal the input count");
    if (!net.has_embeddings())
        throw invalid_argument("forward_sample: full embedding distributions are required");
    ForwardResult out;
    out.pre_activations.resize(static_cast<std::size_t>(net.outputs()));
    out.prediction.resize(static_cast<std::size_t>(net.outputs()));
    for (int j = 0; j < net.outputs(); ++j) {
        cplx ps(0.0, 0.0);
        for (int i = 0; i < net.inputs(); ++i) {
            const auto& emb = net.embedding(i, j);
            double u = rng.next_double();
            cplx z = emb.back().first;
            double acc = 0.0;
            for (const auto& [val, q] : emb) {
                acc += q;
                if (u < acc) {
                    z = val;
                    break;
                }
            }
            ps += psi[static_cast<std::size_t>(i)] * net.p(i, j) * z;
        }
        out.pre_activations[static_cast<std::size_t>(j)] = ps;
        out.prediction[static_cast<std::size_t>(j)] = net.activate(j, ps);
    }
    return out;
}

double alignment_energy(const SpectralNetwork& net, const std::vector<cplx>& psi,
                        const std::vector<cplx>& phi) {
    if (static_cast<int>(phi.size()) != net.outputs())
        throw invalid_argument("alignment_energy: phi length must equal the output count");
    auto fwd = forward_expected(net, psi);
    double e = 0.0;
    for (int j = 0; j < net.outputs(); ++j) {
        double d = std::abs(fwd.prediction[static_cast<std::size_t>(j)] -
                            phi[static_cast<std::size_t>(j)]);
        e += 0.5 * d * d;
    }
    return e;
}

namespace {

struct FiberView {
    double a_mod = 0.0;      // |a_j|
    double gap = 0.0;        // |phi_j - b_j|
    double align_phase = 0.0; // arg(a_j) - arg(phi_j - b_j)
    std::vector<double> amp;   // |psi_i|
    std::vector<double> delta; // theta_hat_ij + arg(psi_i)
    std::vector<double> c;     // amp_i * p_ij * r_hat_ij
};

FiberView make_view(const SpectralNetwork& net, const std::vector<cplx>& psi,
                    const std::vector<cplx>& phi, int j) {
    if (static_cast<int>(psi.size()) != net.inputs() ||
        static_cast<int>(phi.size()) != net.outputs())
        throw invalid_argument("spectral: activation state dimensions mismatch");
    if (j < 0 || j >= net.outputs()) throw invalid_argument("spectral: output index out of range");
    FiberView v;
    cplx aj = net.a(j);
    cplx residual = phi[static_cast<std::size_t>(j)] - net.b(j);
    v.a_mod = std::abs(aj);
    v.gap = std::abs(residual);
    v.align_phase = (v.a_mod > 0.0 ? std::arg(aj) : 0.0) - (v.gap > 0.0 ? std::arg(residual) : 0.0);
    int m = net.inputs();
    v.amp.resize(static_cast<std::size_t>(m));
    v.delta.resize(static_cast<std::size_t>(m));
    v.c.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        v.amp[static_cast<std::size_t>(i)] = std::abs(psi[static_cast<std::size_t>(i)]);
        v.delta[static_cast<std::size_t>(i)] =
            net.theta_hat(i, j) + std::arg(psi[static_cast<std::size_t>(i)]);
        v.c[static_cast<std::size_t>(i)] =
            v.amp[static_cast<std::size_t>(i)] * net.p(i, j) * net.r_hat(i, j);
    }
    return v;
}

double cross_sum(const FiberView& v, int i) {
    double s = 0.0;
    for (int k = 0; k < static_cast<int>(v.c.size()); ++k) {
        if (k == i) continue;
        s += v.c[static_cast<std::size_t>(k)] *
             std::cos(v.delta[static_cast<std::size_t>(i)] - v.delta[static_cast<std::size_t>(k)]);
    }
    return s;
}

double alignment_cos(const FiberView& v, int i) {
    return std::cos(v.delta[static_cast<std::size_t>(i)] + v.align_phase);
}

} // namespace

double local_energy_affine(const SpectralNetwork& net, const std::vector<cplx>& psi,
                           const std::vector<cplx>& phi, int j, ConstantConvention convention) {
    if (!net.activation_affine(j))
        throw invalid_argument("local_energy_affine: output has a non-affine activation");
    FiberView v = make_view(net, psi, phi, j);
    int m = net.inputs();
    double quad = 0.0;
    for (int i = 0; i < m; ++i) {
        for (int k = 0; k < m; ++k) {
            quad += v.c[static_cast<std::size_t>(i)] * v.c[static_cast<std::size_t>(k)] *
                    std::cos(v.delta[static_cast<std::size_t>(i)] -
                             v.delta[static_cast<std::size_t>(k)]);
        }
    }
    double linear = 0.0;
    for (int i = 0; i < m; ++i) linear += v.c[static_cast<std::size_t>(i)] * alignment_cos(v, i);
    double constant = v.gap * v.gap;
    if (convention == ConstantConvention::Half) constant *= 0.5;
    return 0.5 * v.a_mod * v.a_mod * quad - v.a_mod * v.gap * linear + constant;
}

double grad_amplitude(const SpectralNetwork& net, const std::vector<cplx>& psi,
                      const std::vector<cplx>& phi, int i, int j) {
    FiberView v = make_view(net, psi, phi, j);
    double A = v.a_mod;
    double amp = v.amp[static_cast<std::size_t>(i)];
    double pij = net.p(i, j);
    return A * A * amp * amp * pij * pij * net.r_hat(i, j) + A * A * amp * pij * cross_sum(v, i) -
           A * v.gap * amp * pij * alignment_cos(v, i);
}

double grad_structural(const SpectralNetwork& net, const std::vector<cplx>& psi,
                       const std::vector<cplx>& phi, int i, int j) {
    FiberView v = make_view(net, psi, phi, j);
    double A = v.a_mod;
    double amp = v.amp[static_cast<std::size_t>(i)];
    double rij = net.r_hat(i, j);
    return A * A * amp * amp * rij * rij * net.p(i, j) + A * A * amp * rij * cross_sum(v, i) -
           A * v.gap * amp * rij * alignment_cos(v, i);
}

double grad_phase(const SpectralNetwork& net, const std::vector<cplx>& psi,
                  const std::vector<cplx>& phi, int i, int j) {
    FiberView v = make_view(net, psi, phi, j);
    double A = v.a_mod;
    double ci = v.c[static_cast<std::size_t>(i)];
    double cross_sin = 0.0;
    for (int k = 0; k < net.inputs(); ++k) {
        if (k == i) continue;
        cross_sin += v.c[static_cast<std::size_t>(k)] *
                     std::sin(v.delta[static_cast<std::size_t>(i)] -
                              v.delta[static_cast<std::size_t>(k)]);
    }
    return -A * A * ci * cross_sin +
           A * v.gap * ci * std::sin(v.delta[static_cast<std::size_t>(i)] + v.align_phase);
}

double equilibrium_amplitude(const SpectralNetwork& net, const std::vector<cplx>& psi,
                             const std::vector<cplx>& phi, int i, int j) {
    FiberView v = make_view(net, psi, phi, j);
    double amp = v.amp[static_cast<std::size_t>(i)];
    if (!(amp > 0.0)) throw invalid_argument("equilibrium_amplitude: psi_i vanishes");
    if (!(net.p(i, j) > 0.0)) throw invalid_argument("equilibrium_amplitude: p_ij vanishes");
    if (!(v.a_mod > 0.0)) throw invalid_argument("equilibrium_amplitude: a_j vanishes");
    return (v.gap * alignment_cos(v, i) / v.a_mod - cross_sum(v, i)) / (amp * net.p(i, j));
}

double equilibrium_structural(const SpectralNetwork& net, const std::vector<cplx>& psi,
                              const std::vector<cplx>& phi, int i, int j) {
    FiberView v = make_view(net, psi, phi, j);
    double amp = v.amp[static_cast<std::size_t>(i)];
    if (!(amp > 0.0)) throw invalid_argument("equilibrium_structural: psi_i vanishes");
    if (!(net.r_hat(i, j) > 0.0)) throw invalid_argument("equilibrium_structural: r_hat vanishes");
    if (!(v.a_mod > 0.0)) throw invalid_argument("equilibrium_structural: a_j vanishes");
    return (v.gap * alignment_cos(v, i) / v.a_mod - cross_sum(v, i)) / (amp * net.r_hat(i, j));
}

double hebbian_equilibrium_residual(const SpectralNetwork& net, const std::vector<cplx>& psi,
                                    const std::vector<cplx>& phi, int i, int j) {
    FiberView v = make_view(net, psi, phi, j);
    if (!(v.a_mod > 0.0)) throw invalid_argument("hebbian_equilibrium_residual: a_j vanishes");
    double lhs = 0.0;
    for (int k = 0; k < net.inputs(); ++k) {
        lhs += v.c[static_cast<std::size_t>(k)] *
               std::cos(v.delta[static_cast<std::size_t>(i)] - v.delta[static_cast<std::size_t>(k)]);
    }
    return lhs - (v.gap / v.a_mod) * alignment_cos(v, i);
}

PressureReport pressure_report(const SpectralNetwork& net, const std::vector<cplx>& psi,
                               const std::vector<cplx>& phi, int j) {
    PressureReport out;
    for (int i = 0; i < net.inputs(); ++i) {
        out.pressures.push_back(grad_structural(net, psi, phi, i, j));
        if (net.p(i, j) > 0.0) out.active.push_back(i);
    }
    if (!out.active.empty()) {
        double sum = 0.0, lo = out.pressures[static_cast<std::size_t>(out.active.front())],
               hi = lo;
        for (int i : out.active) {
            double pr = out.pressures[static_cast<std::size_t>(i)];
            sum += pr;
            lo = std::min(lo, pr);
            hi = std::max(hi, pr);
        }
        out.lambda = -sum / static_cast<double>(out.active.size());
        out.equalization_residual = hi - lo;
    }
    out.min_inactive_slack = 0.0;
    bool first = true;
    for (int i = 0; i < net.inputs(); ++i) {
        if (net.p(i, j) > 0.0) continue;
        double slack = out.pressures[static_cast<std::size_t>(i)] + out.lambda;
        if (first || slack < out.min_inactive_slack) out.min_inactive_slack = slack;
        first = false;
        if (slack < -1e-6) out.kkt_ok = false;
    }
    return out;
}

std::vector<double> project_to_simplex(std::vector<double> v) {
    std::vector<double> u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double theta = 0.0;
    int rho = 0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        cumsum += u[k];
        double candidate = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (u[k] - candidate > 0.0) {
            rho = static_cast<int>(k + 1);
            theta = candidate;
        }
    }
    (void)rho;
    for (double& x : v) x = std::max(0.0, x - theta);
    return v;
}

namespace {

PlasticityDiagnostics collect_diagnostics(const SpectralNetwork& net, const std::vector<cplx>& psi,
                                          const std::vector<cplx>& phi, int step, double energy,
                                          double lr) {
    PlasticityDiagnostics d;
    d.step = step;
    d.energy = energy;
    d.learning_rate = lr;
    for (int j = 0; j < net.outputs(); ++j) {
        auto rep = pressure_report(net, psi, phi, j);
        d.active_sets.push_back(rep.active);
        d.pressure_spread.push_back(rep.equalization_residual);
        FiberView v = make_view(net, psi, phi, j);
        double lo = 1.0, hi = 1.0, min_align = 1.0;
        bool first_pair = true, first_align = true;
        for (std::size_t ai = 0; ai < rep.active.size(); ++ai) {
            int i = rep.active[ai];
            double ac = alignment_cos(v, i);
            if (first_align || ac < min_align) min_align = ac;
            first_align = false;
            for (std::size_t ak = ai + 1; ak < rep.active.size(); ++ak) {
                int k = rep.active[ak];
                double cc = std::cos(v.delta[static_cast<std::size_t>(i)] -
                                     v.delta[static_cast<std::size_t>(k)]);
                if (first_pair) {
                    lo = hi = cc;
                    first_pair = false;
                } else {
                    lo = std::min(lo, cc);
                    hi = std::max(hi, cc);
                }
            }
        }
        d.min_pair_cos.push_back(lo);
        d.max_pair_cos.push_back(hi);
        d.min_alignment_cos.push_back(min_align);
    }
    return d;
}

SpectralNetwork descend_once(const SpectralNetwork& net, const std::vector<cplx>& psi,
                             const std::vector<cplx>& phi, double lr,
                             const PlasticityOptions& opt) {
    SpectralNetwork next = net;
    bool freeze_phase = opt.freeze_phase || net.real_mode();
    for (int j = 0; j < net.outputs(); ++j) {
        if (!opt.freeze_structural) {
            std::vector<double> col(static_cast<std::size_t>(net.inputs()));
            for (int i = 0; i < net.inputs(); ++i)
                col[static_cast<std::size_t>(i)] =
                    net.p(i, j) - lr * grad_structural(net, psi, phi, i, j);
            col = project_to_simplex(std::move(col));
            for (int i = 0; i < net.inputs(); ++i) next.p(i, j) = col[static_cast<std::size_t>(i)];
        }
        for (int i = 0; i < net.inputs(); ++i) {
            if (!opt.freeze_amplitude)
                next.r_hat(i, j) =
                    std::max(0.0, net.r_hat(i, j) - lr * grad_amplitude(net, psi, phi, i, j));
            if (!freeze_phase)
                next.theta_hat(i, j) =
                    wrap_angle(net.theta_hat(i, j) - lr * grad_phase(net, psi, phi, i, j));
        }
    }
    return next;
}

} // namespace

PlasticityResult run_plasticity(const SpectralNetwork& net, const std::vector<cplx>& psi,
                                const std::vector<cplx>& phi, const PlasticityOptions& options) {
    for (int j = 0; j < net.outputs(); ++j) {
        if (!net.activation_affine(j))
            throw invalid_argument("run_plasticity: requires affine activations");
    }
    if (!(options.learning_rate > 0.0))
        throw invalid_argument("run_plasticity: learning rate must be > 0");

    PlasticityResult out{net, {}, false, -1};
    double lr = options.learning_rate;
    double energy = alignment_energy(out.net, psi, phi);
    out.trajectory.push_back(collect_diagnostics(out.net, psi, phi, 0, energy, lr));

    for (int step = 1; step <= options.steps; ++step) {
        double trial_lr = lr;
        SpectralNetwork candidate = descend_once(out.net, psi, phi, trial_lr, options);
        double cand_energy = alignment_energy(candidate, psi, phi);
        int halvings = 0;
        while (cand_energy > energy && halvings < options.max_halvings) {
            trial_lr *= 0.5;
            ++halvings;
            candidate = descend_once(out.net, psi, phi, trial_lr, options);
            cand_energy = alignment_energy(candidate, psi, phi);
        }
        if (cand_energy > energy) {
            out.stalled = true;
            out.stall_step = step;
            break;
        }
        out.net = std::move(candidate);
        energy = cand_energy;
        lr = std::min(options.learning_rate, trial_lr * 2.0);
        out.trajectory.push_back(collect_diagnostics(out.net, psi, phi, step, energy, trial_lr));
    }
    return out;
}

PlasticityResult run_multiscale(const SpectralNetwork& net, const std::vector<cplx>& psi,
                                const std::vector<cplx>& phi, const MultiscaleOptions& options) {
    // validate the assembly partition
    std::vector<int> seen(static_cast<std::size_t>(net.inputs()), 0);
    for (const auto& group : options.assemblies) {
        for (int i : group) {
            if (i < 0 || i >= net.inputs())
                throw invalid_argument("run_multiscale: assembly index out of range");
            if (seen[static_cast<std::size_t>(i)]++)
                throw invalid_argument("run_multiscale: assemblies must partition the inputs");
        }
    }
    for (int i = 0; i < net.inputs(); ++i) {
        if (!seen[static_cast<std::size_t>(i)])
            throw invalid_argument("run_multiscale: assemblies must cover every input");
    }

    std::vector<cplx> psi_avg = psi;
    for (const auto& group : options.assemblies) {
        cplx mean(0.0, 0.0);
        for (int i : group) mean += psi[static_cast<std::size_t>(i)];
        mean /= static_cast<double>(group.size());
        for (int i : group) psi_avg[static_cast<std::size_t>(i)] = mean;
    }

    PlasticityResult result{net, {}, false, -1};
    for (int round = 0; round < options.rounds; ++round) {
        PlasticityOptions fast;
        fast.steps = options.fast_steps;
        fast.learning_rate = options.learning_rate;
        fast.freeze_structural = true;
        auto fast_result = run_plasticity(result.net, psi, phi, fast);
        for (auto& d : fast_result.trajectory) result.trajectory.push_back(d);
        result.net = std::move(fast_result.net);

        PlasticityOptions slow;
        slow.steps = options.slow_steps;
        slow.learning_rate = options.learning_rate;
        slow.freeze_amplitude = true;
        slow.freeze_phase = true;
        auto slow_result = run_plasticity(result.net, psi_avg, phi, slow);
        for (auto& d : slow_result.trajectory) result.trajectory.push_back(d);
        result.net = std::move(slow_result.net);
        result.stalled = slow_result.stalled;
    }
    return result;
}

} // namespace hwg
