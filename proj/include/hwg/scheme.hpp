#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "hwg/transport.hpp"

namespace hwg {

// ---------------------------------------------------------------------------
// Energy specifications

// (alpha/2) W2^2(rho, h) per fiber; alpha constant per fiber cluster.
struct PurelyQuadratic {
    double alpha = 1.0;
    std::map<std::string, double> alpha_overrides; // cluster map fiber -> alpha
    double alpha_for(const std::string& fiber) const {
        auto it = alpha_overrides.find(fiber);
        return it == alpha_overrides.end() ? alpha : it->second;
    }
};

// F(W2(rho, h)) with F nondecreasing on R+.
struct Isotropic {
    std::function<double(double)> profile;
    double sample_radius = 4.0; // validation grid covers [0, sample_radius]
};

// f(W2^2(rho, h)) with f convex nondecreasing, f(0) finite.
struct W2Quadratic {
    std::function<double(double)> f;
    double sample_radius = 16.0;
};

// Contextualized representation map. Identity recovers the purely quadratic
// case; a user map is evaluated as H_x(rho_x, h_x) and only enters energy
// evaluation (the JKO steps require the identity map).
struct HebbianMap {
    bool identity = true;
    std::function<DiscreteMeasure(const std::string&, const DiscreteMeasure&,
                                  const DiscreteMeasure&)>
        apply;
};

// (alpha/2) d_Z^2(H(rho, h), h) with Lipschitz metadata for the limit lab.
struct GeneralizedQuadratic {
    double alpha = 1.0;
    HebbianMap map;
    double lipschitz_signal = 0.0; // L_S
    double lipschitz_map = 1.0;    // L_H
};

class EnergySpec {
public:
    EnergySpec(PurelyQuadratic e);
    EnergySpec(Isotropic e);
    EnergySpec(W2Quadratic e);
    EnergySpec(GeneralizedQuadratic e);

    bool is_purely_quadratic() const;
    // Purely quadratic, or generalized quadratic with the identity map: the
    // closed-form geodesic update applies.
    bool has_closed_form() const;
    double alpha_for(const std::string& fiber) const;

    const PurelyQuadratic* as_quadratic() const { return std::get_if<PurelyQuadratic>(&spec_); }
    const Isotropic* as_isotropic() const { return std::get_if<Isotropic>(&spec_); }
    const W2Quadratic* as_w2_quadratic() const { return std::get_if<W2Quadratic>(&spec_); }
    const GeneralizedQuadratic* as_gqe() const { return std::get_if<GeneralizedQuadratic>(&spec_); }

    // Local energy F_x(W2-distance) for one fiber given the W2 distance to
    // the target (closed-form classes) .
    double local_energy(const std::string& fiber, double w2_to_target) const;

private:
    std::variant<PurelyQuadratic, Isotropic, W2Quadratic, GeneralizedQuadratic> spec_;
};

// ---------------------------------------------------------------------------
// Signal rules

using SignalMap = std::map<std::string, DiscreteMeasure>;

struct ConstantTarget {
    SignalMap targets;
};

// Reads the target measure encoded in the context: h_x puts mass |phi_x[g]|
// (normalized) at gamma_points[g].
struct ContextTarget {
    std::vector<GraphPoint> gamma_points;
};

// Uses a coupled field's fiber measures as targets (consensus-style).
struct FieldCoupling {};

// Precomputed per-step targets (mirror bridge and scripted scenarios).
struct SequenceSignal {
    std::vector<SignalMap> per_step;
};

using SignalRule = std::variant<ConstantTarget, ContextTarget, FieldCoupling, SequenceSignal>;

SignalMap evaluate_signal(const SignalRule& rule, const MemoryField& field, const Context& context,
                          int step, const MemoryField* coupled = nullptr);

// ---------------------------------------------------------------------------
// Scheme state and steps

// One step's inputs with the signal explicitly frozen at (rho^n, phi^n).
struct SchemeState {
    int step = 0;
    double tau = 1.0;
    MemoryField field;
    Context context;
    SignalMap frozen_signal;
    EnergySpec energy;
};

SchemeState make_scheme_state(int step, double tau, MemoryField field, Context context,
                              const SignalRule& rule, EnergySpec energy,
                              const MemoryField* coupled = nullptr);

// t_tau = alpha*tau / (1 + alpha*tau), strictly inside (0, 1).
double contraction_factor(double alpha, double tau);

struct FiberStep {
    std::string fiber;
    double t_tau = 0.0;
    TransportPlan plan; // between rho^n_x and h^n_x
    DiscreteMeasure next;
    bool plan_unique = true;
};

struct StepResult {
    MemoryField next;
    std::vector<FiberStep> fibers;
    bool any_plan_nonunique = false;
};

// Closed-form purely quadratic update: fiberwise displacement along the
// optimal plan at parameter t_tau.
StepResult jko_step_quadratic(const SchemeState& state, const MetricGraph& g);

enum class NumericMode { GeodesicSearch, GridBruteForce };

struct NumericOptions {
    NumericMode mode = NumericMode::GeodesicSearch;
    int grid_denominator = 32;    // mass grid step 1/q, q <= 64
    int max_candidate_points = 8; // candidate support cap per fiber
    double t_tolerance = 1e-10;   // golden-section tolerance in t
};

struct NumericFiberStep {
    std::string fiber;
    double t_star = 0.0; // geodesic-search position (plan-relative)
    DiscreteMeasure next;
    bool tie_multiplicity = false; // grid mode found near-tied minimizers
};

struct NumericStepResult {
    MemoryField next;
    std::vector<NumericFiberStep> fibers;
};

// Numeric minimizing-movement step. Geodesic-search restricts to the fiber
// geodesic (1D golden-section); grid mode exhaustively minimizes over a
// simplex mass grid on a finite candidate support. Both modes return rho^n
// unchanged if no candidate improves the objective.
NumericStepResult jko_step_numeric(const SchemeState& state, const MetricGraph& g,
                                   const NumericOptions& options);

// Frozen Hebbian energy sum_x mu_x * E_x(rho_x, h_x).
double frozen_energy(const MemoryField& field, const SignalMap& targets, const EnergySpec& spec,
                     const MetricGraph& g);

// E_frozen(prev) - E_frozen(next) - (1/2 tau) * field_w(next, prev)^2.
// Contract: >= -1e-9 for any state produced by a jko step.
double edi_residual(const MemoryField& prev, const MemoryField& next, const SignalMap& targets,
                    const EnergySpec& spec, double tau, const MetricGraph& g);

} // namespace hwg
