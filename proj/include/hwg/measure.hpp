#pragma once

#include <complex>
#include <map>
#include <string>
#include <vector>

#include "hwg/graph.hpp"

namespace hwg {

struct Atom {
    GraphPoint point;
    double mass = 0.0;
};

// Finitely supported probability measure on a metric graph. Canonical form:
// atoms sorted by point order, coincident (canonicalized) points merged,
// masses > 0 summing to 1. Atoms below 1e-15 after arithmetic are pruned and
// the measure renormalized, so supports stay finite under long iteration.
class DiscreteMeasure {
public:
    static constexpr double kPruneThreshold = 1e-15;

    DiscreteMeasure() = default;
    static DiscreteMeasure make(std::vector<Atom> atoms);
    static DiscreteMeasure dirac(const GraphPoint& p) { return make({{p, 1.0}}); }

    const std::vector<Atom>& atoms() const { return atoms_; }
    std::size_t size() const { return atoms_.size(); }
    bool empty() const { return atoms_.empty(); }

    double mass_at(const GraphPoint& p) const;
    bool contains(const GraphPoint& p) const { return mass_at(p) > 0.0; }

    friend bool operator==(const DiscreteMeasure& a, const DiscreteMeasure& b) {
        if (a.atoms_.size() != b.atoms_.size()) return false;
        for (std::size_t i = 0; i < a.atoms_.size(); ++i) {
            if (a.atoms_[i].point != b.atoms_[i].point) return false;
            if (a.atoms_[i].mass != b.atoms_[i].mass) return false;
        }
        return true;
    }

    // Max per-point mass difference over the union of supports.
    double linf_gap(const DiscreteMeasure& other) const;
    // Sum of per-point mass differences over the union of supports.
    double l1_gap(const DiscreteMeasure& other) const;

private:
    std::vector<Atom> atoms_;
};

double second_moment(const DiscreteMeasure& m, const MetricGraph& g, const GraphPoint& basepoint);

// Atom-wise convex combination (1-t) m1 + t m2 with merging at coincident
// points. This is the mixture, not the Wasserstein geodesic.
DiscreteMeasure mixture(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double t);

struct Fiber {
    std::string id;
    double weight = 1.0; // mu_x >= 0; weights need not sum to 1
    DiscreteMeasure measure;
};

// Fiber-indexed family of measures with fiber weights mu. Value semantics.
class MemoryField {
public:
    MemoryField() = default;
    explicit MemoryField(std::vector<Fiber> fibers);

    const std::vector<Fiber>& fibers() const { return fibers_; }
    std::size_t size() const { return fibers_.size(); }
    const Fiber& fiber(const std::string& id) const;
    bool has_fiber(const std::string& id) const;

    MemoryField with_measures(std::vector<DiscreteMeasure> measures) const;

private:
    std::vector<Fiber> fibers_;
};

// Per-fiber complex weight vectors over a shared finite index set Gamma.
class Context {
public:
    Context() = default;
    Context(std::size_t gamma_size, std::map<std::string, std::vector<std::complex<double>>> values);

    std::size_t gamma_size() const { return gamma_size_; }
    const std::vector<std::complex<double>>& at(const std::string& fiber) const;
    const std::map<std::string, std::vector<std::complex<double>>>& values() const { return values_; }

    // Total variation norm on finite Gamma: sum of entry moduli.
    static double tv_norm(const std::vector<std::complex<double>>& v);

private:
    std::size_t gamma_size_ = 0;
    std::map<std::string, std::vector<std::complex<double>>> values_;
};

// d_C: ( sum_x mu_x * ||c1_x - c2_x||_TV^2 )^(1/2), weights keyed by fiber id.
double context_distance(const Context& c1, const Context& c2,
                        const std::map<std::string, double>& weights);

// W2 between two fibers' measures (the pseudo-metric the field induces on X).
double induced_pseudometric(const MemoryField& f, const MetricGraph& g, const std::string& x,
                            const std::string& y);

} // namespace hwg
