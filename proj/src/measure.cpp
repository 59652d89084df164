#include "hwg/measure.hpp"

#include <algorithm>
#include <cmath>

namespace hwg {

DiscreteMeasure DiscreteMeasure::make(std::vector<Atom> atoms) {
    if (atoms.empty()) throw invalid_argument("DiscreteMeasure: no atoms");
    std::sort(atoms.begin(), atoms.end(),
              [](const Atom& a, const Atom& b) { return a.point < b.point; });

    std::vector<Atom> merged;
    for (const Atom& a : atoms) {
        if (a.mass < 0.0) throw invalid_argument("DiscreteMeasure: negative mass");
        if (!merged.empty() && merged.back().point == a.point) {
            merged.back().mass += a.mass;
        } else {
            merged.push_back(a);
        }
    }

    double total = 0.0;
    for (const Atom& a : merged) total += a.mass;
    if (std::abs(total - 1.0) > 1e-9)
        throw invalid_argument("DiscreteMeasure: masses do not sum to 1");

    std::vector<Atom> kept;
    double kept_total = 0.0;
    bool pruned = false;
    for (const Atom& a : merged) {
        if (a.mass >= kPruneThreshold) {
            kept.push_back(a);
            kept_total += a.mass;
        } else {
            pruned = true;
        }
    }
    if (kept.empty()) throw invalid_argument("DiscreteMeasure: all atoms pruned");
    // renormalize only when needed, so canonical inputs pass through bit-exact
    if (pruned || std::abs(kept_total - 1.0) > 1e-12) {
        for (Atom& a : kept) a.mass /= kept_total;
    }

    DiscreteMeasure m;
    m.atoms_ = std::move(kept);
    return m;
}

double DiscreteMeasure::mass_at(const GraphPoint& p) const {
    for (const Atom& a : atoms_) {
        if (a.point == p) return a.mass;
        if (p < a.point) break;
    }
    return 0.0;
}

double DiscreteMeasure::linf_gap(const DiscreteMeasure& other) const {
    double gap = 0.0;
    for (const Atom& a : atoms_) gap = std::max(gap, std::abs(a.mass - other.mass_at(a.point)));
    for (const Atom& a : other.atoms_) gap = std::max(gap, std::abs(a.mass - mass_at(a.point)));
    return gap;
}

double DiscreteMeasure::l1_gap(const DiscreteMeasure& other) const {
    double gap = 0.0;
    for (const Atom& a : atoms_) gap += std::abs(a.mass - other.mass_at(a.point));
    for (const Atom& a : other.atoms_) {
        if (!contains(a.point)) gap += a.mass;
    }
    return gap;
}

double second_moment(const DiscreteMeasure& m, const MetricGraph& g, const GraphPoint& basepoint) {
    g.validate_point(basepoint);
    double s = 0.0;
    for (const Atom& a : m.atoms()) {
        double d = g.distance(a.point, basepoint);
        s += a.mass * d * d;
    }
    return s;
}

DiscreteMeasure mixture(const DiscreteMeasure& m1, const DiscreteMeasure& m2, double t) {
    if (t < 0.0 || t > 1.0) throw invalid_argument("mixture: t outside [0, 1]");
    if (t == 0.0) return m1;
    if (t == 1.0) return m2;
    std::vector<Atom> atoms;
    atoms.reserve(m1.size() + m2.size());
    for (const Atom& a : m1.atoms()) atoms.push_back({a.point, (1.0 - t) * a.mass});
    for (const Atom& a : m2.atoms()) atoms.push_back({a.point, t * a.mass});
    return DiscreteMeasure::make(std::move(atoms));
}

MemoryField::MemoryField(std::vector<Fiber> fibers) : fibers_(std::move(fibers)) {
    if (fibers_.empty()) throw invalid_argument("MemoryField: no fibers");
    bool any_positive = false;
    for (std::size_t i = 0; i < fibers_.size(); ++i) {
        if (fibers_[i].weight < 0.0) throw invalid_argument("MemoryField: negative fiber weight");
        if (fibers_[i].weight > 0.0) any_positive = true;
        for (std::size_t j = i + 1; j < fibers_.size(); ++j) {
            if (fibers_[i].id == fibers_[j].id)
                throw invalid_argument("MemoryField: duplicate fiber id '" + fibers_[i].id + "'");
        }
    }
    if (!any_positive) throw invalid_argument("MemoryField: needs at least one positive weight");
}

const Fiber& MemoryField::fiber(const std::string& id) const {
    for (const Fiber& f : fibers_) {
        if (f.id == id) return f;
    }
    throw invalid_argument("MemoryField: unknown fiber '" + id + "'");
}

bool MemoryField::has_fiber(const std::string& id) const {
    for (const Fiber& f : fibers_) {
        if (f.id == id) return true;
    }
    return false;
}

MemoryField MemoryField::with_measures(std::vector<DiscreteMeasure> measures) const {
    if (measures.size() != fibers_.size())
        throw invalid_argument("with_measures: measure count != fiber count");
    std::vector<Fiber> out = fibers_;
    for (std::size_t i = 0; i < out.size(); ++i) out[i].measure = std::move(measures[i]);
    return MemoryField(std::move(out));
}

Context::Context(std::size_t gamma_size,
                 std::map<std::string, std::vector<std::complex<double>>> values)
    : gamma_size_(gamma_size), values_(std::move(values)) {
    for (const auto& [id, v] : values_) {
        if (v.size() != gamma_size_)
            throw invalid_argument("Context: fiber '" + id + "' has wrong Gamma size");
    }
}

const std::vector<std::complex<double>>& Context::at(const std::string& fiber) const {
    auto it = values_.find(fiber);
    if (it == values_.end()) throw invalid_argument("Context: unknown fiber '" + fiber + "'");
    return it->second;
}

double Context::tv_norm(const std::vector<std::complex<double>>& v) {
    double s = 0.0;
    for (const auto& z : v) s += std::abs(z);
    return s;
}

double context_distance(const Context& c1, const Context& c2,
                        const std::map<std::string, double>& weights) {
    if (c1.gamma_size() != c2.gamma_size())
        throw invalid_argument("context_distance: mismatched Gamma index sets");
    double s = 0.0;
    for (const auto& [id, w] : weights) {
        const auto& v1 = c1.at(id);
        const auto& v2 = c2.at(id);
        double tv = 0.0;
        for (std::size_t k = 0; k < v1.size(); ++k) tv += std::abs(v1[k] - v2[k]);
        s += w * tv * tv;
    }
    return std::sqrt(s);
}

} // namespace hwg
