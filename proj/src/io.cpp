#include "hwg/io.hpp"

#include <cmath>
#include <cstdio>

namespace hwg {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CsvWriter::CsvWriter(const std::string& path) : out_(path) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open '" + path + "'");
}

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

void CsvWriter::close() { out_.close(); }

nlohmann::json point_to_json(const GraphPoint& p) {
    if (p.is_vertex()) return nlohmann::json{{"vertex", p.vertex}};
    return nlohmann::json{{"edge", p.edge}, {"offset", p.offset}};
}

GraphPoint point_from_json(const nlohmann::json& j, const MetricGraph& g) {
    if (j.contains("vertex")) {
        GraphPoint p = vertex_point(j.at("vertex").get<int>());
        g.validate_point(p);
        return p;
    }
    if (j.contains("edge")) {
        return edge_point(g, j.at("edge").get<int>(), j.at("offset").get<double>());
    }
    throw invalid_argument("point_from_json: expected 'vertex' or 'edge'/'offset'");
}

nlohmann::json measure_to_json(const DiscreteMeasure& m) {
    nlohmann::json atoms = nlohmann::json::array();
    for (const Atom& a : m.atoms()) {
        nlohmann::json atom = point_to_json(a.point);
        atom["mass"] = a.mass;
        atoms.push_back(atom);
    }
    return atoms;
}

DiscreteMeasure measure_from_json(const nlohmann::json& j, const MetricGraph& g) {
    std::vector<Atom> atoms;
    for (const auto& entry : j) {
        atoms.push_back({point_from_json(entry, g), entry.at("mass").get<double>()});
    }
    return DiscreteMeasure::make(std::move(atoms));
}

nlohmann::json field_to_json(const MemoryField& f) {
    nlohmann::json fibers = nlohmann::json::array();
    for (const Fiber& fb : f.fibers()) {
        fibers.push_back({{"fiber", fb.id}, {"weight", fb.weight},
                          {"measure", measure_to_json(fb.measure)}});
    }
    return fibers;
}

MemoryField field_from_json(const nlohmann::json& j, const MetricGraph& g) {
    std::vector<Fiber> fibers;
    for (const auto& entry : j) {
        fibers.push_back({entry.at("fiber").get<std::string>(),
                          entry.value("weight", 1.0),
                          measure_from_json(entry.at("measure"), g)});
    }
    return MemoryField(std::move(fibers));
}

MetricGraph graph_from_json(const nlohmann::json& j) {
    std::vector<GraphEdge> edges;
    for (const auto& e : j.at("edges")) {
        edges.push_back({e.at(0).get<std::int32_t>(), e.at(1).get<std::int32_t>(),
                         e.at(2).get<double>()});
    }
    std::vector<std::string> labels;
    if (j.contains("labels")) {
        for (const auto& l : j.at("labels")) labels.push_back(l.get<std::string>());
    }
    int n = j.contains("vertices") ? j.at("vertices").get<int>() : 0;
    if (n == 0) {
        for (const GraphEdge& e : edges) n = std::max({n, e.a + 1, e.b + 1});
    }
    return MetricGraph(n, std::move(edges), std::move(labels));
}

nlohmann::json graph_to_json(const MetricGraph& g) {
    nlohmann::json edges = nlohmann::json::array();
    for (const GraphEdge& e : g.edges()) edges.push_back({e.a, e.b, e.length});
    nlohmann::json labels = nlohmann::json::array();
    for (int v = 0; v < g.vertex_count(); ++v) labels.push_back(g.vertex_label(v));
    return {{"vertices", g.vertex_count()}, {"edges", edges}, {"labels", labels}};
}

nlohmann::json plan_to_json(const TransportPlan& plan) {
    nlohmann::json entries = nlohmann::json::array();
    for (const PlanEntry& e : plan.entries)
        entries.push_back({{"k", e.k}, {"l", e.l}, {"mass", e.mass}});
    nlohmann::json sources = nlohmann::json::array();
    for (const GraphPoint& p : plan.source_points) sources.push_back(point_to_json(p));
    nlohmann::json targets = nlohmann::json::array();
    for (const GraphPoint& p : plan.target_points) targets.push_back(point_to_json(p));
    return {{"sources", sources}, {"targets", targets}, {"entries", entries},
            {"cost", plan.cost}, {"unique_basis", plan.unique_basis}};
}

void write_plan_csv(const std::string& path, const TransportPlan& plan, const MetricGraph& g) {
    CsvWriter csv(path);
    csv.row({"k", "l", "mass", "cost_contribution", "source", "target"});
    for (const PlanEntry& e : plan.entries) {
        const GraphPoint& s = plan.source_points[static_cast<std::size_t>(e.k)];
        const GraphPoint& t = plan.target_points[static_cast<std::size_t>(e.l)];
        double d = g.distance(s, t);
        csv.row({std::to_string(e.k), std::to_string(e.l), format_double(e.mass),
                 format_double(e.mass * d * d), s.to_string(), t.to_string()});
    }
}

} // namespace hwg
