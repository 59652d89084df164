#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hwg/measure.hpp"
#include "hwg/transport.hpp"

namespace hwg {

// Shortest round-trip decimal form; deterministic across runs.
std::string format_double(double v);

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);
    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::ofstream out_;
};

nlohmann::json point_to_json(const GraphPoint& p);
GraphPoint point_from_json(const nlohmann::json& j, const MetricGraph& g);

nlohmann::json measure_to_json(const DiscreteMeasure& m);
DiscreteMeasure measure_from_json(const nlohmann::json& j, const MetricGraph& g);

nlohmann::json field_to_json(const MemoryField& f);
MemoryField field_from_json(const nlohmann::json& j, const MetricGraph& g);

// Graph literal: {"vertices": n, "edges": [[a, b, length], ...],
//                 "labels": [...] (optional)}
MetricGraph graph_from_json(const nlohmann::json& j);
nlohmann::json graph_to_json(const MetricGraph& g);

nlohmann::json plan_to_json(const TransportPlan& plan);
void write_plan_csv(const std::string& path, const TransportPlan& plan, const MetricGraph& g);

} // namespace hwg
