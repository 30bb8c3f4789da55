#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "ndro/diagnostics.hpp"
#include "ndro/driver.hpp"
#include "ndro/weights.hpp"

namespace ndro {

struct TraceData {
  std::vector<TraceRecord> records;
  bool has_reference = false;
};

/// One row per iteration. Reference columns are written only when
/// `has_reference` is set.
void write_trace_csv(std::ostream& out, const TraceData& trace);
/// Throws DataError (with line number) on malformed input.
TraceData read_trace_csv(std::istream& in);
nlohmann::json trace_to_json(const TraceData& trace);

nlohmann::json to_json(const Eigen::VectorXd& v);
nlohmann::json to_json(const WeightVector& p);
nlohmann::json to_json(const SharpnessReport& r);
nlohmann::json to_json(const AmbiguityCheck& r);
nlohmann::json to_json(const FinalBoundsReport& r);

Eigen::VectorXd vector_from_json(const nlohmann::json& j);

/// Iteration, A_k and the available distance/gap columns.
void write_convergence_csv(std::ostream& out, const TraceData& trace);
/// Line chart against A_k of ||w - w*|| when present, else of L(w_i, p_i).
std::string convergence_svg(const TraceData& trace);

}  // namespace ndro
