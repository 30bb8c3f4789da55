#include "ndro/trace_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "ndro/error.hpp"

namespace ndro {

namespace {

const std::vector<std::string> kBaseColumns = {"i", "a", "A", "w_norm", "step_norm", "L"};
const std::vector<std::string> kRefColumns = {"dist",      "gap",       "gap_lower",
                                              "cum_gap",   "cum_lower", "cum_upper",
                                              "chi2_to_pstar", "breg_pstar", "local_S",
                                              "local_rhs"};

std::vector<double*> fields(TraceRecord& r) {
  return {&r.a,         &r.A,         &r.w_norm,    &r.step_norm,     &r.L,
          &r.dist,      &r.gap,       &r.gap_lower, &r.cum_gap,       &r.cum_lower,
          &r.cum_upper, &r.chi2_to_pstar, &r.breg_pstar, &r.local_S, &r.local_rhs};
}

std::vector<double> values(const TraceRecord& r, bool with_ref) {
  std::vector<double> v = {r.a, r.A, r.w_norm, r.step_norm, r.L};
  if (with_ref)
    v.insert(v.end(), {r.dist, r.gap, r.gap_lower, r.cum_gap, r.cum_lower, r.cum_upper,
                       r.chi2_to_pstar, r.breg_pstar, r.local_S, r.local_rhs});
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  if (s == "nan" || s == "-nan") return kNaN;
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw DataError("malformed number '" + s + "'", line);
  return v;
}

}  // namespace

void write_trace_csv(std::ostream& out, const TraceData& trace) {
  std::vector<std::string> cols = kBaseColumns;
  if (trace.has_reference) cols.insert(cols.end(), kRefColumns.begin(), kRefColumns.end());
  for (std::size_t k = 0; k < cols.size(); ++k) out << (k ? "," : "") << cols[k];
  out << '\n' << std::setprecision(17);
  for (const auto& r : trace.records) {
    out << r.i;
    for (double v : values(r, trace.has_reference)) out << ',' << v;
    out << '\n';
  }
}

TraceData read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trace", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split(line);
  std::vector<std::string> full = kBaseColumns;
  full.insert(full.end(), kRefColumns.begin(), kRefColumns.end());
  TraceData t;
  if (header == kBaseColumns)
    t.has_reference = false;
  else if (header == full)
    t.has_reference = true;
  else
    throw DataError("unrecognized trace header", 1);

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split(line);
    if (cells.size() != header.size())
      throw DataError("expected " + std::to_string(header.size()) + " fields, found " +
                          std::to_string(cells.size()),
                      lineno);
    TraceRecord r;
    const double idx = parse_number(cells[0], lineno);
    if (!(idx >= 0.0) || idx != std::floor(idx)) throw DataError("bad iteration index", lineno);
    r.i = static_cast<std::size_t>(idx);
    auto f = fields(r);
    for (std::size_t k = 1; k < cells.size(); ++k) *f[k - 1] = parse_number(cells[k], lineno);
    t.records.push_back(r);
  }
  return t;
}

nlohmann::json trace_to_json(const TraceData& trace) {
  nlohmann::json rows = nlohmann::json::array();
  std::vector<std::string> cols = kBaseColumns;
  if (trace.has_reference) cols.insert(cols.end(), kRefColumns.begin(), kRefColumns.end());
  for (const auto& r : trace.records) {
    nlohmann::json row;
    row["i"] = r.i;
    const auto v = values(r, trace.has_reference);
    for (std::size_t k = 0; k < v.size(); ++k)
      row[cols[k + 1]] = std::isfinite(v[k]) ? nlohmann::json(v[k]) : nlohmann::json(nullptr);
    rows.push_back(std::move(row));
  }
  return {{"has_reference", trace.has_reference}, {"records", std::move(rows)}};
}

nlohmann::json to_json(const Eigen::VectorXd& v) {
  return nlohmann::json(std::vector<double>(v.data(), v.data() + v.size()));
}

nlohmann::json to_json(const WeightVector& p) { return nlohmann::json(p.to_std()); }

nlohmann::json to_json(const SharpnessReport& r) {
  nlohmann::json margin = nlohmann::json::array();
  for (const auto& m : r.margin) margin.push_back({{"gamma", m.gamma}, {"lambda_hat", m.lambda_hat}});
  return {{"c0_hat", r.c0_hat},
          {"c1_hat", r.c1_hat},
          {"moment2_max", r.moment2_max},
          {"moment4_max", r.moment4_max},
          {"margin_lambda_hat", r.margin_lambda_hat},
          {"trials_used", r.trials_used},
          {"margin", margin}};
}

nlohmann::json to_json(const AmbiguityCheck& r) {
  return {{"chi2", r.chi2_value}, {"bound", r.bound}, {"pass", r.pass}};
}

namespace {
nlohmann::json check_json(const BoundCheck& c) {
  return {{"value", c.value}, {"bound", c.bound}, {"margin", c.margin}, {"pass", c.pass}};
}
}  // namespace

nlohmann::json to_json(const FinalBoundsReport& r) {
  nlohmann::json j = {{"applicable", r.applicable}, {"C3", r.C3}, {"C4", r.C4}};
  if (!r.applicable) return j;
  j["opt"] = r.opt;
  j["epsilon"] = r.epsilon;
  j["distance"] = check_json(r.distance);
  j["square_loss"] = check_json(r.square_loss);
  j["risk"] = check_json(r.risk);
  j["ambiguity"] = to_json(r.ambiguity);
  j["all_pass"] = r.all_pass;
  return j;
}

Eigen::VectorXd vector_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ConfigError("expected a numeric array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError("expected a numeric array");
    v[static_cast<Eigen::Index>(k)] = j[k].get<double>();
  }
  return v;
}

void write_convergence_csv(std::ostream& out, const TraceData& trace) {
  out << "i,A,L";
  if (trace.has_reference) out << ",dist,gap,cum_gap,cum_lower,cum_upper";
  out << '\n' << std::setprecision(17);
  for (const auto& r : trace.records) {
    out << r.i << ',' << r.A << ',' << r.L;
    if (trace.has_reference)
      out << ',' << r.dist << ',' << r.gap << ',' << r.cum_gap << ',' << r.cum_lower << ','
          << r.cum_upper;
    out << '\n';
  }
}

std::string convergence_svg(const TraceData& trace) {
  constexpr double kW = 640, kH = 400, kPad = 60;
  const bool dist = trace.has_reference;
  std::vector<double> xs, ys;
  for (const auto& r : trace.records) {
    const double y = dist ? r.dist : r.L;
    if (!std::isfinite(y) || !std::isfinite(r.A)) continue;
    xs.push_back(r.A);
    ys.push_back(y);
  }
  const bool logy = !ys.empty() && *std::min_element(ys.begin(), ys.end()) > 0.0;
  if (logy)
    for (double& y : ys) y = std::log10(y);

  std::ostringstream svg;
  svg << std::setprecision(6);
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::string ylabel = std::string(logy ? "log10 " : "") + (dist ? "||w - w*||" : "L(w, p)");
  svg << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 15 << "\" text-anchor=\"middle\">A_k</text>\n";
  svg << "<text x=\"15\" y=\"" << kH / 2 << "\" transform=\"rotate(-90 15 " << kH / 2
      << ")\" text-anchor=\"middle\">" << ylabel << "</text>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kH - kPad << "\" x2=\"" << kW - kPad << "\" y2=\""
      << kH - kPad << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kPad << "\" y1=\"" << kPad << "\" x2=\"" << kPad << "\" y2=\""
      << kH - kPad << "\" stroke=\"black\"/>\n";
  if (!xs.empty()) {
    const auto [xmin_it, xmax_it] = std::minmax_element(xs.begin(), xs.end());
    const auto [ymin_it, ymax_it] = std::minmax_element(ys.begin(), ys.end());
    const double x0 = *xmin_it, x1 = *xmax_it > x0 ? *xmax_it : x0 + 1.0;
    const double y0 = *ymin_it, y1 = *ymax_it > y0 ? *ymax_it : y0 + 1.0;
    // Long traces are thinned to at most ~2000 points.
    const std::size_t stride = std::max<std::size_t>(1, xs.size() / 2000);
    svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < xs.size(); k += stride) {
      const double px = kPad + (xs[k] - x0) / (x1 - x0) * (kW - 2 * kPad);
      const double py = kH - kPad - (ys[k] - y0) / (y1 - y0) * (kH - 2 * kPad);
      svg << px << ',' << py << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kPad << "\" y=\"" << kH - kPad + 18 << "\">" << x0 << "</text>\n";
    svg << "<text x=\"" << kW - kPad << "\" y=\"" << kH - kPad + 18
        << "\" text-anchor=\"end\">" << x1 << "</text>\n";
    svg << "<text x=\"" << kPad - 5 << "\" y=\"" << kH - kPad << "\" text-anchor=\"end\">" << y0
        << "</text>\n";
    svg << "<text x=\"" << kPad - 5 << "\" y=\"" << kPad + 5 << "\" text-anchor=\"end\">" << y1
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace ndro
