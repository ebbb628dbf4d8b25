#pragma once

#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "orr/stream.hpp"
#include "orr/verifier.hpp"

namespace orr {

/// One row of the step log.
struct StepLogRow {
  long t = 0;
  double y = 0.0;
  double gamma = 0.0;
  std::optional<double> gamma_clipped;
  double q_or_d = 0.0;
  double denom = 1.0;
  double sq_loss = 0.0;
  double weighted_sq_loss = 0.0;
  std::optional<double> log_loss;

  bool operator==(const StepLogRow&) const = default;
};

inline constexpr const char* kStepLogHeader =
    "t,y,gamma,gamma_clipped,q_or_d,denom,sq_loss,weighted_sq_loss,log_loss";

inline void write_step_log(std::ostream& out, const std::vector<StepLogRow>& rows) {
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  out << kStepLogHeader << '\n';
  for (const auto& r : rows) {
    out << r.t << ',' << format_double(r.y) << ',' << format_double(r.gamma) << ','
        << opt(r.gamma_clipped) << ',' << format_double(r.q_or_d) << ',' << format_double(r.denom)
        << ',' << format_double(r.sq_loss) << ',' << format_double(r.weighted_sq_loss) << ','
        << opt(r.log_loss) << '\n';
  }
}

inline std::vector<StepLogRow> parse_step_log(std::istream& in) {
  std::string line;
  std::size_t lineno = 1;
  if (!std::getline(in, line) || detail::trim(line) != kStepLogHeader) {
    throw ParseError("step log: missing or unexpected header");
  }
  std::vector<StepLogRow> rows;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    const auto c = detail::split(line, ',');
    if (c.size() != 9) throw ParseError("step log line " + std::to_string(lineno) + ": expected 9 cells");
    auto num = [&](std::size_t i) { return detail::parse_cell(c[i], lineno, i + 1); };
    auto opt = [&](std::size_t i) -> std::optional<double> {
      if (c[i].empty()) return std::nullopt;
      return num(i);
    };
    StepLogRow r;
    r.t = static_cast<long>(num(0));
    r.y = num(1);
    r.gamma = num(2);
    r.gamma_clipped = opt(3);
    r.q_or_d = num(4);
    r.denom = num(5);
    r.sq_loss = num(6);
    r.weighted_sq_loss = num(7);
    r.log_loss = opt(8);
    rows.push_back(r);
  }
  return rows;
}

inline const char* to_string(Relation r) {
  return r == Relation::equality ? "equality" : "upper_bound";
}

inline nlohmann::json to_json(const ReportMeta& m) {
  nlohmann::json j{{"a", m.a}, {"T", m.T}, {"n", m.n}};
  if (m.sigma) j["sigma"] = *m.sigma;
  if (m.kernel) j["kernel"] = *m.kernel;
  if (m.Y) j["Y"] = *m.Y;
  if (m.Z) j["Z"] = *m.Z;
  if (m.X) j["X"] = *m.X;
  return j;
}

inline nlohmann::json to_json(const BoundReport& r) {
  return {{"name", r.name},         {"lhs", r.lhs},
          {"rhs", r.rhs},           {"gap", r.gap},
          {"relation", to_string(r.relation)},
          {"tolerance", r.tolerance},
          {"pass", r.pass},         {"meta", to_json(r.meta)}};
}

}  // namespace orr
