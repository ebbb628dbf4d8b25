#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "orr/report.hpp"

namespace orr {

enum class Algo { ridge, vaw, brr, krr, kbrr };

inline Algo parse_algo(std::string_view s) {
  if (s == "ridge") return Algo::ridge;
  if (s == "vaw") return Algo::vaw;
  if (s == "brr") return Algo::brr;
  if (s == "krr") return Algo::krr;
  if (s == "kbrr") return Algo::kbrr;
  throw ConfigError("unknown algo '" + std::string(s) + "' (ridge, vaw, brr, krr, kbrr)");
}

inline const char* to_string(Algo a) {
  switch (a) {
    case Algo::ridge: return "ridge";
    case Algo::vaw: return "vaw";
    case Algo::brr: return "brr";
    case Algo::krr: return "krr";
    case Algo::kbrr: return "kbrr";
  }
  return "?";
}

inline bool is_kernel_algo(Algo a) { return a == Algo::krr || a == Algo::kbrr; }
inline bool is_bayes_algo(Algo a) { return a == Algo::brr || a == Algo::kbrr; }

struct PrecomputedKernel {};

using KernelChoice = std::variant<KernelSpec, PrecomputedKernel>;

/// "linear", "rbf:gamma=0.5", "poly:degree=2,offset=1" or "precomputed".
inline KernelChoice parse_kernel(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view kind = detail::trim(text.substr(0, colon));
  std::optional<double> gamma, degree, offset;
  if (colon != std::string_view::npos) {
    for (auto item : detail::split(text.substr(colon + 1), ',')) {
      const auto eq = item.find('=');
      if (eq == std::string_view::npos) throw ConfigError("kernel: expected key=value in '" + std::string(item) + "'");
      const auto key = detail::trim(item.substr(0, eq));
      double v = 0.0;
      try {
        v = detail::parse_cell(detail::trim(item.substr(eq + 1)), 0, 0);
      } catch (const ParseError&) {
        throw ConfigError("kernel: bad number in '" + std::string(item) + "'");
      }
      if (key == "gamma") gamma = v;
      else if (key == "degree") degree = v;
      else if (key == "offset") offset = v;
      else throw ConfigError("kernel: unknown parameter '" + std::string(key) + "'");
    }
  }
  try {
    if (kind == "linear" && !gamma && !degree && !offset) return KernelSpec(LinearKernel{});
    if (kind == "rbf" && !degree && !offset) return KernelSpec(RbfKernel{gamma.value_or(1.0)});
    if (kind == "poly" && !gamma) {
      const double d = degree.value_or(2.0);
      if (d != std::floor(d)) throw ConfigError("kernel: degree must be an integer");
      return KernelSpec(PolynomialKernel{static_cast<int>(d), offset.value_or(1.0)});
    }
    if (kind == "precomputed" && colon == std::string_view::npos) return PrecomputedKernel{};
  } catch (const ParamError& e) {
    throw ConfigError(std::string("kernel: ") + e.what());
  }
  throw ConfigError("kernel: unrecognized spec '" + std::string(text) + "'");
}

struct CsvSource {
  std::string path;
};

struct SyntheticSource {
  std::string text;  // inline spec, kept verbatim for the report
  SyntheticSpec spec;
};

struct KernelCsvSource {
  std::string path;
};

using DataSource = std::variant<CsvSource, SyntheticSource, KernelCsvSource>;

inline const std::set<std::string>& linear_checks() {
  static const std::set<std::string> s{"thm1", "thm2", "cor1", "cor2", "det_identity", "det_bound", "cor3"};
  return s;
}

inline const std::set<std::string>& kernel_checks() {
  static const std::set<std::string> s{"thm3", "thm4", "cor5", "cor5_tuned", "det_identity"};
  return s;
}

struct ExperimentConfig {
  Algo algo = Algo::ridge;
  double a = 1.0;
  std::optional<double> sigma;
  std::optional<KernelChoice> kernel;
  std::optional<double> clip_y;
  DataSource data = SyntheticSource{};
  std::vector<std::string> checks;
  std::uint64_t seed = 0;
  std::optional<std::string> report_path;
  std::optional<std::string> steps_path;
  // Optional explicit norm bounds; realized maxima are used when absent.
  std::optional<double> x_bound;  // |x|_inf <= X for det_bound
  std::optional<double> z_bound;  // |x|_2 <= Z for cor2
  std::optional<double> c_f;      // sup sqrt K(x,x) for cor5_tuned
};

/// Rejects inconsistent configurations before any data is touched.
inline void validate(const ExperimentConfig& c) {
  if (!(c.a > 0.0) || !std::isfinite(c.a)) throw ConfigError("--a must be a finite value > 0");
  const bool kernel_algo = is_kernel_algo(c.algo);
  if (kernel_algo && !c.kernel) throw ConfigError(std::string("algo ") + to_string(c.algo) + " requires --kernel");
  if (!kernel_algo && c.kernel) throw ConfigError(std::string("algo ") + to_string(c.algo) + " takes no --kernel");
  const bool bayes = is_bayes_algo(c.algo);
  if (bayes && !c.sigma) throw ConfigError(std::string("algo ") + to_string(c.algo) + " requires --sigma");
  if (!bayes && c.sigma) throw ConfigError(std::string("algo ") + to_string(c.algo) + " takes no --sigma");
  if (c.sigma && (!(*c.sigma > 0.0) || !std::isfinite(*c.sigma))) throw ConfigError("--sigma must be > 0");
  if (c.clip_y && !(*c.clip_y > 0.0)) throw ConfigError("--clip must be > 0");

  const bool precomputed = c.kernel && std::holds_alternative<PrecomputedKernel>(*c.kernel);
  const bool kernel_csv = std::holds_alternative<KernelCsvSource>(c.data);
  if (precomputed != kernel_csv) {
    throw ConfigError("--kernel precomputed and a precomputed-kernel data file go together");
  }

  const auto& allowed = kernel_algo ? kernel_checks() : linear_checks();
  for (const auto& ch : c.checks) {
    if (!allowed.count(ch)) {
      throw ConfigError("check '" + ch + "' is not available for algo " + to_string(c.algo));
    }
    if (ch == "thm2" && c.algo != Algo::brr) throw ConfigError("check thm2 requires algo brr");
    if (ch == "thm4" && c.algo != Algo::kbrr) throw ConfigError("check thm4 requires algo kbrr");
    if ((ch == "cor1" || ch == "cor5" || ch == "cor5_tuned") && !c.clip_y) {
      throw ConfigError("check " + ch + " requires --clip Y");
    }
  }
}

struct TrendSummary {
  std::string name;
  double tail_max = 0.0;
  std::size_t tail_start = 0;
  std::size_t T = 0;
};

struct ExperimentResult {
  std::vector<StepLogRow> steps;
  std::vector<BoundReport> reports;
  std::vector<TrendSummary> trends;
  std::optional<SyntheticStream> synthetic;  // metadata of a generated stream

  bool all_pass() const {
    for (const auto& r : reports) {
      if (!r.pass) return false;
    }
    return true;
  }
};

namespace detail {

inline StepLogRow to_row(long t, const StepRecord& r) {
  return {t, r.y, r.gamma, r.gamma_clipped, r.q, r.denom, r.sq_loss, r.weighted_sq_loss, std::nullopt};
}

inline std::vector<StepLogRow> run_linear_protocol(const ExperimentConfig& c, const Stream& s) {
  std::vector<StepLogRow> rows;
  if (s.empty()) return rows;
  RidgeState state(c.a, s.front().x.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& e = s[i];
    const auto t = static_cast<long>(i + 1);
    at_step(i, [&] {
      std::optional<PredictiveGaussian> pred;
      if (c.algo == Algo::brr) pred = brr_predict(state, e.x, *c.sigma);
      const double vaw = c.algo == Algo::vaw ? state.vaw_predict(e.x) : 0.0;
      StepRecord rec = state.update(e.x, e.y, c.clip_y);
      if (c.algo == Algo::vaw) {
        rec.gamma = vaw;
        rec.sq_loss = (e.y - vaw) * (e.y - vaw);
        rec.weighted_sq_loss = rec.sq_loss / rec.denom;
        if (c.clip_y) rec.gamma_clipped = clip(vaw, *c.clip_y);
      }
      StepLogRow row = to_row(t, rec);
      if (pred) row.log_loss = gaussian_log_loss(*pred, e.y);
      rows.push_back(row);
      return 0;
    });
  }
  return rows;
}

inline std::vector<StepLogRow> run_kernel_protocol(const ExperimentConfig& c, const KernelData& d) {
  std::vector<StepRecord> recs;
  run_kernel(d, c.a, c.clip_y, &recs);
  std::vector<StepLogRow> rows;
  for (std::size_t i = 0; i < recs.size(); ++i) {
    StepLogRow row = to_row(static_cast<long>(i + 1), recs[i]);
    if (c.algo == Algo::kbrr) {
      const double s2 = *c.sigma * *c.sigma;
      row.log_loss = gaussian_log_loss(PredictiveGaussian(recs[i].gamma, s2 * recs[i].denom), recs[i].y);
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace detail

/// Loads the data, runs the configured learner in protocol order, then runs
/// every requested check. Errors propagate with step or check context.
inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  validate(c);
  ExperimentResult res;

  std::optional<Stream> stream;
  std::optional<KernelData> kdata;
  if (const auto* csv = std::get_if<CsvSource>(&c.data)) {
    stream = load_csv(csv->path);
  } else if (const auto* syn = std::get_if<SyntheticSource>(&c.data)) {
    res.synthetic = generate_synthetic(syn->spec, c.seed);
    stream = res.synthetic->stream;
  } else {
    kdata = KernelData::from_rows(load_kernel_csv(std::get<KernelCsvSource>(c.data).path));
  }
  if (is_kernel_algo(c.algo) && !kdata) {
    kdata = KernelData::from_inputs(*stream, std::get<KernelSpec>(*c.kernel));
  }

  res.steps = kdata ? detail::run_kernel_protocol(c, *kdata) : detail::run_linear_protocol(c, *stream);

  for (const auto& ch : c.checks) {
    try {
      if (kdata) {
        if (ch == "thm3") res.reports.push_back(verify_thm3(*kdata, c.a));
        else if (ch == "thm4") res.reports.push_back(verify_thm4(*kdata, c.a, *c.sigma));
        else if (ch == "cor5") res.reports.push_back(verify_cor5(*kdata, c.a, *c.clip_y));
        else if (ch == "cor5_tuned") res.reports.push_back(verify_cor5_tuned(*kdata, *c.clip_y, c.c_f));
        else if (ch == "det_identity") res.reports.push_back(verify_kernel_det_identity(*kdata, c.a));
        continue;
      }
      const Stream& s = *stream;
      if (ch == "thm1") {
        res.reports.push_back(verify_thm1(s, c.a));
      } else if (ch == "thm2") {
        res.reports.push_back(verify_thm2(s, c.a, *c.sigma));
      } else if (ch == "cor1") {
        res.reports.push_back(verify_cor1(s, c.a, *c.clip_y));
      } else if (ch == "cor2") {
        res.reports.push_back(verify_cor2(s, c.a, c.z_bound));
      } else if (ch == "det_identity") {
        res.reports.push_back(verify_det_identity(s, c.a));
      } else if (ch == "det_bound") {
        double x = c.x_bound.value_or(0.0);
        if (!c.x_bound) {
          for (const auto& e : s) x = std::max(x, e.x.lpNorm<Eigen::Infinity>());
          if (x == 0.0) x = 1.0;
        }
        res.reports.push_back(verify_det_bound(s, c.a, x));
      } else if (ch == "cor3") {
        const auto tr = verify_trend_cor3(s, c.a);
        res.trends.push_back({"cor3", tr.tail_max, tr.tail_start, tr.q.size()});
      }
    } catch (const InputError& e) {
      throw InputError("check " + ch + ": " + e.what());
    } catch (const NumericError& e) {
      throw NumericError("check " + ch + ": " + e.what());
    }
  }
  return res;
}

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"algo", to_string(c.algo)}, {"a", c.a}, {"checks", c.checks}, {"seed", c.seed}};
  if (c.sigma) j["sigma"] = *c.sigma;
  if (c.kernel) {
    j["kernel"] = std::holds_alternative<PrecomputedKernel>(*c.kernel)
                      ? std::string("precomputed")
                      : std::get<KernelSpec>(*c.kernel).to_string();
  }
  if (c.clip_y) j["clip_y"] = *c.clip_y;
  if (c.x_bound) j["x_bound"] = *c.x_bound;
  if (c.z_bound) j["z_bound"] = *c.z_bound;
  if (c.c_f) j["c_f"] = *c.c_f;
  std::visit(
      [&](const auto& src) {
        using S = std::decay_t<decltype(src)>;
        if constexpr (std::is_same_v<S, CsvSource>) j["data"] = {{"kind", "csv"}, {"path", src.path}};
        else if constexpr (std::is_same_v<S, SyntheticSource>) j["data"] = {{"kind", "synthetic"}, {"spec", src.text}};
        else j["data"] = {{"kind", "precomputed_kernel_csv"}, {"path", src.path}};
      },
      c.data);
  return j;
}

/// The report document: {schema_version, config, reports, informational, steps_path}.
inline nlohmann::json result_to_json(const ExperimentConfig& c, const ExperimentResult& r,
                                     const std::optional<std::string>& steps_path) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& b : r.reports) reports.push_back(to_json(b));
  nlohmann::json info = nlohmann::json::array();
  for (const auto& t : r.trends) {
    info.push_back({{"name", t.name}, {"tail_max", t.tail_max}, {"tail_start", t.tail_start},
                    {"T", t.T}, {"informational", true}});
  }
  nlohmann::json j{{"schema_version", 1},
                   {"config", config_to_json(c)},
                   {"reports", reports},
                   {"informational", info},
                   {"steps_path", steps_path ? nlohmann::json(*steps_path) : nlohmann::json(nullptr)}};
  if (r.synthetic) {
    const auto& s = *r.synthetic;
    j["synthetic"] = {{"theta_star", std::vector<double>(s.theta_star.data(), s.theta_star.data() + s.theta_star.size())},
                      {"max_norm2", s.max_norm2},
                      {"max_norm_inf", s.max_norm_inf},
                      {"max_abs_y", s.max_abs_y}};
  }
  return j;
}

}  // namespace orr
