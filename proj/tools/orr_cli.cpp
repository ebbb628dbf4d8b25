// Command-line harness: runs one online-regression experiment and checks the
// requested loss identities and bounds.
//
//   orr --algo ridge --a 1 --data stream.csv --checks thm1,det_identity --report out.json
//   orr --algo kbrr --a 0.5 --sigma 1 --kernel rbf:gamma=0.5
//       --synthetic n=3,T=200,noise=0.1,x=cube:1 --checks thm3,thm4 --seed 7
//
// Exit status: 0 when every asserted check passes, 1 when one fails,
// 2 on configuration, input or numeric errors.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "orr/experiment.hpp"

namespace {

std::vector<std::string> split_checks(const std::string& s) {
  std::vector<std::string> out;
  for (auto c : orr::detail::split(s, ',')) {
    if (!c.empty()) out.emplace_back(c);
  }
  return out;
}

std::string default_steps_path(const std::string& report) {
  const auto dot = report.rfind('.');
  const auto slash = report.find_last_of('/');
  const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
  return (has_ext ? report.substr(0, dot) : report) + ".steps.csv";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online ridge regression experiments and loss-identity checks"};

  std::string algo = "ridge";
  double a = 1.0;
  std::optional<double> sigma, clip_y, x_bound, z_bound, c_f;
  std::optional<std::string> kernel, data, synthetic, report, steps, dump_data;
  std::string checks;
  std::uint64_t seed = 0;

  app.add_option("--algo", algo, "ridge | vaw | brr | krr | kbrr")->capture_default_str();
  app.add_option("--a", a, "regularization a > 0")->capture_default_str();
  app.add_option("--sigma", sigma, "noise scale for brr/kbrr");
  app.add_option("--kernel", kernel, "linear | rbf:gamma=G | poly:degree=D,offset=C | precomputed");
  app.add_option("--clip", clip_y, "outcome bound Y; predictions are clipped to [-Y, Y]");
  auto* data_opt = app.add_option("--data", data, "CSV stream (header f1,...,fn,y) or precomputed-kernel CSV");
  auto* syn_opt = app.add_option("--synthetic", synthetic,
                                 "inline spec, e.g. n=5,T=100,noise=0.1,x=cube:1,theta=random,adv=none");
  data_opt->excludes(syn_opt);
  app.add_option("--checks", checks,
                 "comma list: thm1,thm2,cor1,cor2,cor3,det_identity,det_bound,thm3,thm4,cor5,cor5_tuned");
  app.add_option("--seed", seed, "seed for synthetic streams")->capture_default_str();
  app.add_option("--report", report, "JSON report path (stdout when omitted)");
  app.add_option("--steps", steps, "step-log CSV path (default: <report>.steps.csv)");
  app.add_option("--x-bound", x_bound, "X with |x_t|_inf <= X for det_bound");
  app.add_option("--z-bound", z_bound, "Z with |x_t|_2 <= Z for cor2");
  app.add_option("--c-f", c_f, "c_F = sup sqrt K(x,x) for cor5_tuned");
  app.add_option("--dump-data", dump_data, "write the input stream as CSV");

  CLI11_PARSE(app, argc, argv);

  orr::ExperimentConfig cfg;
  try {
    cfg.algo = orr::parse_algo(algo);
    cfg.a = a;
    cfg.sigma = sigma;
    cfg.clip_y = clip_y;
    cfg.x_bound = x_bound;
    cfg.z_bound = z_bound;
    cfg.c_f = c_f;
    cfg.seed = seed;
    cfg.checks = split_checks(checks);
    if (kernel) cfg.kernel = orr::parse_kernel(*kernel);
    const bool precomputed = cfg.kernel && std::holds_alternative<orr::PrecomputedKernel>(*cfg.kernel);
    if (data) {
      if (precomputed) cfg.data = orr::KernelCsvSource{*data};
      else cfg.data = orr::CsvSource{*data};
    } else if (synthetic) {
      cfg.data = orr::SyntheticSource{*synthetic, orr::parse_synthetic_spec(*synthetic)};
    } else {
      throw orr::ConfigError("one of --data or --synthetic is required");
    }
    cfg.report_path = report;
    cfg.steps_path = steps;
    if (!cfg.steps_path && report) cfg.steps_path = default_steps_path(*report);

    const orr::ExperimentResult res = orr::run_experiment(cfg);

    if (cfg.steps_path) {
      std::ofstream out(*cfg.steps_path);
      if (!out) throw orr::IoError("cannot write '" + *cfg.steps_path + "'");
      orr::write_step_log(out, res.steps);
    }
    if (dump_data) {
      if (!res.synthetic && !std::holds_alternative<orr::CsvSource>(cfg.data)) {
        throw orr::ConfigError("--dump-data needs a vector-input stream");
      }
      std::ofstream out(*dump_data);
      if (!out) throw orr::IoError("cannot write '" + *dump_data + "'");
      orr::write_csv(out, res.synthetic ? res.synthetic->stream
                                        : orr::load_csv(std::get<orr::CsvSource>(cfg.data).path));
    }

    const auto doc = orr::result_to_json(cfg, res, cfg.steps_path);
    if (report) {
      std::ofstream out(*report);
      if (!out) throw orr::IoError("cannot write '" + *report + "'");
      out << doc.dump(2) << '\n';
    } else {
      std::cout << doc.dump(2) << '\n';
    }

    for (const auto& r : res.reports) {
      std::cerr << (r.pass ? "PASS " : "FAIL ") << r.name << "  lhs=" << orr::format_double(r.lhs)
                << "  rhs=" << orr::format_double(r.rhs) << "  gap=" << orr::format_double(r.gap) << '\n';
    }
    for (const auto& t : res.trends) {
      std::cerr << "INFO " << t.name << "  tail_max=" << orr::format_double(t.tail_max) << '\n';
    }
    return res.all_pass() ? 0 : 1;
  } catch (const orr::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
