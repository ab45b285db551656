#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include "jte/pipeline.hpp"
#include "jte/verify.hpp"

namespace {

bool parse_format(const std::string& s, jte::ReportFormat& out) {
  if (s == "text-table") {
    out = jte::ReportFormat::text_table;
  } else if (s == "tsv") {
    out = jte::ReportFormat::tsv;
  } else if (s == "json-doc") {
    out = jte::ReportFormat::json_doc;
  } else {
    return false;
  }
  return true;
}

int run_solve(const std::string& config, const std::string& report_path,
              const std::string& format_name, const std::string& samples_csv, bool trace,
              bool seed_set, std::uint64_t seed, int cone_order) {
  jte::ReportFormat format;
  if (!parse_format(format_name, format)) {
    std::cerr << "error: unknown format '" << format_name << "'\n";
    return 3;
  }

  jte::ProblemSpec spec = jte::load_config(config);
  if (seed_set) {
    spec.verify.seed = seed;
    spec.solver.seed = seed;
  }
  if (cone_order > 0) {
    if (cone_order > spec.robot.dof() + 1) {
      std::cerr << "error: cone order " << cone_order << " exceeds dof + 1\n";
      return 3;
    }
    spec.cone_order = cone_order;
  }

  jte::ToleranceReport rep = jte::run_pipeline(spec, trace ? &std::cerr : nullptr);

  if (report_path.empty()) {
    jte::emit_report(rep, format, std::cout);
  } else {
    std::ofstream out(report_path);
    if (!out) {
      std::cerr << "error: cannot write " << report_path << "\n";
      return 3;
    }
    jte::emit_report(rep, format, out);
  }

  if (!samples_csv.empty()) {
    int n = spec.verify.samples > 0 ? spec.verify.samples : 10000;
    std::vector<jte::SampleRow> rows;
    jte::sample_check(spec.constraints, spec.robot, spec.reference, rep.lambda_min, n,
                      spec.verify.seed, false, &rows);
    std::ofstream out(samples_csv);
    if (!out) {
      std::cerr << "error: cannot write " << samples_csv << "\n";
      return 3;
    }
    jte::write_samples_csv(out, rows);
  }
  return jte::report_exit_code(rep);
}

int run_verify(const std::string& config, double lambda) {
  jte::ProblemSpec spec = jte::load_config(config);
  int n = spec.verify.samples > 0 ? spec.verify.samples : 10000;
  int worst = 0;
  for (size_t i = 0; i < spec.constraints.size(); ++i) {
    jte::SampleReport rep = jte::sample_check({spec.constraints[i]}, spec.robot, spec.reference,
                                              lambda, n, spec.verify.seed + i);
    std::printf("constraint %s  violations %d/%d  smallest f(x) %.4g\n",
                spec.constraints[i].name.c_str(), rep.violations, rep.samples, rep.min_f);
    worst = std::max(worst, rep.violations);
  }
  jte::SampleReport joint = jte::sample_check(spec.constraints, spec.robot, spec.reference, lambda,
                                              n, spec.verify.seed);
  std::printf("combined  violations %d/%d  smallest f(x) %.4g\n", joint.violations, joint.samples,
              joint.min_f);
  worst = std::max(worst, joint.violations);
  return worst > 0 ? 2 : 0;
}

int run_oracle(const std::string& config) {
  jte::ProblemSpec spec = jte::load_config(config);
  for (const auto& c : spec.constraints) {
    jte::OracleEstimate est = jte::oracle_lambda(c, spec.robot, spec.reference,
                                                 spec.verify.grid_per_axis, spec.verify.oracle_tol);
    std::printf("oracle %s  [%.6g, %.6g]  grid %d  tol %.3g\n", c.name.c_str(), est.lambda_lo,
                est.lambda_hi, est.grid_per_axis, spec.verify.oracle_tol);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint tolerance estimation for serial arms under half-plane constraints"};
  app.require_subcommand(1);

  std::string config;
  std::string report_path;
  std::string format_name = "text-table";
  std::string samples_csv;
  bool trace = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int cone_order = 0;
  double lambda = 0.0;

  CLI::App* solve = app.add_subcommand("solve", "certify a tolerance bound for each constraint");
  solve->add_option("--config", config, "problem configuration (json)")->required();
  solve->add_option("--report", report_path, "write the report here instead of stdout");
  solve->add_option("--format", format_name, "text-table, tsv, or json-doc");
  solve->add_option("--samples", samples_csv, "write per-sample verification rows to this csv");
  solve->add_option("--seed", seed, "override the verification seed")
      ->each([&seed_set](const std::string&) { seed_set = true; });
  solve->add_option("--cone-order", cone_order, "override the certificate cone order");
  solve->add_flag("--trace", trace, "log each pipeline stage to stderr");

  CLI::App* verify = app.add_subcommand("verify", "sample an existing bound without solving");
  verify->add_option("--config", config, "problem configuration (json)")->required();
  verify->add_option("--lambda", lambda, "tolerance box half-width to test (radians)")->required();

  CLI::App* oracle = app.add_subcommand("oracle", "estimate ground-truth brackets by search");
  oracle->add_option("--config", config, "problem configuration (json)")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve->parsed())
      return run_solve(config, report_path, format_name, samples_csv, trace, seed_set, seed,
                       cone_order);
    if (verify->parsed()) return run_verify(config, lambda);
    return run_oracle(config);
  } catch (const jte::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const jte::InfeasibleReferenceError& e) {
    std::cerr << "infeasible reference: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
