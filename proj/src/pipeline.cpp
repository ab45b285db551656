#include "jte/pipeline.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "jte/sos.hpp"

namespace jte {

using nlohmann::json;

namespace {

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += "; ";
    out += parts[i];
  }
  return out;
}

void check_keys(const json& obj, const std::vector<std::string>& allowed,
                const std::string& where, std::vector<std::string>& problems) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const auto& k : allowed) ok = ok || it.key() == k;
    if (!ok) problems.push_back(where + ": unknown field '" + it.key() + "'");
  }
}

bool get_vec3(const json& j, Eigen::Vector3d& out) {
  if (!j.is_array() || j.size() != 3) return false;
  for (int i = 0; i < 3; ++i) {
    if (!j[static_cast<size_t>(i)].is_number()) return false;
    out[i] = j[static_cast<size_t>(i)].get<double>();
  }
  return true;
}

RobotModel parse_robot(const json& j, std::vector<std::string>& problems) {
  RobotModel robot;
  if (!j.is_object()) {
    problems.push_back("robot: must be an object");
    return robot;
  }
  check_keys(j, {"kind", "link_lengths", "joints", "tool"}, "robot", problems);
  std::string kind = j.value("kind", "");
  if (kind == "planar_world_angles") {
    robot.kind = RobotModel::Kind::planar_world_angles;
    if (!j.contains("link_lengths") || !j["link_lengths"].is_array()) {
      problems.push_back("robot: planar kind requires link_lengths array");
    } else {
      for (const auto& v : j["link_lengths"]) {
        if (!v.is_number()) {
          problems.push_back("robot: link_lengths entries must be numbers");
          break;
        }
        robot.link_lengths.push_back(v.get<double>());
      }
    }
    if (j.contains("joints")) problems.push_back("robot: planar kind takes no joints");
  } else if (kind == "spatial_transform_chain") {
    robot.kind = RobotModel::Kind::spatial_transform_chain;
    if (!j.contains("joints") || !j["joints"].is_array() || j["joints"].empty()) {
      problems.push_back("robot: spatial kind requires a nonempty joints array");
    } else {
      for (size_t k = 0; k < j["joints"].size(); ++k) {
        const json& jj = j["joints"][k];
        std::string where = "robot.joints[" + std::to_string(k) + "]";
        Joint joint;
        if (!jj.is_object()) {
          problems.push_back(where + ": must be an object");
          continue;
        }
        check_keys(jj, {"axis", "translation", "rotation"}, where, problems);
        if (!jj.contains("axis") || !get_vec3(jj["axis"], joint.axis))
          problems.push_back(where + ": axis must be a 3-vector");
        if (jj.contains("translation") && !get_vec3(jj["translation"], joint.translation))
          problems.push_back(where + ": translation must be a 3-vector");
        if (jj.contains("rotation")) {
          const json& r = jj["rotation"];
          bool ok = r.is_array() && r.size() == 3;
          for (int row = 0; ok && row < 3; ++row) {
            Eigen::Vector3d v;
            ok = get_vec3(r[static_cast<size_t>(row)], v);
            if (ok) joint.rotation.row(row) = v.transpose();
          }
          if (!ok) problems.push_back(where + ": rotation must be a 3x3 array");
        }
        robot.joints.push_back(joint);
      }
    }
    if (j.contains("link_lengths")) problems.push_back("robot: spatial kind takes no link_lengths");
    if (j.contains("tool") && !get_vec3(j["tool"], robot.tool))
      problems.push_back("robot: tool must be a 3-vector");
  } else {
    problems.push_back("robot: kind must be planar_world_angles or spatial_transform_chain");
  }
  return robot;
}

void parse_solver(const json& j, SolverOptions& opts, std::vector<std::string>& problems) {
  if (!j.is_object()) {
    problems.push_back("solver: must be an object");
    return;
  }
  check_keys(j,
             {"max_iter", "outer_tol", "mu0", "mu_factor", "mu_floor", "feas_tol", "psd_tol",
              "lambda0", "alpha_gauge", "backoff_rounds", "backoff_factor"},
             "solver", problems);
  opts.max_iter = j.value("max_iter", opts.max_iter);
  opts.outer_tol = j.value("outer_tol", opts.outer_tol);
  opts.mu0 = j.value("mu0", opts.mu0);
  opts.mu_factor = j.value("mu_factor", opts.mu_factor);
  opts.mu_floor = j.value("mu_floor", opts.mu_floor);
  opts.feas_tol = j.value("feas_tol", opts.feas_tol);
  opts.psd_tol = j.value("psd_tol", opts.psd_tol);
  opts.lambda0 = j.value("lambda0", opts.lambda0);
  opts.alpha_gauge = j.value("alpha_gauge", opts.alpha_gauge);
  opts.backoff_rounds = j.value("backoff_rounds", opts.backoff_rounds);
  opts.backoff_factor = j.value("backoff_factor", opts.backoff_factor);
  if (opts.max_iter < 1) problems.push_back("solver: max_iter must be positive");
  if (opts.lambda0 <= 0) problems.push_back("solver: lambda0 must be positive");
  if (opts.mu_factor <= 0 || opts.mu_factor >= 1)
    problems.push_back("solver: mu_factor must lie in (0, 1)");
  if (opts.backoff_factor <= 0 || opts.backoff_factor >= 1)
    problems.push_back("solver: backoff_factor must lie in (0, 1)");
  if (opts.backoff_rounds < 0) problems.push_back("solver: backoff_rounds must be nonnegative");
}

void parse_verification(const json& j, VerifyOptions& opts, std::vector<std::string>& problems) {
  if (!j.is_object()) {
    problems.push_back("verification: must be an object");
    return;
  }
  check_keys(j, {"samples", "seed", "grid_per_axis", "oracle_tol"}, "verification", problems);
  opts.samples = j.value("samples", opts.samples);
  opts.seed = j.value("seed", opts.seed);
  opts.grid_per_axis = j.value("grid_per_axis", opts.grid_per_axis);
  opts.oracle_tol = j.value("oracle_tol", opts.oracle_tol);
  if (opts.samples < 0) problems.push_back("verification: samples must be nonnegative");
  if (opts.grid_per_axis < 2) problems.push_back("verification: grid_per_axis must be at least 2");
  if (opts.oracle_tol <= 0) problems.push_back("verification: oracle_tol must be positive");
}

}  // namespace

ProblemSpec parse_config(const std::string& text, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }

  std::vector<std::string> problems;
  if (!doc.is_object()) throw ConfigError(origin + ": top level must be an object");
  check_keys(doc,
             {"schema_version", "name", "units", "robot", "reference", "constraints",
              "cone_order", "solver", "verification"},
             "config", problems);

  if (!doc.contains("schema_version") || !doc["schema_version"].is_number_integer() ||
      doc["schema_version"].get<int>() != 1)
    problems.push_back("config: schema_version must be the integer 1");
  if (doc.contains("units") && doc["units"] != "radians")
    problems.push_back("config: units must be radians (degrees are rejected)");

  ProblemSpec spec;
  spec.name = doc.value("name", origin);

  if (!doc.contains("robot"))
    problems.push_back("config: missing robot");
  else
    spec.robot = parse_robot(doc["robot"], problems);

  if (!doc.contains("reference") || !doc["reference"].is_array() || doc["reference"].empty()) {
    problems.push_back("config: reference must be a nonempty array of radians");
  } else {
    spec.reference.resize(static_cast<Eigen::Index>(doc["reference"].size()));
    for (size_t i = 0; i < doc["reference"].size(); ++i) {
      if (!doc["reference"][i].is_number()) {
        problems.push_back("config: reference entries must be numbers");
        break;
      }
      spec.reference[static_cast<Eigen::Index>(i)] = doc["reference"][i].get<double>();
    }
  }

  if (!doc.contains("constraints") || !doc["constraints"].is_array() ||
      doc["constraints"].empty()) {
    problems.push_back("config: constraints must be a nonempty array");
  } else {
    for (size_t i = 0; i < doc["constraints"].size(); ++i) {
      const json& jc = doc["constraints"][i];
      std::string where = "constraints[" + std::to_string(i) + "]";
      HalfPlaneConstraint c;
      if (!jc.is_object()) {
        problems.push_back(where + ": must be an object");
        continue;
      }
      check_keys(jc, {"name", "normal", "offset"}, where, problems);
      c.name = jc.value("name", "constraint_" + std::to_string(i + 1));
      if (!jc.contains("normal") || !get_vec3(jc["normal"], c.normal))
        problems.push_back(where + ": normal must be a 3-vector");
      if (!jc.contains("offset") || !jc["offset"].is_number())
        problems.push_back(where + ": offset must be a number");
      else
        c.offset = jc["offset"].get<double>();
      if (c.normal.norm() == 0.0) problems.push_back(where + ": normal must be nonzero");
      spec.constraints.push_back(c);
    }
  }

  spec.cone_order = doc.value("cone_order", 2);
  if (doc.contains("solver")) parse_solver(doc["solver"], spec.solver, problems);
  if (doc.contains("verification")) parse_verification(doc["verification"], spec.verify, problems);
  spec.solver.seed = spec.verify.seed;

  if (problems.empty()) {
    try {
      spec.robot.validate();
      int n = spec.robot.dof();
      if (spec.reference.size() != n)
        problems.push_back("config: reference has " + std::to_string(spec.reference.size()) +
                           " entries for a " + std::to_string(n) + "-joint robot");
      if (spec.cone_order < 1 || spec.cone_order > n + 1)
        problems.push_back("config: cone_order must lie in [1, dof + 1]");
    } catch (const std::invalid_argument& e) {
      problems.push_back(std::string("robot: ") + e.what());
    }
  }
  if (!problems.empty()) throw ConfigError(origin + ": " + join(problems));

  for (const auto& c : spec.constraints) {
    double f = eval_constraint(c, spec.robot, spec.reference);
    if (f <= 0.0) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%.6g", f);
      throw InfeasibleReferenceError(origin + ": reference is not strictly safe for constraint '" +
                                     c.name + "' (f = " + buf + ")");
    }
  }
  return spec;
}

ProblemSpec load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

namespace {

int env_threads() {
  const char* v = std::getenv("JTE_THREADS");
  if (v == nullptr) return 1;
  int n = std::atoi(v);
  if (n < 1) return 1;
  return n > 64 ? 64 : n;
}

struct TraceSink {
  std::ostream* os = nullptr;
  std::mutex mu;
  void line(const std::string& s) {
    if (os == nullptr) return;
    std::lock_guard<std::mutex> lock(mu);
    (*os) << "[trace] " << s << "\n";
  }
};

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

ConstraintResult solve_one(const ProblemSpec& spec, size_t ci, TraceSink& trace) {
  const HalfPlaneConstraint& c = spec.constraints[ci];
  ConstraintResult res;
  res.name = c.name;
  auto t0 = std::chrono::steady_clock::now();

  // Algorithm order: bound polynomial, refute generators, cone, p0, Gram,
  // solve, certificate. Each constraint owns an independent variable universe.
  VariableSet vars;
  DeviationVars dev = add_deviation_vars(vars, spec.robot.dof());
  Polynomial g = lower_bound_poly(c, spec.robot, spec.reference, dev);
  trace.line(res.name + ": bound polynomial with " + std::to_string(g.term_count()) +
             " terms, clearance " + fmt("%.6g", g.constant_term()));

  RefuteGenerators gens = build_refute_generators(g, dev);
  std::vector<ConeTerm> cone = enumerate_cone_terms(gens, spec.cone_order, vars);
  trace.line(res.name + ": cone with " + std::to_string(cone.size()) + " terms at order " +
             std::to_string(spec.cone_order));

  Polynomial p0 = assemble_p0(cone);
  GramProblem gp = build_gram(p0, dev.y);
  CompiledGram cg = compile_gram(gp, cone, dev.lambda);
  trace.line(res.name + ": gram dimension " + std::to_string(cg.dim) + ", " +
             std::to_string(cg.terms.size()) + " compiled terms");

  NlpSolution sol = solve_nlp(cg, spec.solver);
  if (sol.structurally_blocked)
    trace.line(res.name + ": no certificate exists at cone order " +
               std::to_string(spec.cone_order) + ", gram row " +
               std::to_string(sol.blocked_row) + " cannot hold a positive diagonal");
  else
    trace.line(res.name + ": solver " + status_name(sol.status) + " at lambda " +
               fmt("%.6g", sol.lambda) + " after " + std::to_string(sol.iterations) +
               " iterations");

  sol = certify_with_backoff(cg, sol, spec.solver);
  trace.line(res.name + ": certificate " + (sol.certified ? "accepted" : "rejected") +
             ", min eigenvalue " + fmt("%.3g", sol.min_eigenvalue) + ", backoff rounds " +
             std::to_string(sol.backoff_count));

  res.status = sol.status;
  res.certified = sol.certified;
  res.structurally_blocked = sol.structurally_blocked;
  res.backoff_count = sol.backoff_count;
  res.min_eigenvalue = sol.min_eigenvalue;
  res.iterations = sol.iterations;
  res.lambda = sol.certified ? sol.lambda : 0.0;

  if (sol.structurally_blocked)
    res.warnings.push_back(res.name + ": no certificate exists at cone order " +
                           std::to_string(spec.cone_order) + " (structural)");
  else if (!sol.certified)
    res.warnings.push_back(res.name + ": no certificate (" + status_name(sol.status) + ")");
  else if (sol.backoff_count > 0)
    res.warnings.push_back(res.name + ": certificate required " +
                           std::to_string(sol.backoff_count) + " backoff rounds");
  if (res.lambda >= kSmallAngleLimit)
    res.warnings.push_back(res.name + ": bound reaches the small-angle validity edge");

  if (spec.verify.samples > 0) {
    std::uint64_t seed = spec.verify.seed + ci;
    if (res.certified) {
      SampleReport rep =
          sample_check({c}, spec.robot, spec.reference, res.lambda, spec.verify.samples, seed);
      res.verified = true;
      res.violations = rep.violations;
      res.min_f = rep.min_f;
      if (rep.violations > 0)
        res.warnings.push_back(res.name + ": " + std::to_string(rep.violations) +
                               " safety violations inside the certified box");

      double audit_lambda = std::min(res.lambda, kSmallAngleLimit);
      res.bound_excess = check_lower_bound(g, dev, c, spec.robot, spec.reference, audit_lambda,
                                           spec.verify.samples, seed + 1000);
      if (res.bound_excess > 0.0)
        res.warnings.push_back(res.name + ": polynomial bound exceeds f by " +
                               fmt("%.3g", res.bound_excess) + " at a sampled point");
    }

    // Ground truth needs no certificate; an uncertified row still reports it.
    OracleEstimate est = oracle_lambda(c, spec.robot, spec.reference, spec.verify.grid_per_axis,
                                       spec.verify.oracle_tol);
    res.oracle_ran = true;
    res.oracle_lo = est.lambda_lo;
    res.oracle_hi = est.lambda_hi;
    if (res.lambda > est.lambda_hi + 1e-3)
      res.warnings.push_back(res.name + ": certified bound exceeds the oracle bracket");
    if (res.certified)
      trace.line(res.name + ": verification " + std::to_string(res.violations) + "/" +
                 std::to_string(spec.verify.samples) + " violations, oracle [" +
                 fmt("%.6g", est.lambda_lo) + ", " + fmt("%.6g", est.lambda_hi) + "]");
    else
      trace.line(res.name + ": oracle [" + fmt("%.6g", est.lambda_lo) + ", " +
                 fmt("%.6g", est.lambda_hi) + "]");
  }

  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max-iter";
    case SolveStatus::infeasible: return "infeasible";
  }
  return "unknown";
}

ToleranceReport run_pipeline(const ProblemSpec& spec, std::ostream* trace_os) {
  ToleranceReport rep;
  rep.instance = spec.name;
  rep.cone_order = spec.cone_order;
  rep.seed = spec.verify.seed;
  rep.samples = spec.verify.samples;
  rep.constraints.resize(spec.constraints.size());

  TraceSink trace;
  trace.os = trace_os;

  int workers = std::min<int>(env_threads(), static_cast<int>(spec.constraints.size()));
  if (workers <= 1) {
    for (size_t i = 0; i < spec.constraints.size(); ++i)
      rep.constraints[i] = solve_one(spec, i, trace);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&]() {
        while (true) {
          size_t i = next.fetch_add(1);
          if (i >= spec.constraints.size()) return;
          rep.constraints[i] = solve_one(spec, i, trace);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  std::vector<double> lambdas;
  bool any_certified = false;
  for (const auto& r : rep.constraints) {
    lambdas.push_back(r.lambda);
    any_certified = any_certified || r.certified;
    for (const auto& w : r.warnings) rep.warnings.push_back(w);
  }
  rep.all_failed = !any_certified;
  rep.lambda_min = combine_constraints(lambdas);

  if (spec.verify.samples > 0 && !rep.all_failed) {
    SampleReport joint = sample_check(spec.constraints, spec.robot, spec.reference,
                                      rep.lambda_min, spec.verify.samples, spec.verify.seed);
    rep.combined_verified = true;
    rep.combined_violations = joint.violations;
    rep.combined_min_f = joint.min_f;
    if (joint.violations > 0)
      rep.warnings.push_back("combined: " + std::to_string(joint.violations) +
                             " violations at the joint bound");
    trace.line("combined: lambda_min " + fmt("%.6g", rep.lambda_min) + ", " +
               std::to_string(joint.violations) + "/" + std::to_string(joint.samples) +
               " violations");
  }
  return rep;
}

namespace {

std::string g4(double v) { return fmt("%.4g", v); }
std::string g17(double v) { return fmt("%.17g", v); }

void emit_text_table(const ToleranceReport& rep, std::ostream& os) {
  os << "instance " << rep.instance << "\n";
  os << "cone order " << rep.cone_order << "  seed " << rep.seed << "  samples " << rep.samples
     << "\n\n";

  std::vector<std::string> labels = {"", "time (s)", "safety violation", "smallest f(x) (m)",
                                     "lambda (rad)"};
  std::vector<std::vector<std::string>> cols;
  for (const auto& r : rep.constraints) {
    std::vector<std::string> col;
    col.push_back(r.name);
    col.push_back(g4(r.wall_seconds));
    if (r.verified) {
      col.push_back(std::to_string(r.violations) + "/" + std::to_string(rep.samples));
      col.push_back(g4(r.min_f));
    } else {
      col.push_back("n/a");
      col.push_back("n/a");
    }
    col.push_back(g4(r.lambda));
    cols.push_back(col);
  }

  size_t lw = 0;
  for (const auto& l : labels) lw = std::max(lw, l.size());
  std::vector<size_t> cw(cols.size(), 0);
  for (size_t c = 0; c < cols.size(); ++c)
    for (const auto& cell : cols[c]) cw[c] = std::max(cw[c], cell.size());

  for (size_t row = 0; row < labels.size(); ++row) {
    os << labels[row] << std::string(lw - labels[row].size(), ' ');
    for (size_t c = 0; c < cols.size(); ++c)
      os << "  " << cols[c][row] << std::string(cw[c] - cols[c][row].size(), ' ');
    os << "\n";
  }
  os << "\n";

  for (const auto& r : rep.constraints) {
    os << "status " << r.name << "  " << status_name(r.status)
       << (r.certified ? " certified" : " uncertified");
    if (r.backoff_count > 0) os << " (backoff " << r.backoff_count << ")";
    if (r.oracle_ran) os << "  oracle [" << g4(r.oracle_lo) << ", " << g4(r.oracle_hi) << "]";
    os << "\n";
  }
  os << "combined lambda_min " << g4(rep.lambda_min);
  if (rep.combined_verified)
    os << "  violations " << rep.combined_violations << "/" << rep.samples << "  smallest f(x) "
       << g4(rep.combined_min_f);
  os << "\n";
  if (rep.warnings.empty()) {
    os << "warnings: none\n";
  } else {
    for (const auto& w : rep.warnings) os << "warning: " << w << "\n";
  }
}

void emit_tsv(const ToleranceReport& rep, std::ostream& os) {
  os << "constraint\tlambda_rad\tstatus\tcertified\tbackoff_rounds\tmin_eigenvalue\titerations"
     << "\ttime_s\tviolations\tmin_f_m\tbound_excess\toracle_lo\toracle_hi\n";
  for (const auto& r : rep.constraints) {
    os << r.name << '\t' << g17(r.lambda) << '\t' << status_name(r.status) << '\t'
       << (r.certified ? 1 : 0) << '\t' << r.backoff_count << '\t' << g17(r.min_eigenvalue)
       << '\t' << r.iterations << '\t' << g17(r.wall_seconds) << '\t'
       << (r.verified ? std::to_string(r.violations) : std::string("n/a")) << '\t'
       << (r.verified ? g17(r.min_f) : std::string("n/a")) << '\t'
       << (r.verified ? g17(r.bound_excess) : std::string("n/a")) << '\t'
       << (r.oracle_ran ? g17(r.oracle_lo) : std::string("n/a")) << '\t'
       << (r.oracle_ran ? g17(r.oracle_hi) : std::string("n/a")) << '\n';
  }
  os << "combined\t" << g17(rep.lambda_min) << "\t-\t" << (rep.all_failed ? 0 : 1) << "\t0\t0\t0\t0\t"
     << (rep.combined_verified ? std::to_string(rep.combined_violations) : std::string("n/a"))
     << '\t' << (rep.combined_verified ? g17(rep.combined_min_f) : std::string("n/a"))
     << "\tn/a\tn/a\tn/a\n";
}

void emit_json(const ToleranceReport& rep, std::ostream& os) {
  json doc;
  doc["instance"] = rep.instance;
  doc["cone_order"] = rep.cone_order;
  doc["seed"] = rep.seed;
  doc["samples"] = rep.samples;
  doc["lambda_min"] = rep.lambda_min;
  doc["all_failed"] = rep.all_failed;
  if (rep.combined_verified) {
    doc["combined"] = {{"violations", rep.combined_violations}, {"min_f", rep.combined_min_f}};
  }
  doc["constraints"] = json::array();
  for (const auto& r : rep.constraints) {
    json jc;
    jc["name"] = r.name;
    jc["lambda_rad"] = r.lambda;
    jc["status"] = status_name(r.status);
    jc["certified"] = r.certified;
    jc["backoff_rounds"] = r.backoff_count;
    jc["min_eigenvalue"] = r.min_eigenvalue;
    jc["iterations"] = r.iterations;
    jc["time_s"] = r.wall_seconds;
    if (r.verified) {
      jc["violations"] = r.violations;
      jc["min_f_m"] = r.min_f;
      jc["bound_excess"] = r.bound_excess;
    }
    if (r.oracle_ran) jc["oracle"] = {{"lo", r.oracle_lo}, {"hi", r.oracle_hi}};
    doc["constraints"].push_back(jc);
  }
  doc["warnings"] = rep.warnings;
  os << doc.dump(2) << "\n";
}

}  // namespace

void emit_report(const ToleranceReport& report, ReportFormat format, std::ostream& os) {
  switch (format) {
    case ReportFormat::text_table: emit_text_table(report, os); break;
    case ReportFormat::tsv: emit_tsv(report, os); break;
    case ReportFormat::json_doc: emit_json(report, os); break;
  }
}

int report_exit_code(const ToleranceReport& report) {
  if (report.all_failed) return 3;
  if (!report.warnings.empty()) return 2;
  return 0;
}

}  // namespace jte
