#include "ltviqc/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "ltviqc/robot2link.hpp"

namespace ltviqc::cli {

namespace {

double parse_number(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("not a number: '" + s + "'");
  }
  if (used != s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

/// Drops the binary noise of start + k * step by a round trip through 12 significant digits.
double tidy(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::stod(buf);
}

}  // namespace

std::vector<double> parse_sweep(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
  if (parts.size() == 1) return {parse_number(parts[0])};
  if (parts.size() != 3) throw std::invalid_argument("sweep must be 'value' or 'start:stop:step': " + text);
  const double start = parse_number(parts[0]);
  const double stop = parse_number(parts[1]);
  const double step = parse_number(parts[2]);
  if (!(step > 0.0)) throw std::invalid_argument("sweep step must be positive: " + text);
  if (stop < start) throw std::invalid_argument("sweep stop is below start: " + text);
  const double slack = 1e-12 * std::max(1.0, std::abs(stop));
  std::vector<double> values;
  for (long k = 0;; ++k) {
    const double v = start + static_cast<double>(k) * step;
    if (v > stop + slack) break;
    values.push_back(std::abs(v - stop) <= slack ? stop : tidy(v));
    if (values.size() > 100000) throw std::invalid_argument("sweep has too many points: " + text);
  }
  return values;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) values.push_back(parse_number(item));
  if (values.empty()) throw std::invalid_argument("empty list");
  return values;
}

AnalysisOptions analysis_options(const SolverConfig& solver) {
  AnalysisOptions o;
  o.ellipsoid.radius = solver.radius;
  o.ellipsoid.gap_tol = solver.gap;
  o.ellipsoid.relative_gap = true;
  o.ellipsoid.max_iter = solver.max_iter;
  o.bisection_upper = solver.bisection_upper;
  o.rde.rtol = solver.rtol;
  o.rde.atol = solver.atol;
  return o;
}

std::vector<Instance> expand_instances(const AnalysisConfig& config) {
  const SolverConfig& s = config.solver;
  if (!(s.gap > 0.0)) throw std::invalid_argument("--gap must be positive");
  if (!(s.radius > 0.0)) throw std::invalid_argument("--radius must be positive");
  if (!(s.rtol > 0.0) || !(s.atol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (s.max_iter < 0) throw std::invalid_argument("--max-iter must be nonnegative");
  if (config.jobs == 0) throw std::invalid_argument("--jobs must be at least 1");

  const bool from_file = !config.problem_path.empty();
  if (from_file == !config.benchmark.empty()) {
    throw std::invalid_argument("give exactly one of --problem and --benchmark");
  }
  std::vector<Instance> out;
  auto add = [&out](std::string description, std::function<AnalysisProblem()> build) {
    char key[16];
    std::snprintf(key, sizeof key, "%03zu", out.size());
    out.push_back({key, std::move(description), std::move(build)});
  };
  auto betas = [](const std::string& text, const char* flag) {
    if (text.empty()) throw std::invalid_argument(std::string(flag) + " is required");
    std::vector<double> v = parse_sweep(text);
    for (double b : v) {
      if (!(b > 0.0) || !std::isfinite(b)) throw std::invalid_argument(std::string(flag) + " values must be positive");
    }
    return v;
  };
  auto label = [](const char* name, double v) { return std::string(name) + '=' + format_double(v); };

  if (from_file) {
    const std::string path = config.problem_path;
    add(path, [path] { return load_problem(path); });
    return out;
  }
  if (config.benchmark == "scalar") {
    const std::vector<double> bs = config.beta.empty() ? std::vector<double>{0.5} : betas(config.beta, "--beta");
    for (double b : bs) add("scalar " + label("beta", b), [b] { return scalar_benchmark(b); });
    return out;
  }
  if (config.benchmark != "robot2link") throw std::invalid_argument("unknown benchmark '" + config.benchmark + "'");

  robot::RobotProblemOptions ro;
  ro.rde.rtol = s.rtol;
  ro.rde.atol = s.atol;
  using robot::UncertaintyStructure;
  auto robot_instance = [&](UncertaintyStructure u) {
    add("robot2link " + robot::describe(u), [u, ro] { return robot::build_analysis_problem(u, ro); });
  };
  const std::string& st = config.structure;
  if (st == "full" || st == "ch1" || st == "ch2") {
    for (double b : betas(config.beta, "--beta")) {
      if (st == "full") robot_instance(robot::FullBlock{b});
      if (st == "ch1") robot_instance(robot::Channel1{b});
      if (st == "ch2") robot_instance(robot::Channel2{b});
    }
  } else if (st == "diagonal") {
    for (double b1 : betas(config.beta1, "--beta1")) {
      for (double b2 : betas(config.beta2, "--beta2")) robot_instance(robot::Diagonal{b1, b2});
    }
  } else {
    throw std::invalid_argument("unknown structure '" + st + "'");
  }
  return out;
}

Json result_to_json(const Instance& instance, const MinimizeResult& r) {
  Json lambda = Json::array();
  for (Eigen::Index i = 0; i < r.lambda.size(); ++i) lambda.push_back(r.lambda(i));
  const bool finite = std::isfinite(r.J);
  return {{"key", instance.key},
          {"description", instance.description},
          {"status", std::string(to_string(r.status))},
          {"lambda", std::move(lambda)},
          {"J", finite ? Json(r.J) : Json(nullptr)},
          {"sqrtJ", finite ? Json(std::sqrt(std::max(0.0, r.J))) : Json(nullptr)},
          {"gap", std::isfinite(r.gap) ? Json(r.gap) : Json(nullptr)},
          {"iterations", r.iterations},
          {"wall_time", r.wall_time},
          {"warnings", r.warnings}};
}

namespace {

std::filesystem::path per_instance(const std::filesystem::path& dir, const std::string& stem,
                                   const std::string& key, bool single, const char* ext) {
  return dir / (single ? stem + ext : stem + "_" + key + ext);
}

template <typename Fn>
void write_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  fn(f);
}

struct Outcome {
  std::optional<MinimizeResult> result;
  std::string error;
};

}  // namespace

int cmd_analyze(const AnalysisConfig& config, std::ostream& out, std::ostream& err) {
  std::vector<Instance> instances;
  try {
    instances = expand_instances(config);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  const AnalysisOptions opts = analysis_options(config.solver);

  // Malformed problem files are input errors, reported before any work starts.
  std::vector<std::optional<AnalysisProblem>> preloaded(instances.size());
  if (!config.problem_path.empty()) {
    try {
      preloaded[0] = instances[0].build();
    } catch (const std::exception& e) {
      err << "error: " << e.what() << '\n';
      return kBadInput;
    }
  }

  std::vector<Outcome> outcomes(instances.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      try {
        const AnalysisProblem problem = preloaded[i] ? std::move(*preloaded[i]) : instances[i].build();
        outcomes[i].result = optimize_multipliers(problem, opts);
      } catch (const std::exception& e) {
        outcomes[i].error = e.what();
      }
    }
  };
  const unsigned jobs = std::min<unsigned>(config.jobs, static_cast<unsigned>(instances.size()));
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned k = 0; k < jobs; ++k) pool.emplace_back(worker);
  }

  try {
    std::filesystem::create_directories(config.out);
    const bool single = instances.size() == 1;
    Json rows = Json::array();
    bool all_certified = true;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      const Instance& inst = instances[i];
      const Outcome& o = outcomes[i];
      if (!o.result) {
        all_certified = false;
        rows.push_back({{"key", inst.key}, {"description", inst.description}, {"status", "error"}, {"error", o.error}});
        out << inst.key << "  " << inst.description << "  error: " << o.error << '\n';
        continue;
      }
      const MinimizeResult& r = *o.result;
      all_certified = all_certified && r.converged();
      rows.push_back(result_to_json(inst, r));
      write_file(per_instance(config.out, "iterations", inst.key, single, ".csv"),
                 [&](std::ostream& f) { write_iteration_csv(f, r.log); });
      if (r.witness) {
        write_file(per_instance(config.out, "witness", inst.key, single, ".csv"),
                   [&](std::ostream& f) { write_witness_csv(f, *r.witness); });
      }
      out << inst.key << "  " << inst.description << "  " << to_string(r.status)
          << "  sqrtJ=" << format_double(std::sqrt(r.J)) << "  iterations=" << r.iterations << '\n';
      for (const auto& w : r.warnings) err << "warning [" << inst.key << "]: " << w << '\n';
    }
    write_file(config.out / "results.json", [&](std::ostream& f) { f << Json{{"results", rows}}.dump(2) << '\n'; });
    return all_certified ? kOk : kNotCertified;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
}

int cmd_rde(const AnalysisConfig& config, std::ostream& out, std::ostream& err) {
  AnalysisProblem* problem = nullptr;
  std::optional<AnalysisProblem> holder;
  VectorXd lambda;
  try {
    std::vector<Instance> instances = expand_instances(config);
    if (instances.size() != 1) throw std::invalid_argument("rde takes a single problem, not a sweep");
    if (config.lambda.empty()) throw std::invalid_argument("--lambda is required");
    holder = instances[0].build();
    problem = &*holder;
    const std::vector<double> l = parse_list(config.lambda);
    lambda = Eigen::Map<const VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()));
    if (lambda.size() != static_cast<Eigen::Index>(problem->qsr.multiplier_count())) {
      throw std::invalid_argument("--lambda needs " + std::to_string(problem->qsr.multiplier_count()) + " entries");
    }
    if (!lambda.allFinite() || lambda.minCoeff() < 0.0) throw std::invalid_argument("--lambda entries must be nonnegative");
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }

  const AnalysisOptions opts = analysis_options(config.solver);
  if (auto v = check_r_negdef(problem->qsr, lambda, opts.rde.r_tolerance)) {
    err << "error: R(t, lambda) is not negative definite at t = " << format_double(v->time) << '\n';
    return kBadInput;
  }
  try {
    const Eigen::Index n = problem->system.state_size();
    const RdeOutcome sol =
        solve_rde_backward(problem->system, problem->qsr, lambda, MatrixXd::Zero(n, n), std::nullopt, opts.rde);
    std::filesystem::create_directories(config.out);
    Json lj = Json::array();
    for (Eigen::Index i = 0; i < lambda.size(); ++i) lj.push_back(lambda(i));
    Json result{{"lambda", lj}, {"status", sol.solved() ? "solved" : "escaped"}};
    if (sol.solved()) {
      const double J = eval_j(sol);
      result["J"] = J;
      result["sqrtJ"] = std::sqrt(std::max(0.0, J));
      out << "J=" << format_double(J) << "  sqrtJ=" << format_double(std::sqrt(std::max(0.0, J))) << '\n';
    } else {
      result["J"] = nullptr;
      result["t_escape"] = sol.t_escape;
      out << "escaped at t=" << format_double(sol.t_escape) << '\n';
    }
    write_file(config.out / "rde.json", [&](std::ostream& f) { f << result.dump(2) << '\n'; });
    if (config.dump_y) {
      write_file(config.out / "Y.json", [&](std::ostream& f) { f << riccati_to_json(sol).dump() << '\n'; });
      write_file(config.out / "Y.csv", [&](std::ostream& f) { write_riccati_csv(f, sol); });
    }
    return sol.solved() ? kOk : kEscaped;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kNotCertified;
  }
}

int cmd_export(const AnalysisConfig& config, std::ostream& out, std::ostream& err) {
  try {
    std::vector<Instance> instances = expand_instances(config);
    std::filesystem::create_directories(config.out);
    const bool single = instances.size() == 1;
    for (const auto& inst : instances) {
      const auto path = per_instance(config.out, "problem", inst.key, single, ".json");
      save_problem(path, inst.build());
      out << path.string() << '\n';
    }
    return kOk;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Worst-case bounds for uncertain systems along trajectories via time-domain IQCs"};
  app.require_subcommand(1);
  AnalysisConfig cfg;

  auto common = [&cfg](CLI::App* sub) {
    sub->add_option("--problem", cfg.problem_path, "Problem JSON file");
    sub->add_option("--benchmark", cfg.benchmark, "Builtin problem")->check(CLI::IsMember({"robot2link", "scalar"}));
    sub->add_option("--structure", cfg.structure, "Robot uncertainty structure")
        ->check(CLI::IsMember({"full", "ch1", "ch2", "diagonal"}));
    sub->add_option("--beta", cfg.beta, "Uncertainty level or start:stop:step sweep");
    sub->add_option("--beta1", cfg.beta1, "Channel 1 level (diagonal)");
    sub->add_option("--beta2", cfg.beta2, "Channel 2 level (diagonal)");
    sub->add_option("--rtol", cfg.solver.rtol, "Integrator relative tolerance");
    sub->add_option("--atol", cfg.solver.atol, "Integrator absolute tolerance");
    sub->add_option("--out", cfg.out, "Output directory");
  };

  CLI::App* analyze = app.add_subcommand("analyze", "Minimize the bound over the IQC multipliers");
  common(analyze);
  analyze->add_option("--gap", cfg.solver.gap, "Relative optimality gap");
  analyze->add_option("--radius", cfg.solver.radius, "Initial ellipsoid radius");
  analyze->add_option("--lambda-max", cfg.solver.bisection_upper, "Upper end of the bisection interval");
  analyze->add_option("--max-iter", cfg.solver.max_iter, "Iteration limit (0: 500 per multiplier)");
  analyze->add_option("--jobs", cfg.jobs, "Concurrent sweep instances");

  CLI::App* rde = app.add_subcommand("rde", "Solve the Riccati equation at a fixed multiplier");
  common(rde);
  rde->add_option("--lambda", cfg.lambda, "Comma-separated multipliers")->required();
  rde->add_flag("--dump-y", cfg.dump_y, "Write Y(t) to Y.json and Y.csv");

  CLI::App* exp = app.add_subcommand("export", "Write the analysis problem as JSON");
  common(exp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kBadInput;
  }
  if (analyze->parsed()) return cmd_analyze(cfg, out, err);
  if (rde->parsed()) return cmd_rde(cfg, out, err);
  return cmd_export(cfg, out, err);
}

}  // namespace ltviqc::cli
