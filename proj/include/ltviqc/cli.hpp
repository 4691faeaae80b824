#pragma once

#include <filesystem>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "ltviqc/ellipsoid.hpp"
#include "ltviqc/lintime.hpp"
#include "ltviqc/serialization.hpp"

namespace ltviqc::cli {

enum ExitCode : int {
  kOk = 0,
  kBadInput = 1,
  kNotCertified = 2,
  kEscaped = 3,
};

/// "x" or "start:stop:step"; stop is included when it lands on the grid within 1e-12.
std::vector<double> parse_sweep(const std::string& text);

/// Comma-separated list of numbers.
std::vector<double> parse_list(const std::string& text);

struct SolverConfig {
  double gap = 0.01;
  double radius = 20.0;
  int max_iter = 0;  // 0: 500 m
  double bisection_upper = 10.0;
  double rtol = 1e-8;
  double atol = 1e-10;
};

struct AnalysisConfig {
  std::string problem_path;
  std::string benchmark;  // "robot2link" or "scalar"
  std::string structure = "full";
  std::string beta, beta1, beta2;
  SolverConfig solver;
  std::filesystem::path out = ".";
  unsigned jobs = 1;
  bool dump_y = false;
  std::string lambda;
};

struct Instance {
  std::string key;          // zero-padded position in the sweep
  std::string description;
  std::function<AnalysisProblem()> build;
};

/// One instance per problem file or per sweep point; throws std::invalid_argument
/// on an inconsistent configuration.
std::vector<Instance> expand_instances(const AnalysisConfig& config);

AnalysisOptions analysis_options(const SolverConfig& solver);

Json result_to_json(const Instance& instance, const MinimizeResult& result);

int cmd_analyze(const AnalysisConfig& config, std::ostream& out, std::ostream& err);
int cmd_rde(const AnalysisConfig& config, std::ostream& out, std::ostream& err);
int cmd_export(const AnalysisConfig& config, std::ostream& out, std::ostream& err);

/// Parses the command line and dispatches to a subcommand.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ltviqc::cli
