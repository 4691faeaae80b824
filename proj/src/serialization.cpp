#include "ltviqc/serialization.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace ltviqc {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

Json matrix_to_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd matrix_from_json(const Json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return MatrixXd(0, 0);
  if (!j[0].is_array()) throw FormatError(what + ": expected an array of rows");
  const auto cols = static_cast<Eigen::Index>(j[0].size());
  MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      throw FormatError(what + ": ragged matrix");
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      const Json& v = row[static_cast<std::size_t>(c)];
      if (!v.is_number()) throw FormatError(what + ": non-numeric entry");
      m(i, c) = v.get<double>();
    }
  }
  return m;
}

namespace {

Json grid_to_json(const Grid& g) {
  Json a = Json::array();
  for (double t : g.points()) a.push_back(t);
  return a;
}

Grid grid_from_json(const Json& j) {
  if (!j.is_array()) throw FormatError("grid: expected an array of times");
  std::vector<double> t;
  t.reserve(j.size());
  for (const auto& v : j) {
    if (!v.is_number()) throw FormatError("grid: non-numeric time");
    t.push_back(v.get<double>());
  }
  try {
    return Grid(std::move(t));
  } catch (const std::exception& e) {
    throw FormatError(std::string("grid: ") + e.what());
  }
}

Json samples_to_json(const Schedule& s) {
  Json a = Json::array();
  for (const auto& m : s.samples()) a.push_back(matrix_to_json(m));
  return a;
}

Schedule samples_from_json(const Grid& grid, const Json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected one matrix per grid point");
  if (j.size() != grid.size()) {
    throw FormatError(what + ": has " + std::to_string(j.size()) + " samples for " +
                      std::to_string(grid.size()) + " grid points");
  }
  std::vector<MatrixXd> samples;
  samples.reserve(j.size());
  for (const auto& m : j) samples.push_back(matrix_from_json(m, what));
  try {
    return Schedule(grid, std::move(samples));
  } catch (const std::exception& e) {
    throw FormatError(what + ": " + e.what());
  }
}

const Json& field(const Json& j, const char* key, const std::string& where) {
  if (!j.is_object() || !j.contains(key)) throw FormatError(where + ": missing \"" + key + "\"");
  return j.at(key);
}

}  // namespace

Json schedule_to_json(const Schedule& s) {
  return {{"grid", grid_to_json(s.grid())}, {"rows", s.rows()}, {"cols", s.cols()}, {"samples", samples_to_json(s)}};
}

Schedule schedule_from_json(const Json& j, const std::string& what) {
  const Grid g = grid_from_json(field(j, "grid", what));
  return samples_from_json(g, field(j, "samples", what), what);
}

Json iqc_to_json(const Iqc& iqc) {
  return {{"label", iqc.label()}, {"n_v", iqc.n_v()}, {"n_w", iqc.n_w()}, {"M", matrix_to_json(iqc.M())}};
}

Iqc iqc_from_json(const Json& j) {
  try {
    const std::string label = j.value("label", std::string{});
    const auto n_v = field(j, "n_v", "iqc").get<Eigen::Index>();
    const auto n_w = field(j, "n_w", "iqc").get<Eigen::Index>();
    return Iqc(matrix_from_json(field(j, "M", "iqc"), "iqc M"), n_v, n_w, label);
  } catch (const Json::exception& e) {
    throw FormatError(std::string("iqc: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("iqc: ") + e.what());
  }
}

Json ltv_to_json(const LtvSystem& sys, const Schedule& vbar) {
  return {{"grid", grid_to_json(sys.grid())},   {"A", samples_to_json(sys.A())},
          {"B", samples_to_json(sys.B())},      {"Cv", samples_to_json(sys.Cv())},
          {"Dvw", samples_to_json(sys.Dvw())},  {"Ce", samples_to_json(sys.Ce())},
          {"Dew", samples_to_json(sys.Dew())},  {"vbar", samples_to_json(vbar)}};
}

Json augmented_to_json(const AugmentedLtv& ga) {
  return {{"grid", grid_to_json(ga.grid())},   {"Aa", samples_to_json(ga.Aa())},
          {"Ba", samples_to_json(ga.Ba())},    {"Cva", samples_to_json(ga.Cva())},
          {"Cea", samples_to_json(ga.Cea())},  {"Dvw", samples_to_json(ga.Dvw())},
          {"Dew", samples_to_json(ga.Dew())}};
}

Json problem_to_json(const AnalysisProblem& problem) {
  Json iqcs = Json::array();
  for (const auto& q : problem.iqcs) iqcs.push_back(iqc_to_json(q));
  return {{"format", "ltviqc-problem"}, {"version", 1}, {"system", augmented_to_json(problem.system)},
          {"iqcs", std::move(iqcs)}};
}

AnalysisProblem problem_from_json(const Json& j) {
  if (!j.is_object()) throw FormatError("problem: expected an object");
  if (j.contains("format") && j.at("format") != "ltviqc-problem") {
    throw FormatError("problem: unknown format " + j.at("format").dump());
  }
  if (j.contains("version") && j.at("version") != 1) {
    throw FormatError("problem: unsupported version " + j.at("version").dump());
  }
  const Json& s = field(j, "system", "problem");
  const Grid grid = grid_from_json(field(s, "grid", "system"));
  auto sched = [&](const char* key) { return samples_from_json(grid, field(s, key, "system"), key); };

  std::vector<Iqc> iqcs;
  const Json& jq = field(j, "iqcs", "problem");
  if (!jq.is_array()) throw FormatError("problem: \"iqcs\" must be an array");
  if (jq.empty()) throw FormatError("problem: \"iqcs\" is empty");
  for (const auto& q : jq) iqcs.push_back(iqc_from_json(q));

  try {
    if (s.contains("Aa")) {
      AugmentedLtv ga(sched("Aa"), sched("Ba"), sched("Cva"), sched("Cea"), sched("Dvw"), sched("Dew"));
      return make_problem(std::move(ga), std::move(iqcs));
    }
    LtvSystem sys(sched("A"), sched("B"), sched("Cv"), sched("Dvw"), sched("Ce"), sched("Dew"));
    return make_problem(augment(sys, sched("vbar")), std::move(iqcs));
  } catch (const FormatError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("problem: ") + e.what());
  }
}

AnalysisProblem load_problem(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return problem_from_json(j);
}

void save_problem(const std::filesystem::path& path, const AnalysisProblem& problem) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << problem_to_json(problem).dump() << '\n';
}

Json riccati_to_json(const RdeOutcome& outcome) {
  const Eigen::Index n = outcome.n;
  Json grid = Json::array(), samples = Json::array();
  for (std::size_t i = 0; i < outcome.trajectory.size(); ++i) {
    grid.push_back(outcome.trajectory.times()[i]);
    samples.push_back(matrix_to_json(Eigen::Map<const MatrixXd>(outcome.trajectory.values()[i].data(), n, n)));
  }
  return {{"grid", std::move(grid)}, {"rows", n}, {"cols", n}, {"samples", std::move(samples)}};
}

void write_iteration_csv(std::ostream& out, const std::vector<IterationRecord>& log) {
  const Eigen::Index m = log.empty() ? 0 : log.front().lambda.size();
  out << "k";
  for (Eigen::Index i = 0; i < m; ++i) out << ",lambda_" << (i + 1);
  out << ",J,kind,gap,elapsed\n";
  for (const auto& r : log) {
    out << r.k;
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(r.lambda(i));
    out << ',' << format_double(r.J) << ',' << to_string(r.kind) << ',' << format_double(r.gap) << ','
        << format_double(r.elapsed) << '\n';
  }
}

void write_witness_csv(std::ostream& out, const Witness& witness) {
  const Eigen::Index n = witness.state.empty() ? 0 : witness.state.front().size();
  const Eigen::Index nw = witness.disturbance.empty() ? 0 : witness.disturbance.front().size();
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) out << ",x_" << (i + 1);
  for (Eigen::Index i = 0; i < nw; ++i) out << ",w_" << (i + 1);
  out << '\n';
  for (std::size_t k = 0; k < witness.times.size(); ++k) {
    out << format_double(witness.times[k]);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << format_double(witness.state[k](i));
    for (Eigen::Index i = 0; i < nw; ++i) out << ',' << format_double(witness.disturbance[k](i));
    out << '\n';
  }
}

void write_riccati_csv(std::ostream& out, const RdeOutcome& outcome) {
  const Eigen::Index n = outcome.n;
  out << "t";
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) out << ",Y_" << (i + 1) << '_' << (j + 1);
  }
  out << '\n';
  for (std::size_t k = 0; k < outcome.trajectory.size(); ++k) {
    const Eigen::Map<const MatrixXd> Y(outcome.trajectory.values()[k].data(), n, n);
    out << format_double(outcome.trajectory.times()[k]);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) out << ',' << format_double(Y(i, j));
    }
    out << '\n';
  }
}

}  // namespace ltviqc
