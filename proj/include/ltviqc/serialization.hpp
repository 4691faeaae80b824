#pragma once

#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltviqc/ellipsoid.hpp"
#include "ltviqc/lintime.hpp"
#include "ltviqc/rde.hpp"
#include "ltviqc/worstcase.hpp"

namespace ltviqc {

using Json = nlohmann::json;

/// Malformed or unreadable serialized data.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shortest decimal form that reads back to the same double; "inf", "-inf", "nan" otherwise.
std::string format_double(double x);

Json matrix_to_json(const MatrixXd& m);
MatrixXd matrix_from_json(const Json& j, const std::string& what);

/// {"grid": [...], "rows": r, "cols": c, "samples": [matrix per grid point]}
Json schedule_to_json(const Schedule& s);
Schedule schedule_from_json(const Json& j, const std::string& what);

Json iqc_to_json(const Iqc& iqc);
Iqc iqc_from_json(const Json& j);

/// {"grid": [...], "A": [...], "B": ..., "Cv", "Dvw", "Ce", "Dew", "vbar"}
Json ltv_to_json(const LtvSystem& sys, const Schedule& vbar);
/// {"grid": [...], "Aa": [...], "Ba", "Cva", "Cea", "Dvw", "Dew"}
Json augmented_to_json(const AugmentedLtv& ga);

/// {"format": "ltviqc-problem", "version": 1, "system": {...}, "iqcs": [...]}.
/// The system object is either augmented (Aa, Ba, ...) or plain (A, B, ..., vbar),
/// the latter being augmented when read.
Json problem_to_json(const AnalysisProblem& problem);
AnalysisProblem problem_from_json(const Json& j);

AnalysisProblem load_problem(const std::filesystem::path& path);
void save_problem(const std::filesystem::path& path, const AnalysisProblem& problem);

/// Y(t) on the solver's output points, in the schedule layout.
Json riccati_to_json(const RdeOutcome& outcome);

void write_iteration_csv(std::ostream& out, const std::vector<IterationRecord>& log);
void write_witness_csv(std::ostream& out, const Witness& witness);
/// t, then Y entries row-major.
void write_riccati_csv(std::ostream& out, const RdeOutcome& outcome);

}  // namespace ltviqc
