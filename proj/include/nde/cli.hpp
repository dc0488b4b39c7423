#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "nde/tolerances.hpp"

namespace nde::cli {

enum Exit { kOk = 0, kInvalidInput = 1, kDegraded = 2, kInternal = 3 };

struct RunConfig {
  double a = 2.0, b = 0.5, c = 1.0;
  long n_max = 50;
  int m_max = 10;
  int grid = 1024;
  Tolerances tol = default_tolerances();
  std::string format = "json";  // json | csv
  std::string out;              // empty: stdout
  std::uint64_t seed = 0;
  int gap = 1;
  double horizon = 25.0;
  double dt = 1.0 / 256;
  std::string phi_file;
};

// Throws InvalidInput naming the first violated invariant.
void validate(const RunConfig& cfg);

// key=value lines (with '#' comments) or a JSON object; unknown keys are rejected.
void apply_config_text(const std::string& text, RunConfig& cfg);

// Each command writes its primary output to cfg.out (or `out` when cfg.out is empty)
// and diagnostics to `err`.
int cmd_spectrum(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_gaps(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_project(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_norms(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunConfig& cfg, std::ostream& out, std::ostream& err);
int cmd_verify(const RunConfig& cfg, std::ostream& out, std::ostream& err);

int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace nde::cli
