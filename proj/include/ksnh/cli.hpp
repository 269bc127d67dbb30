#pragma once

#include <iosfwd>
#include <random>
#include <vector>

#include "ksnh/model.hpp"

namespace ksnh {

// Exit codes of the command-line tool.
enum ExitCode { kPass = 0, kCheckFailed = 1, kInputError = 2, kNumericalFailure = 3 };

// Newton projection of uniform seeds in [-1, 1] onto Phi = 0; throws NumericalError when too few converge.
std::vector<FieldPoint> sample_feasible(const Model& model, std::mt19937_64& rng, int count, double tol_feas);

// Runs the tool with argv[0] ignored. Reports go to out, diagnostics to err.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ksnh
