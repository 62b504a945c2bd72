#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace das::cli {

enum ExitCode : int {
  kOk = 0,
  kUsageError = 1,
  kDataError = 2,
  kNumericalFailure = 3,
};

struct GradCheckLine {
  std::string component;
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  bool passed = false;
  // Coordinate with the largest relative error.
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckOptions {
  std::uint64_t seed = 1;
  std::size_t vocab = 20;
  std::size_t embed_dim = 4;
  std::size_t hidden = 6;
  std::size_t classes = 3;
  std::size_t documents = 4;
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Test hook: routes features through an op whose backward is wrong.
  bool corrupt_gradient = false;
};

/// Checks L, J, Γ, Ω, MMD and the composed total on a random toy batch
/// against central differences, with respect to every model parameter.
std::vector<GradCheckLine> run_gradcheck(const GradCheckOptions& options);

/// Entry point shared by the `das` binary and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace das::cli
