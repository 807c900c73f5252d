// SPDX-License-Identifier: Apache-2.0
//
// Generic inner solver for the concave block subproblems: maximize a smooth
// concave objective over smooth concave->=0 constraints plus box and affine
// budget constraints. Log-barrier interior point with damped Newton steps;
// the barrier parameter follows mu <- mu/10 from mu = 1 and iteration stops
// once m * mu drops below the optimality tolerance.
#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace idet::kernel {

/// Smooth concave constraint g(x) >= 0 with an analytic gradient.
struct Constraint {
  std::string name;
  std::function<double(std::span<const double>)> value;
  // fills a dim-sized gradient
  std::function<void(std::span<const double>, std::span<double>)> gradient;
};

/// Affine budget sum_i weights[i] * x[i] <= bound.
struct LinearBudget {
  std::string name;
  std::vector<double> weights;
  double bound = 0.0;
};

/// Per-coordinate bounds; +-infinity disables a side.
struct BoxBounds {
  std::vector<double> lower;
  std::vector<double> upper;
  static BoxBounds unbounded(std::size_t dim) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {std::vector<double>(dim, -inf), std::vector<double>(dim, inf)};
  }
};

struct ConcaveProgram {
  std::size_t dim = 0;
  std::function<double(std::span<const double>)> objective;
  std::function<void(std::span<const double>, std::span<double>)>
      objective_gradient;
  std::vector<Constraint> inequalities;
  BoxBounds box;
  std::vector<LinearBudget> budgets;
};

struct SolveOptions {
  double feas_tol = 1e-8;
  double opt_tol = 1e-7;
  int max_iter = 500;  // total damped-Newton steps across barrier stages
};

enum class Status { converged, max_iter, infeasible, numeric_error };

const char* to_string(Status s);

struct KernelSolution {
  std::vector<double> x;
  double objective = 0.0;
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  Status status = Status::numeric_error;
  // objective value at the end of each barrier stage; nondecreasing for a
  // well-posed concave program
  std::vector<double> stage_objectives;
};

/// Maximizes the program from x0. Runs a max-of-slack phase-1 first when x0
/// is not strictly feasible. Deterministic for identical inputs.
KernelSolution solve(const ConcaveProgram& program, std::span<const double> x0,
                     const SolveOptions& opts = {});

/// Finds a strictly feasible point via the max-of-slack auxiliary program,
/// starting from the box center. Returns nullopt when infeasible.
std::optional<std::vector<double>> feasibility_phase1(
    const ConcaveProgram& program, const SolveOptions& opts = {});

}  // namespace idet::kernel
