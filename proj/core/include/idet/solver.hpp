// SPDX-License-Identifier: Apache-2.0
//
// Alternating fractional-programming optimizers: fair- and sum-throughput
// for the SISO downlink (power allocation + splitting ratios) and for the
// MISO downlink (beamformers + splitting ratios), plus the MISO feasibility
// initialization that maximizes the worst-case harvested-power margin.
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "idet/fp.hpp"
#include "idet/types.hpp"

namespace idet::opt {

enum class SolveStatus { converged, max_iter, infeasible };
const char* to_string(SolveStatus s);

struct SolveReport {
  ResourceAllocation allocation;
  double objective = 0.0;  // bit/s
  ObjectiveKind objective_kind = ObjectiveKind::fair;
  std::vector<double> objective_trace;  // value after each outer iteration
  std::map<std::string, double> feasibility_residuals;
  int iterations = 0;  // outer alternating iterations
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  SolveStatus status = SolveStatus::infeasible;

  std::string to_json_string() const;
};

struct MisoSolveReport {
  ResourceAllocation allocation;  // beamformers, envelope powers, rho
  double objective = 0.0;
  ObjectiveKind objective_kind = ObjectiveKind::fair;
  std::vector<double> objective_trace;
  double stationarity_residual = 0.0;
  std::map<std::string, double> feasibility_residuals;
  int iterations = 0;
  std::uint64_t seed = 0;
  double wall_time_s = 0.0;
  SolveStatus status = SolveStatus::infeasible;

  std::string to_json_string() const;
};

/// Output of the receive-power maximization (feasibility initialization).
struct MisoInit {
  bool feasible = false;
  ResourceAllocation allocation;  // W0 with rho = 1
  fp::SurrogateState psi;         // psi_eh aligned with W0
  std::vector<double> margin_trace;  // min_j (P_EH bound - threshold)
  int iterations = 0;
};

/// Fair-throughput SISO solve: alternates the power block, the splitting
/// block and the closed-form psi update until the fair surrogate moves by
/// less than the configured tolerance.
SolveReport solve_fair_siso(const SystemParams& params,
                            const ChannelSet& channels,
                            std::uint64_t seed = 0);

SolveReport solve_sum_siso(const SystemParams& params,
                           const ChannelSet& channels, std::uint64_t seed = 0);

/// Alternating receive-power maximization; returns beamformers meeting every
/// DC threshold at rho = 1, or infeasible when the max-min margin stays
/// negative.
MisoInit init_feasible_miso(const SystemParams& params,
                            const ChannelSet& channels);

MisoSolveReport solve_fair_miso(const SystemParams& params,
                                const ChannelSet& channels,
                                std::uint64_t seed = 0);

MisoSolveReport solve_sum_miso(const SystemParams& params,
                               const ChannelSet& channels,
                               std::uint64_t seed = 0);

/// Finite throughput cap for user j: B/(N+L-1) sum_k log2(1 + N^2 ||H_{j,k}||^2 P_tx / sigma_cov^2).
double throughput_upper_bound(const SystemParams& params,
                              const ChannelSet& channels, int j);

}  // namespace idet::opt
