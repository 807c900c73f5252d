// SPDX-License-Identifier: Apache-2.0
//
// Builders for the concave block subproblems handed to the interior-point
// kernel: the power and splitting blocks of the SISO solvers, and the
// beamformer, splitting and feasibility-margin blocks of the MISO solvers.
// Each builder freezes the complementary variables and the surrogate state
// into coefficient tables and exposes analytic gradients.
//
// Coordinate layouts:
//   power block      x[j*N + k] = p_{j,k}
//   split block      x[j] = rho_j
//   beam block       x[(j*N + k)*2M + 2m] = Re W_{j,k,m}, ... + 1 = Im
// Fair (and margin) blocks append the epigraph variable t as the last
// coordinate; `t_index` is -1 for sum blocks.
#pragma once

#include "idet/fp.hpp"
#include "idet/kernel.hpp"
#include "idet/types.hpp"

namespace idet::opt::blocks {

struct BlockProgram {
  kernel::ConcaveProgram program;
  int t_index = -1;
};

/// Power block (fair or sum) at fixed splits and psi. Constraints: per-user
/// surrogate-rate epigraph (fair only), per-user harvested-power thresholds,
/// total power budget, p >= 0.
BlockProgram siso_power_block(const SystemParams& params,
                              const ChannelSet& channels,
                              const std::vector<double>& split_ratios,
                              const fp::SurrogateState& state,
                              const std::vector<double>& eh_thresholds,
                              ObjectiveKind kind, double t_bound);

/// Splitting block at fixed powers and psi; rho in [0, 1] per user.
BlockProgram siso_split_block(const SystemParams& params,
                              const ChannelSet& channels,
                              const std::vector<std::vector<double>>& powers,
                              const fp::SurrogateState& state,
                              const std::vector<double>& eh_thresholds,
                              ObjectiveKind kind, double t_bound);

/// Beamformer block at fixed splits and psi. The total-power budget is the
/// quadratic sum ||W||^2 <= N * P_tx. When `margin_objective` is set the
/// rate terms are dropped and the epigraph lower-bounds every
/// (harvested power - threshold) margin instead (the feasibility problem).
BlockProgram miso_beam_block(const SystemParams& params,
                             const ChannelSet& channels,
                             const std::vector<double>& split_ratios,
                             const fp::SurrogateState& state,
                             const std::vector<double>& eh_thresholds,
                             ObjectiveKind kind, double t_bound,
                             bool margin_objective = false);

/// Splitting block at fixed beamformers and psi.
BlockProgram miso_split_block(const SystemParams& params,
                              const ChannelSet& channels,
                              const ResourceAllocation& alloc,
                              const fp::SurrogateState& state,
                              const std::vector<double>& eh_thresholds,
                              ObjectiveKind kind, double t_bound);

}  // namespace idet::opt::blocks
