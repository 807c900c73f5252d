// SPDX-License-Identifier: Apache-2.0
//
// Quadratic-transform surrogates for the four objective families and the
// closed-form auxiliary-variable updates that make each surrogate tight.
#pragma once

#include "idet/types.hpp"

namespace idet::fp {

/// Auxiliary-variable state of one alternating optimization.
///
/// psi_siso is real per (j,k). The MISO energy variable is refined per
/// (j,k,j') so that the reformulated harvested power can reach its bound
/// exactly; psi_eh_star() exposes the j' = j element of that family.
struct SurrogateState {
  std::vector<std::vector<double>> psi_siso;               // [j][k]
  std::vector<std::vector<cdouble>> psi_id;                // [j][k]
  std::vector<std::vector<std::vector<cdouble>>> psi_eh;   // [j][k][j']

  static SurrogateState ones_siso(int n_receivers, int n_subcarriers);
  static SurrogateState ones_miso(int n_receivers, int n_subcarriers);
};

/// Surrogate SINR: 2*psi*|H|*sqrt((1-rho)*N*p) - psi^2 * denominator.
/// May be negative for a poor psi.
double gamma_tilde_siso(const SystemParams& params, const ChannelSet& channels,
                        const ResourceAllocation& alloc,
                        const SurrogateState& state, int j, int k);

/// Surrogate throughput B/(N+L-1) * sum_k log2(1 + gamma_tilde). Throws
/// SurrogateDomainError when gamma_tilde <= -1 on any subcarrier.
double r_tilde_siso(const SystemParams& params, const ChannelSet& channels,
                    const ResourceAllocation& alloc,
                    const SurrogateState& state, int j);

/// Closed-form maximizer of gamma_tilde over psi. Evaluating the surrogate
/// there recovers the true SINR exactly.
double psi_star_siso(const SystemParams& params, const ChannelSet& channels,
                     const ResourceAllocation& alloc, int j, int k);

/// MISO surrogate throughput with the subcarrier sum restored.
double r_hat_miso(const SystemParams& params, const ChannelSet& channels,
                  const ResourceAllocation& alloc, const SurrogateState& state,
                  int j);

/// Reformulated harvested-power bound; affine in the beamformers at fixed
/// psi_eh and tight at the psi_eh_star family.
double p_hat_eh_miso(const SystemParams& params, const ChannelSet& channels,
                     const ResourceAllocation& alloc,
                     const SurrogateState& state, int j);

/// psi_eh* = H_{j,k} . W_{j,k}.
cdouble psi_eh_star(const ChannelSet& channels, const ResourceAllocation& alloc,
                    int j, int k);

/// psi_id* = sqrt(N(1-rho)) H.W / (N(1-rho) interference + noise terms).
cdouble psi_id_star(const SystemParams& params, const ChannelSet& channels,
                    const ResourceAllocation& alloc, int j, int k);

/// Sets psi_siso to psi_star on every (j, k).
void update_psi_siso(const SystemParams& params, const ChannelSet& channels,
                     const ResourceAllocation& alloc, SurrogateState& state);

/// Sets psi_eh[j][k][j'] = H_{j,k}.W_{j',k} and psi_id to psi_id_star.
void update_psi_eh_miso(const ChannelSet& channels,
                        const ResourceAllocation& alloc, SurrogateState& state);
void update_psi_id_miso(const SystemParams& params, const ChannelSet& channels,
                        const ResourceAllocation& alloc, SurrogateState& state);

}  // namespace idet::fp
