// SPDX-License-Identifier: Apache-2.0
//
// Physical-layer quantities for the SISO/MISO OFDM downlink: channel DFTs,
// SINR, throughput, harvested energy and power, the diode DC model and the
// OFDM-vs-DSW transmit power scaling. Every function here is a pure
// evaluation of a closed form; the Monte Carlo counterparts live in sim.hpp.
#pragma once

#include <cstdint>

#include "idet/types.hpp"

namespace idet {

/// Scaled DFT of a tap vector: H_k = (1/sqrt(N)) sum_n h_n e^{-j2*pi*nk/N}.
/// Throws InvalidChannelError when taps is empty or longer than N.
CVec fft_channel(const CVec& taps, int n_subcarriers);

/// Unitary DFT / inverse DFT (1/sqrt(N) both ways).
CVec dft_unitary(const CVec& x);
CVec idft_unitary(const CVec& x);

/// SINR of user j on subcarrier k for a SISO allocation.
double sinr_siso(const SystemParams& params, const ChannelSet& channels,
                 const ResourceAllocation& alloc, int j, int k);

/// Throughput of user j: B/(N+L-1) * sum_k log2(1 + sinr_{j,k}).
double throughput_siso(const SystemParams& params, const ChannelSet& channels,
                       const ResourceAllocation& alloc, int j);

/// Mean energy carried by the L-1 cyclic-prefix samples of one block,
/// evaluated at the full per-symbol power:
/// (L-1) * P_tx * sum_l |h_{j,l}|^2 + (L-1) * sigma_0^2.
double cp_energy_siso(const SystemParams& params, const ChannelSet& channels,
                      int j);

/// Mean energy carried by the N OFDM-symbol samples of one block:
/// N * sum_k (channel gain) * sum_j' p_{j',k} + N * sigma_0^2.
double ofdm_energy_siso(const SystemParams& params, const ChannelSet& channels,
                        const ResourceAllocation& alloc, int j);

/// Receive power for the energy harvester:
/// rho_j / (N+L-1) * (E_CP + E_OS).
double eh_power_siso(const SystemParams& params, const ChannelSet& channels,
                     const ResourceAllocation& alloc, int j);

/// Diode RF-to-DC curve: k0 + k1 * P + k2 * P^2.
double dc_output(const SystemParams& params, double eh_power_w);

/// Smallest harvested power whose DC output meets the requirement:
/// inverts the diode quadratic. Returns 0 when the requirement is already
/// met at zero input; throws UnsupportedDiodeError when k2 <= 0.
double eh_power_threshold(const SystemParams& params, double dc_requirement_a);

/// Complex beam gain H_{j,k} . W_{j',k} (plain inner product, no conjugate).
cdouble beam_gain(const ChannelSet& channels, const ResourceAllocation& alloc,
                  int j, int j_beam, int k);

/// MISO SINR per Eq.-43 shape; reduces to sinr_siso at M = 1 with
/// p = |W|^2.
double sinr_miso(const SystemParams& params, const ChannelSet& channels,
                 const ResourceAllocation& alloc, int j, int k);

double throughput_miso(const SystemParams& params, const ChannelSet& channels,
                       const ResourceAllocation& alloc, int j);

/// Upper bound on the MISO harvested power:
/// rho/(N+L-1) * (M^2 (L-1) P_tx sum|h|^2 + N sum_k sum_j' |H.W|^2) + rho*sigma_0^2.
double eh_power_bound_miso(const SystemParams& params,
                           const ChannelSet& channels,
                           const ResourceAllocation& alloc, int j);

/// DSW per-symbol power at equal average power: P_dsw = D * P_ofdm.
double dsw_power_scaling(const SystemParams& params);

struct ParsevalResult {
  bool ok = false;
  double residual = 0.0;
};

/// Checks (1/N) sum |S_k|^2 == (1/N) sum |s_n|^2 to 1e-10 relative.
ParsevalResult parseval_check(const CVec& freq_symbols,
                              const CVec& time_symbols);

/// Per-user rates, harvested powers and DC currents plus the scalar
/// objective of the requested kind. Uses the SISO or MISO forms depending
/// on whether the allocation carries beamformers.
RateEnergyPoint evaluate_operating_point(const SystemParams& params,
                                         const ChannelSet& channels,
                                         const ResourceAllocation& alloc,
                                         ObjectiveKind kind);

/// Rayleigh multipath generator: i.i.d. circularly symmetric Gaussian taps
/// with an exponential power-delay profile exp(-pdp_decay * l), normalized
/// so that sum_l E|h_l|^2 = 1 per link.
ChannelSet generate_channels(int n_subcarriers, int n_receivers,
                             int n_antennas, int max_length, double pdp_decay,
                             std::uint64_t seed);

}  // namespace idet
