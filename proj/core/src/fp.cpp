// SPDX-License-Identifier: Apache-2.0

#include "idet/fp.hpp"

#include <cmath>
#include <numbers>

#include "idet/model.hpp"

namespace idet::fp {

namespace {

// Denominator shared by the SISO SINR, its surrogate and psi_star.
double sinr_denominator_siso(const SystemParams& params,
                             const ChannelSet& channels,
                             const ResourceAllocation& alloc, int j, int k) {
  const double split = 1.0 - alloc.split_ratios[j];
  const double own_gain = std::norm(channels.H(j)[k]);
  double interference = 0.0;
  for (int jp = 0; jp < channels.n_receivers; ++jp) {
    if (jp == j) continue;
    const double gain = params.sinr_convention == SinrConvention::own_channel
                            ? own_gain
                            : std::norm(channels.H(jp)[k]);
    interference += gain * alloc.powers[jp][k];
  }
  return split * params.n_subcarriers * interference +
         split * params.antenna_noise_w + params.conversion_noise_w;
}

double sinr_denominator_miso(const SystemParams& params,
                             const ChannelSet& channels,
                             const ResourceAllocation& alloc, int j, int k) {
  const double split = 1.0 - alloc.split_ratios[j];
  double interference = 0.0;
  for (int jp = 0; jp < channels.n_receivers; ++jp) {
    if (jp == j) continue;
    interference += std::norm(beam_gain(channels, alloc, j, jp, k));
  }
  return params.n_subcarriers * split * interference +
         split * params.antenna_noise_w + params.conversion_noise_w;
}

}  // namespace

SurrogateState SurrogateState::ones_siso(int n_receivers, int n_subcarriers) {
  SurrogateState s;
  s.psi_siso.assign(n_receivers, std::vector<double>(n_subcarriers, 1.0));
  return s;
}

SurrogateState SurrogateState::ones_miso(int n_receivers, int n_subcarriers) {
  SurrogateState s;
  s.psi_id.assign(n_receivers,
                  std::vector<cdouble>(n_subcarriers, cdouble{1.0, 0.0}));
  s.psi_eh.assign(n_receivers,
                  std::vector<std::vector<cdouble>>(
                      n_subcarriers,
                      std::vector<cdouble>(n_receivers, cdouble{1.0, 0.0})));
  return s;
}

double gamma_tilde_siso(const SystemParams& params, const ChannelSet& channels,
                        const ResourceAllocation& alloc,
                        const SurrogateState& state, int j, int k) {
  const double psi = state.psi_siso[j][k];
  const double split = 1.0 - alloc.split_ratios[j];
  const double mag = std::abs(channels.H(j)[k]);
  const double amp =
      std::sqrt(std::max(0.0, split * params.n_subcarriers * alloc.powers[j][k]));
  const double denom = sinr_denominator_siso(params, channels, alloc, j, k);
  return 2.0 * psi * mag * amp - psi * psi * denom;
}

double r_tilde_siso(const SystemParams& params, const ChannelSet& channels,
                    const ResourceAllocation& alloc,
                    const SurrogateState& state, int j) {
  const double pref =
      params.bandwidth_hz / (params.n_subcarriers + channels.max_length - 1);
  double sum = 0.0;
  for (int k = 0; k < params.n_subcarriers; ++k) {
    const double g = gamma_tilde_siso(params, channels, alloc, state, j, k);
    if (g <= -1.0) {
      throw SurrogateDomainError(
          "surrogate SINR at or below -1; psi is far from the feasible region");
    }
    sum += std::log1p(g);
  }
  return pref * sum / std::numbers::ln2;
}

double psi_star_siso(const SystemParams& params, const ChannelSet& channels,
                     const ResourceAllocation& alloc, int j, int k) {
  const double split = 1.0 - alloc.split_ratios[j];
  const double mag = std::abs(channels.H(j)[k]);
  const double amp =
      std::sqrt(std::max(0.0, split * params.n_subcarriers * alloc.powers[j][k]));
  return mag * amp / sinr_denominator_siso(params, channels, alloc, j, k);
}

double r_hat_miso(const SystemParams& params, const ChannelSet& channels,
                  const ResourceAllocation& alloc, const SurrogateState& state,
                  int j) {
  const double pref =
      params.bandwidth_hz / (params.n_subcarriers + channels.max_length - 1);
  const double split = 1.0 - alloc.split_ratios[j];
  const double amp = std::sqrt(std::max(0.0, params.n_subcarriers * split));
  double sum = 0.0;
  for (int k = 0; k < params.n_subcarriers; ++k) {
    const cdouble psi = state.psi_id[j][k];
    const cdouble gain = beam_gain(channels, alloc, j, j, k);
    const double denom = sinr_denominator_miso(params, channels, alloc, j, k);
    const double g = 2.0 * amp * std::real(std::conj(psi) * gain) -
                     std::norm(psi) * denom;
    if (g <= -1.0) {
      throw SurrogateDomainError(
          "surrogate SINR at or below -1; psi is far from the feasible region");
    }
    sum += std::log1p(g);
  }
  return pref * sum / std::numbers::ln2;
}

double p_hat_eh_miso(const SystemParams& params, const ChannelSet& channels,
                     const ResourceAllocation& alloc,
                     const SurrogateState& state, int j) {
  const double rho = alloc.split_ratios[j];
  if (rho == 0.0) return 0.0;
  const int n = params.n_subcarriers;
  const int len = channels.max_length;
  const double m2 = static_cast<double>(params.n_antennas) * params.n_antennas;

  const double cp_term = rho * (len - 1) * m2 * params.tx_power_w *
                         channels.tap_energy(j) / (n + len - 1);
  double os_sum = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int jp = 0; jp < channels.n_receivers; ++jp) {
      const cdouble psi = state.psi_eh[j][k][jp];
      const cdouble gain = beam_gain(channels, alloc, j, jp, k);
      os_sum += 2.0 * std::real(std::conj(psi) * gain) - std::norm(psi);
    }
  }
  return cp_term + rho * n / (n + len - 1.0) * os_sum +
         rho * params.antenna_noise_w;
}

cdouble psi_eh_star(const ChannelSet& channels, const ResourceAllocation& alloc,
                    int j, int k) {
  return beam_gain(channels, alloc, j, j, k);
}

cdouble psi_id_star(const SystemParams& params, const ChannelSet& channels,
                    const ResourceAllocation& alloc, int j, int k) {
  const double split = 1.0 - alloc.split_ratios[j];
  const double amp = std::sqrt(std::max(0.0, params.n_subcarriers * split));
  const cdouble gain = beam_gain(channels, alloc, j, j, k);
  return amp * gain / sinr_denominator_miso(params, channels, alloc, j, k);
}

void update_psi_siso(const SystemParams& params, const ChannelSet& channels,
                     const ResourceAllocation& alloc, SurrogateState& state) {
  for (int j = 0; j < channels.n_receivers; ++j) {
    for (int k = 0; k < channels.n_subcarriers; ++k) {
      state.psi_siso[j][k] = psi_star_siso(params, channels, alloc, j, k);
    }
  }
}

void update_psi_eh_miso(const ChannelSet& channels,
                        const ResourceAllocation& alloc,
                        SurrogateState& state) {
  for (int j = 0; j < channels.n_receivers; ++j) {
    for (int k = 0; k < channels.n_subcarriers; ++k) {
      for (int jp = 0; jp < channels.n_receivers; ++jp) {
        state.psi_eh[j][k][jp] = beam_gain(channels, alloc, j, jp, k);
      }
    }
  }
}

void update_psi_id_miso(const SystemParams& params, const ChannelSet& channels,
                        const ResourceAllocation& alloc,
                        SurrogateState& state) {
  for (int j = 0; j < channels.n_receivers; ++j) {
    for (int k = 0; k < channels.n_subcarriers; ++k) {
      state.psi_id[j][k] = psi_id_star(params, channels, alloc, j, k);
    }
  }
}

}  // namespace idet::fp
