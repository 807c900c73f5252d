// SPDX-License-Identifier: Apache-2.0
//
// Core domain types for the OFDM integrated data-and-energy-transfer library:
// system constants, multipath channel sets, resource allocations and the
// rate/energy operating point they induce.
#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace idet {

using cdouble = std::complex<double>;
using CVec = std::vector<cdouble>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};
class InvalidChannelError : public Error {
 public:
  using Error::Error;
};
class IndexError : public Error {
 public:
  using Error::Error;
};
class UnsupportedDiodeError : public Error {
 public:
  using Error::Error;
};
class SurrogateDomainError : public Error {
 public:
  using Error::Error;
};
class SizeError : public Error {
 public:
  using Error::Error;
};

/// Which channel gain multiplies an interferer's power in the SINR
/// denominator (and in the OFDM-symbol energy sum).
///
/// `own_channel` uses the receiving user's gain |H_{j,k}|^2 for every
/// interferer, consistent with a broadcast downlink where everything a
/// receiver hears arrives through its own channel. `as_written` uses the
/// interfering user's gain |H_{j',k}|^2 instead.
enum class SinrConvention { own_channel, as_written };

enum class ObjectiveKind { fair, sum };

/// All scalar constants of one system instance.
struct SystemParams {
  int n_subcarriers = 0;  // N
  int n_receivers = 0;    // J
  int n_antennas = 1;     // M; 1 selects the SISO formulation
  double bandwidth_hz = 1.0;
  double antenna_noise_w = 0.0;     // sigma_0^2
  double conversion_noise_w = 0.0;  // sigma_cov^2
  double tx_power_w = 0.0;          // per-symbol average transmit power
  double diode_k0 = 0.0;
  double diode_k1 = 0.0;
  double diode_k2 = 0.0;
  int sampling_factor = 1;  // D, the DSW up-sampling factor
  std::vector<double> dc_requirements_a;  // per-receiver DC requirement
  double tolerance = 1e-5;  // alternating-optimization stopping epsilon
  SinrConvention sinr_convention = SinrConvention::own_channel;

  /// Total per-OFDM-symbol power budget N * P_tx.
  double total_power_budget() const { return n_subcarriers * tx_power_w; }

  /// Throws ConfigError on violated invariants (k2 <= 0, negative noise, ...).
  void validate() const;
};

/// Time-domain multipath taps per (receiver, antenna) link and the derived
/// frequency-domain channels. `taps[j][m]` is zero-padded to `max_length`;
/// `freq[j][m][k]` is the scaled DFT of the taps.
struct ChannelSet {
  int n_receivers = 0;
  int n_antennas = 0;
  int n_subcarriers = 0;
  int max_length = 0;  // L

  std::vector<std::vector<CVec>> taps;  // [j][m][l]
  std::vector<std::vector<CVec>> freq;  // [j][m][k]

  /// Builds the set from taps, recomputing `freq`. Throws
  /// InvalidChannelError when a tap vector is empty or longer than N.
  static ChannelSet from_taps(int n_subcarriers,
                              std::vector<std::vector<CVec>> taps);

  const CVec& h(int j, int m = 0) const { return taps.at(j).at(m); }
  const CVec& H(int j, int m = 0) const { return freq.at(j).at(m); }

  /// sum_m sum_l |h_{j,m,l}|^2
  double tap_energy(int j) const;

  std::string to_json_string() const;
  static ChannelSet from_json_string(const std::string& text);
};

/// Per-user/per-subcarrier transmit powers, power-splitting ratios and,
/// for M > 1, beamformers. In MISO allocations `powers[j][k]` is the
/// envelope ||W_{j,k}||^2.
struct ResourceAllocation {
  std::vector<std::vector<double>> powers;      // p[j][k]
  std::vector<double> split_ratios;             // rho[j]
  std::vector<std::vector<CVec>> beamformers;   // W[j][k][m]; empty when M == 1

  static ResourceAllocation zero(int n_receivers, int n_subcarriers,
                                 int n_antennas);
  bool has_beamformers() const { return !beamformers.empty(); }

  /// Allocates zero beamformer storage when absent. The MISO solvers carry
  /// beams even at M = 1, where they reduce to scalar weights.
  void ensure_beamformers(int n_antennas);

  /// Recomputes powers[j][k] = ||W[j][k]||^2 (MISO only).
  void sync_envelope_powers();

  double total_power() const;
};

/// Rates, harvested powers and DC currents at one allocation.
struct RateEnergyPoint {
  std::vector<double> throughput_bps;  // R_j
  std::vector<double> eh_power_w;      // P_EH,j (MISO: upper bound)
  std::vector<double> dc_a;            // i_j
  double objective = 0.0;
  ObjectiveKind objective_kind = ObjectiveKind::fair;
};

}  // namespace idet
