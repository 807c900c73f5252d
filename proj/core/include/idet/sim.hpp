// SPDX-License-Identifier: Apache-2.0
//
// Ground-truth engine: simulates the full time-domain transmit/receive
// chain (IDFT, cyclic suffix, multipath convolution with previous-block
// leakage, receiver noise) and provides the statistical and brute-force
// oracles that validate every closed-form expression.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "idet/types.hpp"

namespace idet::sim {

enum class SymbolSource {
  independent,      // fresh symbols every block
  repeat_previous,  // adversarial control: repeats the previous block
};

/// One OFDM block of the simulated chain. Antenna streams are indexed by m
/// (M = 1 for SISO); receiver streams by j.
struct BlockTrace {
  std::vector<CVec> user_symbols;      // S_{j,k}                [J][N]
  std::vector<CVec> freq_symbols;      // S_{m,k} multiplexed    [M][N]
  std::vector<CVec> time_symbols;      // s_{m,n}                [M][N]
  std::vector<CVec> tx_stream;         // x_{m,n} with suffix    [M][N+L-1]
  std::vector<CVec> received;          // r_{j,n} with leakage   [J][N+L-1]
  std::vector<CVec> antenna_noise;     // z_{j,n}                [J][N+L-1]
  std::vector<CVec> conversion_noise;  // v_{j,n}                [J][N]
};

/// Deterministic block generator; block b draws from substream (seed, b), so
/// streams can be re-generated or consumed in parallel with identical
/// results. The first emitted block already has a genuine predecessor.
class BlockStream {
 public:
  BlockStream(const SystemParams& params, const ChannelSet& channels,
              const ResourceAllocation& alloc, long n_blocks,
              std::uint64_t seed, SymbolSource source);

  bool done() const { return emitted_ >= n_blocks_; }
  long total_blocks() const { return n_blocks_; }
  BlockTrace next();

  const SystemParams& params() const { return params_; }
  const ChannelSet& channels() const { return channels_; }
  const ResourceAllocation& alloc() const { return alloc_; }

 private:
  BlockTrace generate(long index);

  SystemParams params_;
  ChannelSet channels_;
  ResourceAllocation alloc_;
  long n_blocks_;
  std::uint64_t seed_;
  SymbolSource source_;
  long emitted_ = 0;
  std::vector<CVec> prev_tail_;          // last L-1 tx samples per antenna
  std::vector<CVec> prev_user_symbols_;  // for repeat_previous
};

/// pre: n_blocks >= 2 (the leakage model needs a predecessor block).
BlockStream simulate_blocks(const SystemParams& params,
                            const ChannelSet& channels,
                            const ResourceAllocation& alloc, long n_blocks,
                            std::uint64_t seed,
                            SymbolSource source = SymbolSource::independent);

struct EnergyStats {
  double e_cp_mean = 0.0, e_cp_se = 0.0;
  double e_os_mean = 0.0, e_os_se = 0.0;
  long n_blocks = 0;
};

/// Sample means and standard errors of the CP-window and OFDM-window
/// received energies of receiver j.
EnergyStats empirical_energies(BlockStream& stream, int j);

struct CheckRow {
  std::string statistic;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct TestReport {
  std::vector<CheckRow> checks;
  bool passed() const;
};

/// Per-time-index mean / variance / excess-kurtosis checks of the antenna-0
/// time symbols against the circularly symmetric Gaussian hypothesis.
TestReport gaussianity_test(BlockStream& stream);

/// Cross-block covariance (current vs previous block) and intra-block
/// orthogonality checks on a subsampled index grid.
TestReport independence_test(BlockStream& stream);

/// Empirical post-FFT decode-chain statistics for one (receiver, subcarrier).
struct SinrTermStats {
  double signal = 0.0, signal_se = 0.0;
  double interference = 0.0, interference_se = 0.0;
  double antenna_noise = 0.0, antenna_noise_se = 0.0;
  double conversion_noise = 0.0, conversion_noise_se = 0.0;
  double identity_residual = 0.0;  // max |Y - (sig+int+noise)| observed
};

/// Decomposes the decoded symbols Y_{j,k} into signal, interference and the
/// two noise components and estimates their powers (SISO chain).
std::vector<std::vector<SinrTermStats>> empirical_sinr_terms(
    BlockStream& stream);

struct GridSearchResult {
  bool any_feasible = false;
  double best_fair = 0.0;
  double best_sum = 0.0;
  ResourceAllocation fair_alloc;
  ResourceAllocation sum_alloc;
};

/// Exhaustive scan of the power simplex and per-user splitting ratios at
/// `resolution` points per axis; objectives evaluated with the exact closed
/// forms. Throws SizeError when J > 2 or N > 2.
GridSearchResult grid_search_siso(const SystemParams& params,
                                  const ChannelSet& channels, int resolution);

}  // namespace idet::sim
