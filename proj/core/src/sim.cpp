// SPDX-License-Identifier: Apache-2.0

#include "idet/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "idet/model.hpp"
#include "idet/rng.hpp"

namespace idet::sim {

namespace {

struct MeanAccumulator {
  double sum = 0.0;
  double sum_sq = 0.0;
  long n = 0;
  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return n ? sum / n : 0.0; }
  double se() const {
    if (n < 2) return 0.0;
    const double m = mean();
    const double var = std::max(0.0, sum_sq / n - m * m);
    return std::sqrt(var / n);
  }
};

struct ComplexMeanAccumulator {
  cdouble sum{0.0, 0.0};
  long n = 0;
  void add(cdouble v) {
    sum += v;
    ++n;
  }
  cdouble mean() const { return n ? sum / static_cast<double>(n) : cdouble{}; }
};

}  // namespace

BlockStream::BlockStream(const SystemParams& params, const ChannelSet& channels,
                         const ResourceAllocation& alloc, long n_blocks,
                         std::uint64_t seed, SymbolSource source)
    : params_(params),
      channels_(channels),
      alloc_(alloc),
      n_blocks_(n_blocks),
      seed_(seed),
      source_(source) {
  if (n_blocks < 2) {
    throw ConfigError("simulate_blocks needs n_blocks >= 2");
  }
  const int m_count = std::max(1, channels.n_antennas);
  prev_tail_.assign(m_count, CVec(std::max(0, channels_.max_length - 1),
                                  cdouble{0.0, 0.0}));
  // warm-up predecessor so the first emitted block has genuine leakage
  generate(0);
}

BlockTrace BlockStream::generate(long index) {
  const int n = params_.n_subcarriers;
  const int len = channels_.max_length;
  const int j_count = channels_.n_receivers;
  const int m_count = channels_.n_antennas;
  const bool miso = alloc_.has_beamformers();
  const int block_len = n + len - 1;

  auto gen = rng::substream(seed_, 0x626c6f63ULL, static_cast<std::uint64_t>(index));

  BlockTrace block;
  block.user_symbols.assign(j_count, CVec(n));
  for (int j = 0; j < j_count; ++j) {
    for (int k = 0; k < n; ++k) {
      const double variance = miso ? 1.0 : alloc_.powers[j][k];
      block.user_symbols[j][k] = gen.next_cgaussian(variance);
    }
  }
  if (source_ == SymbolSource::repeat_previous && index > 0 &&
      !prev_user_symbols_.empty()) {
    block.user_symbols = prev_user_symbols_;
  }
  prev_user_symbols_ = block.user_symbols;

  // multiplex onto antenna streams
  block.freq_symbols.assign(m_count, CVec(n, cdouble{0.0, 0.0}));
  for (int m = 0; m < m_count; ++m) {
    for (int k = 0; k < n; ++k) {
      cdouble acc{0.0, 0.0};
      for (int j = 0; j < j_count; ++j) {
        const cdouble w = miso ? alloc_.beamformers[j][k][m] : cdouble{1.0, 0.0};
        acc += w * block.user_symbols[j][k];
      }
      block.freq_symbols[m][k] = acc;
    }
  }

  block.time_symbols.resize(m_count);
  block.tx_stream.assign(m_count, CVec(block_len));
  for (int m = 0; m < m_count; ++m) {
    block.time_symbols[m] = idft_unitary(block.freq_symbols[m]);
    for (int i = 0; i < n; ++i) block.tx_stream[m][i] = block.time_symbols[m][i];
    for (int i = 0; i < len - 1; ++i) {
      block.tx_stream[m][n + i] = block.time_symbols[m][i];  // cyclic suffix
    }
  }

  // receive: multipath convolution with the previous block's tail, plus noise
  block.received.assign(j_count, CVec(block_len, cdouble{0.0, 0.0}));
  block.antenna_noise.assign(j_count, CVec(block_len));
  block.conversion_noise.assign(j_count, CVec(n));
  for (int j = 0; j < j_count; ++j) {
    for (int i = 0; i < block_len; ++i) {
      block.antenna_noise[j][i] = gen.next_cgaussian(params_.antenna_noise_w);
    }
    for (int i = 0; i < n; ++i) {
      block.conversion_noise[j][i] =
          gen.next_cgaussian(params_.conversion_noise_w);
    }
  }
  for (int j = 0; j < j_count; ++j) {
    for (int m = 0; m < m_count; ++m) {
      const auto& taps = channels_.h(j, m);
      const auto& tail = prev_tail_[m];
      for (int i = 0; i < block_len; ++i) {
        cdouble acc{0.0, 0.0};
        for (int l = 0; l < len; ++l) {
          const int src = i - l;
          if (src >= 0) {
            acc += taps[l] * block.tx_stream[m][src];
          } else {
            const int tail_idx = static_cast<int>(tail.size()) + src;
            if (tail_idx >= 0) acc += taps[l] * tail[tail_idx];
          }
        }
        block.received[j][i] += acc;
      }
    }
    for (int i = 0; i < block_len; ++i) {
      block.received[j][i] += block.antenna_noise[j][i];
    }
  }

  for (int m = 0; m < m_count; ++m) {
    for (int i = 0; i < len - 1; ++i) {
      prev_tail_[m][i] = block.tx_stream[m][n + i];
    }
  }
  return block;
}

BlockTrace BlockStream::next() {
  ++emitted_;
  return generate(emitted_);
}

BlockStream simulate_blocks(const SystemParams& params,
                            const ChannelSet& channels,
                            const ResourceAllocation& alloc, long n_blocks,
                            std::uint64_t seed, SymbolSource source) {
  return BlockStream(params, channels, alloc, n_blocks, seed, source);
}

EnergyStats empirical_energies(BlockStream& stream, int j) {
  const int n = stream.params().n_subcarriers;
  const int len = stream.channels().max_length;
  MeanAccumulator cp, os;
  while (!stream.done()) {
    const auto block = stream.next();
    double e_cp = 0.0;
    for (int i = 0; i < len - 1; ++i) e_cp += std::norm(block.received[j][i]);
    double e_os = 0.0;
    for (int i = len - 1; i < n + len - 1; ++i) {
      e_os += std::norm(block.received[j][i]);
    }
    cp.add(e_cp);
    os.add(e_os);
  }
  EnergyStats stats;
  stats.e_cp_mean = cp.mean();
  stats.e_cp_se = cp.se();
  stats.e_os_mean = os.mean();
  stats.e_os_se = os.se();
  stats.n_blocks = cp.n;
  return stats;
}

bool TestReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckRow& c) { return c.pass; });
}

TestReport gaussianity_test(BlockStream& stream) {
  const int n = stream.params().n_subcarriers;
  // expected symbol variance: (1/N) sum_k sum_j p_{j,k}
  double expected_var = 0.0;
  for (const auto& row : stream.alloc().powers) {
    for (double p : row) expected_var += p;
  }
  expected_var /= n;

  std::vector<ComplexMeanAccumulator> mean_acc(n);
  // moments of u = |s|^2 up to u^4 for the delta-method kurtosis error
  std::vector<std::array<double, 4>> u_moments(n, {0.0, 0.0, 0.0, 0.0});
  long blocks = 0;
  while (!stream.done()) {
    const auto block = stream.next();
    ++blocks;
    for (int i = 0; i < n; ++i) {
      const cdouble s = block.time_symbols[0][i];
      mean_acc[i].add(s);
      const double u = std::norm(s);
      u_moments[i][0] += u;
      u_moments[i][1] += u * u;
      u_moments[i][2] += u * u * u;
      u_moments[i][3] += u * u * u * u;
    }
  }

  TestReport report;
  const bool degenerate = expected_var <= 0.0;
  for (int i = 0; i < n; ++i) {
    const double m1 = u_moments[i][0] / blocks;
    const double m2 = u_moments[i][1] / blocks;
    const double m3 = u_moments[i][2] / blocks;
    const double m4 = u_moments[i][3] / blocks;
    const cdouble mean = mean_acc[i].mean();
    const std::string tag = "s[" + std::to_string(i) + "]";

    if (degenerate) {
      // zero-power allocation collapses to the deterministic zero symbol
      report.checks.push_back({tag + ".degenerate_zero", std::abs(mean), 0.0,
                               1e-12, std::abs(mean) <= 1e-12 && m1 <= 1e-12});
      continue;
    }

    const double mean_se = std::sqrt(m1 / blocks);
    report.checks.push_back({tag + ".mean", std::abs(mean), mean_se,
                             4.0 * mean_se, std::abs(mean) <= 4.0 * mean_se});

    const double var_se = std::sqrt(std::max(0.0, m2 - m1 * m1) / blocks);
    const double var_err = std::abs(m1 - expected_var);
    report.checks.push_back(
        {tag + ".variance", m1, var_se, 3.0 * var_se, var_err <= 3.0 * var_se});

    // excess kurtosis of a circularly symmetric Gaussian is zero
    const double kurt = m2 / (m1 * m1) - 2.0;
    const double var_u2 = std::max(0.0, m4 - m2 * m2);
    const double var_u = std::max(0.0, m2 - m1 * m1);
    const double cov_u2_u = m3 - m2 * m1;
    const double kurt_var =
        (var_u2 / std::pow(m1, 4) + 4.0 * m2 * m2 * var_u / std::pow(m1, 6) -
         4.0 * m2 * cov_u2_u / std::pow(m1, 5)) /
        blocks;
    const double kurt_se = std::sqrt(std::max(kurt_var, 1e-300));
    report.checks.push_back({tag + ".excess_kurtosis", kurt, kurt_se,
                             4.0 * kurt_se, std::abs(kurt) <= 4.0 * kurt_se});
  }
  return report;
}

TestReport independence_test(BlockStream& stream) {
  const int n = stream.params().n_subcarriers;
  const int stride = std::max(1, n / 8);  // subsampled index grid

  std::vector<int> grid;
  for (int i = 0; i < n; i += stride) grid.push_back(i);
  const int g = static_cast<int>(grid.size());

  // disjoint (previous, current) block pairs keep the products independent
  std::vector<ComplexMeanAccumulator> cross(g * g), intra(g * g);
  std::vector<MeanAccumulator> var_prev(g), var_cur(g);
  bool have_prev = false;
  CVec prev_symbols;
  while (!stream.done()) {
    const auto block = stream.next();
    const auto& s = block.time_symbols[0];
    if (!have_prev) {
      prev_symbols = s;
      have_prev = true;
      continue;
    }
    for (int a = 0; a < g; ++a) {
      var_prev[a].add(std::norm(prev_symbols[grid[a]]));
      var_cur[a].add(std::norm(s[grid[a]]));
      for (int b = 0; b < g; ++b) {
        cross[a * g + b].add(s[grid[a]] * std::conj(prev_symbols[grid[b]]));
        if (b > a) {
          intra[a * g + b].add(s[grid[a]] * std::conj(s[grid[b]]));
        }
      }
    }
    have_prev = false;
  }

  TestReport report;
  for (int a = 0; a < g; ++a) {
    for (int b = 0; b < g; ++b) {
      const auto& acc = cross[a * g + b];
      if (acc.n == 0) continue;
      const double se =
          std::sqrt(std::max(var_cur[a].mean() * var_prev[b].mean(), 1e-300) /
                    acc.n);
      const double est = std::abs(acc.mean());
      report.checks.push_back({"cross_cov[" + std::to_string(grid[a]) + "," +
                                   std::to_string(grid[b]) + "]",
                               est, se, 4.0 * se, est <= 4.0 * se});
    }
  }
  for (int a = 0; a < g; ++a) {
    for (int b = a + 1; b < g; ++b) {
      const auto& acc = intra[a * g + b];
      if (acc.n == 0) continue;
      const double se =
          std::sqrt(std::max(var_cur[a].mean() * var_cur[b].mean(), 1e-300) /
                    acc.n);
      const double est = std::abs(acc.mean());
      report.checks.push_back({"intra_cov[" + std::to_string(grid[a]) + "," +
                                   std::to_string(grid[b]) + "]",
                               est, se, 4.0 * se, est <= 4.0 * se});
    }
  }
  return report;
}

std::vector<std::vector<SinrTermStats>> empirical_sinr_terms(
    BlockStream& stream) {
  const auto& params = stream.params();
  const auto& channels = stream.channels();
  const int n = params.n_subcarriers;
  const int j_count = params.n_receivers;
  const int len = channels.max_length;
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  struct Acc {
    MeanAccumulator sig, interf, z, v;
    double residual = 0.0;
  };
  std::vector<std::vector<Acc>> acc(j_count, std::vector<Acc>(n));

  while (!stream.done()) {
    const auto block = stream.next();
    for (int j = 0; j < j_count; ++j) {
      const double split = 1.0 - stream.alloc().split_ratios[j];
      const double amp = std::sqrt(std::max(0.0, split));
      // post-CP window and its DFT
      CVec window(n), z_window(n);
      for (int i = 0; i < n; ++i) {
        window[i] = amp * block.received[j][len - 1 + i] +
                    block.conversion_noise[j][i];
        z_window[i] = block.antenna_noise[j][len - 1 + i];
      }
      const CVec decoded = dft_unitary(window);
      const CVec z_freq = dft_unitary(z_window);
      const CVec v_freq = dft_unitary(block.conversion_noise[j]);
      for (int k = 0; k < n; ++k) {
        const cdouble h = channels.H(j)[k];
        const cdouble sig = sqrt_n * amp * h * block.user_symbols[j][k];
        cdouble others{0.0, 0.0};
        for (int jp = 0; jp < j_count; ++jp) {
          if (jp == j) continue;
          others += block.user_symbols[jp][k];
        }
        const cdouble interf = sqrt_n * amp * h * others;
        const cdouble zn = amp * z_freq[k];
        const cdouble vn = v_freq[k];
        auto& slot = acc[j][k];
        slot.sig.add(std::norm(sig));
        slot.interf.add(std::norm(interf));
        slot.z.add(std::norm(zn));
        slot.v.add(std::norm(vn));
        slot.residual = std::max(
            slot.residual, std::abs(decoded[k] - (sig + interf + zn + vn)));
      }
    }
  }

  std::vector<std::vector<SinrTermStats>> out(j_count,
                                              std::vector<SinrTermStats>(n));
  for (int j = 0; j < j_count; ++j) {
    for (int k = 0; k < n; ++k) {
      const auto& a = acc[j][k];
      auto& s = out[j][k];
      s.signal = a.sig.mean();
      s.signal_se = a.sig.se();
      s.interference = a.interf.mean();
      s.interference_se = a.interf.se();
      s.antenna_noise = a.z.mean();
      s.antenna_noise_se = a.z.se();
      s.conversion_noise = a.v.mean();
      s.conversion_noise_se = a.v.se();
      s.identity_residual = a.residual;
    }
  }
  return out;
}

GridSearchResult grid_search_siso(const SystemParams& params,
                                  const ChannelSet& channels, int resolution) {
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  if (j_count > 2 || n > 2) {
    throw SizeError("grid_search_siso supports J <= 2 and N <= 2 only");
  }
  if (resolution < 2) throw SizeError("resolution must be >= 2");

  const double budget = params.total_power_budget();
  const int p_dim = j_count * n;
  const double p_step = budget / (resolution - 1);
  const double rho_step = 1.0 / (resolution - 1);

  GridSearchResult result;
  result.best_fair = -std::numeric_limits<double>::infinity();
  result.best_sum = -std::numeric_limits<double>::infinity();

  ResourceAllocation alloc = ResourceAllocation::zero(j_count, n, 1);
  std::vector<int> idx(p_dim, 0);
  std::vector<double> best_rate(j_count), best_rate_rho(j_count);

  while (true) {
    double total = 0.0;
    for (int i = 0; i < p_dim; ++i) total += idx[i] * p_step;
    if (total <= budget * (1.0 + 1e-12)) {
      for (int j = 0; j < j_count; ++j) {
        for (int k = 0; k < n; ++k) alloc.powers[j][k] = idx[j * n + k] * p_step;
      }
      // splitting ratios decouple per user at fixed powers: scan each axis
      bool feasible_all = true;
      for (int j = 0; j < j_count; ++j) {
        double best = -std::numeric_limits<double>::infinity();
        double best_rho = 0.0;
        for (int r = 0; r < resolution; ++r) {
          const double rho = r * rho_step;
          alloc.split_ratios[j] = rho;
          const double dc =
              dc_output(params, eh_power_siso(params, channels, alloc, j));
          if (dc + 1e-12 < params.dc_requirements_a[j]) continue;
          const double rate = throughput_siso(params, channels, alloc, j);
          if (rate > best) {
            best = rate;
            best_rho = rho;
          }
        }
        if (!std::isfinite(best)) {
          feasible_all = false;
          break;
        }
        best_rate[j] = best;
        best_rate_rho[j] = best_rho;
      }
      if (feasible_all) {
        result.any_feasible = true;
        const double fair =
            *std::min_element(best_rate.begin(), best_rate.end());
        double sum = 0.0;
        for (double r : best_rate) sum += r;
        if (fair > result.best_fair) {
          result.best_fair = fair;
          result.fair_alloc = alloc;
          result.fair_alloc.split_ratios = best_rate_rho;
        }
        if (sum > result.best_sum) {
          result.best_sum = sum;
          result.sum_alloc = alloc;
          result.sum_alloc.split_ratios = best_rate_rho;
        }
      }
    }
    // odometer
    int pos = 0;
    while (pos < p_dim) {
      if (++idx[pos] < resolution) break;
      idx[pos] = 0;
      ++pos;
    }
    if (pos == p_dim) break;
  }
  if (!result.any_feasible) {
    result.best_fair = 0.0;
    result.best_sum = 0.0;
  }
  return result;
}

}  // namespace idet::sim
