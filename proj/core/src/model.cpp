// SPDX-License-Identifier: Apache-2.0

#include "idet/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "idet/rng.hpp"
#include "json.hpp"

namespace idet {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void check_index(int value, int bound, const char* what) {
  if (value < 0 || value >= bound) {
    throw IndexError(std::string(what) + " index out of range");
  }
}

double log2_1p(double x) { return std::log1p(x) / std::numbers::ln2; }

}  // namespace

void SystemParams::validate() const {
  if (n_subcarriers < 2) throw ConfigError("n_subcarriers must be >= 2");
  if (n_receivers < 1) throw ConfigError("n_receivers must be >= 1");
  if (n_antennas < 1) throw ConfigError("n_antennas must be >= 1");
  if (bandwidth_hz <= 0.0) throw ConfigError("bandwidth must be positive");
  if (antenna_noise_w < 0.0 || conversion_noise_w < 0.0) {
    throw ConfigError("noise powers must be nonnegative");
  }
  if (tx_power_w <= 0.0) throw ConfigError("transmit power must be positive");
  if (diode_k2 <= 0.0) throw ConfigError("diode k2 must be strictly positive");
  if (diode_k1 < 0.0) throw ConfigError("diode k1 must be nonnegative");
  if (sampling_factor < 1) throw ConfigError("sampling factor must be >= 1");
  if (static_cast<int>(dc_requirements_a.size()) != n_receivers) {
    throw ConfigError("dc_requirements must have one entry per receiver");
  }
  if (tolerance <= 0.0) throw ConfigError("tolerance must be positive");
}

CVec fft_channel(const CVec& taps, int n_subcarriers) {
  const auto len = static_cast<int>(taps.size());
  if (len == 0 || len > n_subcarriers) {
    throw InvalidChannelError("channel length must satisfy 1 <= L <= N");
  }
  CVec out(n_subcarriers);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_subcarriers));
  for (int k = 0; k < n_subcarriers; ++k) {
    cdouble acc{0.0, 0.0};
    for (int n = 0; n < len; ++n) {
      const double ang = -kTwoPi * n * k / n_subcarriers;
      acc += taps[n] * cdouble{std::cos(ang), std::sin(ang)};
    }
    out[k] = acc * scale;
  }
  return out;
}

CVec dft_unitary(const CVec& x) {
  const int n = static_cast<int>(x.size());
  CVec out(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int k = 0; k < n; ++k) {
    cdouble acc{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
      const double ang = -kTwoPi * i * k / n;
      acc += x[i] * cdouble{std::cos(ang), std::sin(ang)};
    }
    out[k] = acc * scale;
  }
  return out;
}

CVec idft_unitary(const CVec& x) {
  const int n = static_cast<int>(x.size());
  CVec out(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int i = 0; i < n; ++i) {
    cdouble acc{0.0, 0.0};
    for (int k = 0; k < n; ++k) {
      const double ang = kTwoPi * i * k / n;
      acc += x[k] * cdouble{std::cos(ang), std::sin(ang)};
    }
    out[i] = acc * scale;
  }
  return out;
}

ChannelSet ChannelSet::from_taps(int n_subcarriers,
                                 std::vector<std::vector<CVec>> taps) {
  ChannelSet cs;
  cs.n_receivers = static_cast<int>(taps.size());
  if (cs.n_receivers == 0) throw InvalidChannelError("no receivers");
  cs.n_antennas = static_cast<int>(taps.front().size());
  cs.n_subcarriers = n_subcarriers;
  int max_len = 0;
  for (const auto& per_rx : taps) {
    if (static_cast<int>(per_rx.size()) != cs.n_antennas) {
      throw InvalidChannelError("ragged antenna dimension");
    }
    for (const auto& link : per_rx) {
      max_len = std::max(max_len, static_cast<int>(link.size()));
    }
  }
  if (max_len == 0 || max_len > n_subcarriers) {
    throw InvalidChannelError("channel length must satisfy 1 <= L <= N");
  }
  cs.max_length = max_len;
  // zero-pad every link to the common L before transforming
  for (auto& per_rx : taps) {
    for (auto& link : per_rx) {
      link.resize(max_len, cdouble{0.0, 0.0});
    }
  }
  cs.taps = std::move(taps);
  cs.freq.resize(cs.n_receivers);
  for (int j = 0; j < cs.n_receivers; ++j) {
    cs.freq[j].resize(cs.n_antennas);
    for (int m = 0; m < cs.n_antennas; ++m) {
      cs.freq[j][m] = fft_channel(cs.taps[j][m], n_subcarriers);
    }
  }
  return cs;
}

double ChannelSet::tap_energy(int j) const {
  double e = 0.0;
  for (const auto& link : taps.at(j)) {
    for (const auto& tap : link) e += std::norm(tap);
  }
  return e;
}

std::string ChannelSet::to_json_string() const {
  nlohmann::json doc;
  doc["N"] = n_subcarriers;
  doc["J"] = n_receivers;
  doc["M"] = n_antennas;
  doc["L"] = max_length;
  nlohmann::json links = nlohmann::json::array();
  for (int j = 0; j < n_receivers; ++j) {
    for (int m = 0; m < n_antennas; ++m) {
      nlohmann::json link = nlohmann::json::array();
      for (const auto& tap : taps[j][m]) {
        link.push_back({tap.real(), tap.imag()});
      }
      links.push_back(std::move(link));
    }
  }
  doc["taps"] = std::move(links);
  return doc.dump(2);
}

ChannelSet ChannelSet::from_json_string(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidChannelError(std::string("bad channel JSON: ") + e.what());
  }
  try {
    const int n = doc.at("N").get<int>();
    const int j_count = doc.at("J").get<int>();
    const int m_count = doc.at("M").get<int>();
    const int len = doc.at("L").get<int>();
    const auto& links = doc.at("taps");
    if (static_cast<int>(links.size()) != j_count * m_count) {
      throw InvalidChannelError("taps array must hold J*M links");
    }
    std::vector<std::vector<CVec>> taps(j_count,
                                        std::vector<CVec>(m_count));
    for (int j = 0; j < j_count; ++j) {
      for (int m = 0; m < m_count; ++m) {
        const auto& link = links.at(j * m_count + m);
        CVec tap_vec;
        tap_vec.reserve(link.size());
        for (const auto& pair : link) {
          tap_vec.emplace_back(pair.at(0).get<double>(),
                               pair.at(1).get<double>());
        }
        if (static_cast<int>(tap_vec.size()) > len) {
          throw InvalidChannelError("link longer than declared L");
        }
        taps[j][m] = std::move(tap_vec);
      }
    }
    // honor the declared common length even if all links are shorter
    for (auto& per_rx : taps) {
      for (auto& link : per_rx) link.resize(len, cdouble{0.0, 0.0});
    }
    return from_taps(n, std::move(taps));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidChannelError(std::string("bad channel JSON: ") + e.what());
  }
}

ResourceAllocation ResourceAllocation::zero(int n_receivers, int n_subcarriers,
                                            int n_antennas) {
  ResourceAllocation alloc;
  alloc.powers.assign(n_receivers, std::vector<double>(n_subcarriers, 0.0));
  alloc.split_ratios.assign(n_receivers, 0.0);
  if (n_antennas > 1) {
    alloc.beamformers.assign(
        n_receivers,
        std::vector<CVec>(n_subcarriers, CVec(n_antennas, {0.0, 0.0})));
  }
  return alloc;
}

void ResourceAllocation::ensure_beamformers(int n_antennas) {
  if (has_beamformers()) return;
  beamformers.assign(
      powers.size(),
      std::vector<CVec>(powers.empty() ? 0 : powers.front().size(),
                        CVec(n_antennas, {0.0, 0.0})));
}

void ResourceAllocation::sync_envelope_powers() {
  if (!has_beamformers()) return;
  for (std::size_t j = 0; j < beamformers.size(); ++j) {
    for (std::size_t k = 0; k < beamformers[j].size(); ++k) {
      double e = 0.0;
      for (const auto& w : beamformers[j][k]) e += std::norm(w);
      powers[j][k] = e;
    }
  }
}

double ResourceAllocation::total_power() const {
  double total = 0.0;
  for (const auto& row : powers) {
    for (double p : row) total += p;
  }
  return total;
}

double sinr_siso(const SystemParams& params, const ChannelSet& channels,
                 const ResourceAllocation& alloc, int j, int k) {
  check_index(j, channels.n_receivers, "receiver");
  check_index(k, channels.n_subcarriers, "subcarrier");
  const double rho = alloc.split_ratios[j];
  const double split = 1.0 - rho;
  const int n = params.n_subcarriers;
  const double own_gain = std::norm(channels.H(j)[k]);

  const double numer = split * n * own_gain * alloc.powers[j][k];
  double interference = 0.0;
  for (int jp = 0; jp < channels.n_receivers; ++jp) {
    if (jp == j) continue;
    const double gain = params.sinr_convention == SinrConvention::own_channel
                            ? own_gain
                            : std::norm(channels.H(jp)[k]);
    interference += gain * alloc.powers[jp][k];
  }
  const double denom = split * n * interference + split * params.antenna_noise_w +
                       params.conversion_noise_w;
  if (numer == 0.0) return 0.0;
  return numer / denom;
}

double throughput_siso(const SystemParams& params, const ChannelSet& channels,
                       const ResourceAllocation& alloc, int j) {
  const double pref =
      params.bandwidth_hz / (params.n_subcarriers + channels.max_length - 1);
  double sum = 0.0;
  for (int k = 0; k < params.n_subcarriers; ++k) {
    sum += log2_1p(sinr_siso(params, channels, alloc, j, k));
  }
  return pref * sum;
}

double cp_energy_siso(const SystemParams& params, const ChannelSet& channels,
                      int j) {
  check_index(j, channels.n_receivers, "receiver");
  const int cp_len = channels.max_length - 1;
  if (cp_len <= 0) return 0.0;
  return cp_len * (params.tx_power_w * channels.tap_energy(j) +
                   params.antenna_noise_w);
}

double ofdm_energy_siso(const SystemParams& params, const ChannelSet& channels,
                        const ResourceAllocation& alloc, int j) {
  check_index(j, channels.n_receivers, "receiver");
  const int n = params.n_subcarriers;
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    const double own_gain = std::norm(channels.H(j)[k]);
    for (int jp = 0; jp < channels.n_receivers; ++jp) {
      const double gain = params.sinr_convention == SinrConvention::own_channel
                              ? own_gain
                              : std::norm(channels.H(jp)[k]);
      total += gain * alloc.powers[jp][k];
    }
  }
  return n * total + n * params.antenna_noise_w;
}

double eh_power_siso(const SystemParams& params, const ChannelSet& channels,
                     const ResourceAllocation& alloc, int j) {
  const double rho = alloc.split_ratios[j];
  if (rho == 0.0) return 0.0;
  const double e_cp = cp_energy_siso(params, channels, j);
  const double e_os = ofdm_energy_siso(params, channels, alloc, j);
  return rho / (params.n_subcarriers + channels.max_length - 1) * (e_cp + e_os);
}

double dc_output(const SystemParams& params, double eh_power_w) {
  return params.diode_k0 + params.diode_k1 * eh_power_w +
         params.diode_k2 * eh_power_w * eh_power_w;
}

double eh_power_threshold(const SystemParams& params,
                          double dc_requirement_a) {
  if (params.diode_k2 <= 0.0) {
    throw UnsupportedDiodeError("diode inversion requires k2 > 0");
  }
  const double excess = dc_requirement_a - params.diode_k0;
  if (excess <= 0.0) return 0.0;
  const double k1 = params.diode_k1;
  const double k2 = params.diode_k2;
  return (-k1 + std::sqrt(k1 * k1 + 4.0 * k2 * excess)) / (2.0 * k2);
}

cdouble beam_gain(const ChannelSet& channels, const ResourceAllocation& alloc,
                  int j, int j_beam, int k) {
  check_index(j, channels.n_receivers, "receiver");
  check_index(j_beam, channels.n_receivers, "beam");
  check_index(k, channels.n_subcarriers, "subcarrier");
  cdouble acc{0.0, 0.0};
  const auto& w = alloc.beamformers[j_beam][k];
  for (int m = 0; m < channels.n_antennas; ++m) {
    acc += channels.H(j, m)[k] * w[m];
  }
  return acc;
}

double sinr_miso(const SystemParams& params, const ChannelSet& channels,
                 const ResourceAllocation& alloc, int j, int k) {
  check_index(j, channels.n_receivers, "receiver");
  check_index(k, channels.n_subcarriers, "subcarrier");
  const double rho = alloc.split_ratios[j];
  const double split = 1.0 - rho;
  const int n = params.n_subcarriers;

  const double numer = n * split * std::norm(beam_gain(channels, alloc, j, j, k));
  double interference = 0.0;
  for (int jp = 0; jp < channels.n_receivers; ++jp) {
    if (jp == j) continue;
    interference += std::norm(beam_gain(channels, alloc, j, jp, k));
  }
  const double denom = n * split * interference + split * params.antenna_noise_w +
                       params.conversion_noise_w;
  if (numer == 0.0) return 0.0;
  return numer / denom;
}

double throughput_miso(const SystemParams& params, const ChannelSet& channels,
                       const ResourceAllocation& alloc, int j) {
  const double pref =
      params.bandwidth_hz / (params.n_subcarriers + channels.max_length - 1);
  double sum = 0.0;
  for (int k = 0; k < params.n_subcarriers; ++k) {
    sum += log2_1p(sinr_miso(params, channels, alloc, j, k));
  }
  return pref * sum;
}

double eh_power_bound_miso(const SystemParams& params,
                           const ChannelSet& channels,
                           const ResourceAllocation& alloc, int j) {
  check_index(j, channels.n_receivers, "receiver");
  const double rho = alloc.split_ratios[j];
  if (rho == 0.0) return 0.0;
  const int n = params.n_subcarriers;
  const int len = channels.max_length;
  const double m2 = static_cast<double>(params.n_antennas) * params.n_antennas;

  const double cp_term =
      m2 * (len - 1) * params.tx_power_w * channels.tap_energy(j);
  double os_term = 0.0;
  for (int k = 0; k < n; ++k) {
    for (int jp = 0; jp < channels.n_receivers; ++jp) {
      os_term += std::norm(beam_gain(channels, alloc, j, jp, k));
    }
  }
  return rho / (n + len - 1) * (cp_term + n * os_term) +
         rho * params.antenna_noise_w;
}

double dsw_power_scaling(const SystemParams& params) {
  return params.sampling_factor * params.tx_power_w;
}

ParsevalResult parseval_check(const CVec& freq_symbols,
                              const CVec& time_symbols) {
  double freq_power = 0.0;
  double time_power = 0.0;
  for (const auto& s : freq_symbols) freq_power += std::norm(s);
  for (const auto& s : time_symbols) time_power += std::norm(s);
  freq_power /= static_cast<double>(freq_symbols.size());
  time_power /= static_cast<double>(time_symbols.size());
  const double scale = std::max({freq_power, time_power, 1e-300});
  ParsevalResult res;
  res.residual = std::abs(freq_power - time_power) / scale;
  res.ok = res.residual < 1e-10;
  return res;
}

RateEnergyPoint evaluate_operating_point(const SystemParams& params,
                                         const ChannelSet& channels,
                                         const ResourceAllocation& alloc,
                                         ObjectiveKind kind) {
  RateEnergyPoint point;
  point.objective_kind = kind;
  const bool miso = alloc.has_beamformers();
  for (int j = 0; j < channels.n_receivers; ++j) {
    const double rate = miso ? throughput_miso(params, channels, alloc, j)
                             : throughput_siso(params, channels, alloc, j);
    const double eh = miso ? eh_power_bound_miso(params, channels, alloc, j)
                           : eh_power_siso(params, channels, alloc, j);
    point.throughput_bps.push_back(rate);
    point.eh_power_w.push_back(eh);
    point.dc_a.push_back(dc_output(params, eh));
  }
  if (kind == ObjectiveKind::fair) {
    point.objective = *std::min_element(point.throughput_bps.begin(),
                                        point.throughput_bps.end());
  } else {
    point.objective = 0.0;
    for (double r : point.throughput_bps) point.objective += r;
  }
  return point;
}

ChannelSet generate_channels(int n_subcarriers, int n_receivers,
                             int n_antennas, int max_length, double pdp_decay,
                             std::uint64_t seed) {
  if (max_length < 1 || max_length > n_subcarriers) {
    throw InvalidChannelError("channel length must satisfy 1 <= L <= N");
  }
  // exponential power-delay profile, normalized to unit link energy
  std::vector<double> profile(max_length);
  double total = 0.0;
  for (int l = 0; l < max_length; ++l) {
    profile[l] = std::exp(-pdp_decay * l);
    total += profile[l];
  }
  for (double& w : profile) w /= total;

  std::vector<std::vector<CVec>> taps(n_receivers,
                                      std::vector<CVec>(n_antennas));
  for (int j = 0; j < n_receivers; ++j) {
    for (int m = 0; m < n_antennas; ++m) {
      auto gen = rng::substream(seed, 0x6368616eULL,
                                static_cast<std::uint64_t>(j) * n_antennas + m);
      CVec link(max_length);
      for (int l = 0; l < max_length; ++l) {
        link[l] = gen.next_cgaussian(profile[l]);
      }
      taps[j][m] = std::move(link);
    }
  }
  return ChannelSet::from_taps(n_subcarriers, std::move(taps));
}

}  // namespace idet
