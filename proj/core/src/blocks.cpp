// SPDX-License-Identifier: Apache-2.0

#include "idet/blocks.hpp"

#include <cmath>
#include <memory>
#include <numbers>

#include "idet/model.hpp"

namespace idet::opt::blocks {

namespace {

constexpr double kLn2 = std::numbers::ln2;

double conv_gain(const SystemParams& params, const ChannelSet& channels,
                 int j, int jp, int k) {
  return params.sinr_convention == SinrConvention::own_channel
             ? std::norm(channels.H(j)[k])
             : std::norm(channels.H(jp)[k]);
}

// ---------------------------------------------------------------------------
// SISO power block

struct PowerCtx {
  int n_receivers, n_subcarriers;
  double pref;  // B / (N + L - 1)
  // gamma_tilde_{j,k}(p) = 2 amp sqrt(p_{j,k}) - sum_{j'} quad p_{j',k} - noise
  std::vector<std::vector<double>> amp;                 // [j][k]
  std::vector<std::vector<std::vector<double>>> quad;   // [j][k][j'], 0 at j'=j
  std::vector<std::vector<double>> noise;               // [j][k]
  // P_EH_j(p) = eh_const[j] + sum_{j',k} eh_coef[j][j'][k] p_{j',k}
  std::vector<double> eh_const;
  std::vector<std::vector<std::vector<double>>> eh_coef;  // [j][j'][k]

  double gamma(std::span<const double> x, int j, int k) const {
    double g = 2.0 * amp[j][k] * std::sqrt(std::max(0.0, x[j * n_subcarriers + k]));
    for (int jp = 0; jp < n_receivers; ++jp) {
      g -= quad[j][k][jp] * x[jp * n_subcarriers + k];
    }
    return g - noise[j][k];
  }

  double rate(std::span<const double> x, int j) const {
    double sum = 0.0;
    for (int k = 0; k < n_subcarriers; ++k) {
      const double g = gamma(x, j, k);
      if (g <= -1.0) return -std::numeric_limits<double>::infinity();
      sum += std::log1p(g);
    }
    return pref * sum / kLn2;
  }

  // accumulates dR_j/dp into grad (power coordinates only)
  void rate_gradient(std::span<const double> x, int j,
                     std::span<double> grad) const {
    for (int k = 0; k < n_subcarriers; ++k) {
      const double g = gamma(x, j, k);
      const double chain = pref / (kLn2 * (1.0 + g));
      const double p_own = std::max(x[j * n_subcarriers + k], 1e-300);
      grad[j * n_subcarriers + k] += chain * amp[j][k] / std::sqrt(p_own);
      for (int jp = 0; jp < n_receivers; ++jp) {
        if (jp == j) continue;
        grad[jp * n_subcarriers + k] -= chain * quad[j][k][jp];
      }
    }
  }

  double eh_power(std::span<const double> x, int j) const {
    double v = eh_const[j];
    for (int jp = 0; jp < n_receivers; ++jp) {
      for (int k = 0; k < n_subcarriers; ++k) {
        v += eh_coef[j][jp][k] * x[jp * n_subcarriers + k];
      }
    }
    return v;
  }
};

std::shared_ptr<PowerCtx> make_power_ctx(const SystemParams& params,
                                         const ChannelSet& channels,
                                         const std::vector<double>& rho,
                                         const fp::SurrogateState& state) {
  auto ctx = std::make_shared<PowerCtx>();
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int len = channels.max_length;
  ctx->n_receivers = j_count;
  ctx->n_subcarriers = n;
  ctx->pref = params.bandwidth_hz / (n + len - 1);
  ctx->amp.assign(j_count, std::vector<double>(n, 0.0));
  ctx->quad.assign(j_count, std::vector<std::vector<double>>(
                                n, std::vector<double>(j_count, 0.0)));
  ctx->noise.assign(j_count, std::vector<double>(n, 0.0));
  ctx->eh_const.assign(j_count, 0.0);
  ctx->eh_coef.assign(j_count, std::vector<std::vector<double>>(
                                   j_count, std::vector<double>(n, 0.0)));
  for (int j = 0; j < j_count; ++j) {
    const double split = 1.0 - rho[j];
    for (int k = 0; k < n; ++k) {
      const double psi = state.psi_siso[j][k];
      ctx->amp[j][k] = psi * std::abs(channels.H(j)[k]) * std::sqrt(split * n);
      for (int jp = 0; jp < j_count; ++jp) {
        if (jp == j) continue;
        ctx->quad[j][k][jp] =
            psi * psi * split * n * conv_gain(params, channels, j, jp, k);
      }
      ctx->noise[j][k] =
          psi * psi * (split * params.antenna_noise_w + params.conversion_noise_w);
    }
    const double cp =
        (len - 1) * (params.tx_power_w * channels.tap_energy(j) +
                     params.antenna_noise_w);
    ctx->eh_const[j] = rho[j] * (cp + n * params.antenna_noise_w) / (n + len - 1);
    for (int jp = 0; jp < j_count; ++jp) {
      for (int k = 0; k < n; ++k) {
        ctx->eh_coef[j][jp][k] =
            rho[j] * n * conv_gain(params, channels, j, jp, k) / (n + len - 1);
      }
    }
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// SISO split block

struct SplitCtx {
  int n_receivers, n_subcarriers;
  double pref;
  // gamma_{j,k}(rho) = 2 alpha sqrt(1-rho_j) - beta (1-rho_j) - cterm
  std::vector<std::vector<double>> alpha, beta, cterm;  // [j][k]
  std::vector<double> eh_slope;  // P_EH_j = rho_j * eh_slope[j]

  double gamma(double rho, int j, int k) const {
    const double split = std::max(0.0, 1.0 - rho);
    return 2.0 * alpha[j][k] * std::sqrt(split) - beta[j][k] * split -
           cterm[j][k];
  }

  double rate(double rho, int j) const {
    double sum = 0.0;
    for (int k = 0; k < n_subcarriers; ++k) {
      const double g = gamma(rho, j, k);
      if (g <= -1.0) return -std::numeric_limits<double>::infinity();
      sum += std::log1p(g);
    }
    return pref * sum / kLn2;
  }

  double rate_derivative(double rho, int j) const {
    const double split = std::max(1e-300, 1.0 - rho);
    double acc = 0.0;
    for (int k = 0; k < n_subcarriers; ++k) {
      const double g = gamma(rho, j, k);
      const double dg = -alpha[j][k] / std::sqrt(split) + beta[j][k];
      acc += dg / (1.0 + g);
    }
    return pref * acc / kLn2;
  }
};

std::shared_ptr<SplitCtx> make_split_ctx(
    const SystemParams& params, const ChannelSet& channels,
    const std::vector<std::vector<double>>& powers,
    const fp::SurrogateState& state) {
  auto ctx = std::make_shared<SplitCtx>();
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int len = channels.max_length;
  ctx->n_receivers = j_count;
  ctx->n_subcarriers = n;
  ctx->pref = params.bandwidth_hz / (n + len - 1);
  ctx->alpha.assign(j_count, std::vector<double>(n, 0.0));
  ctx->beta.assign(j_count, std::vector<double>(n, 0.0));
  ctx->cterm.assign(j_count, std::vector<double>(n, 0.0));
  ctx->eh_slope.assign(j_count, 0.0);
  for (int j = 0; j < j_count; ++j) {
    double os_energy = 0.0;
    for (int k = 0; k < n; ++k) {
      const double psi = state.psi_siso[j][k];
      ctx->alpha[j][k] = psi * std::abs(channels.H(j)[k]) *
                         std::sqrt(static_cast<double>(n) * powers[j][k]);
      double interference = 0.0;
      for (int jp = 0; jp < j_count; ++jp) {
        if (jp == j) continue;
        interference += conv_gain(params, channels, j, jp, k) * powers[jp][k];
      }
      ctx->beta[j][k] = psi * psi * (n * interference + params.antenna_noise_w);
      ctx->cterm[j][k] = psi * psi * params.conversion_noise_w;
      for (int jp = 0; jp < j_count; ++jp) {
        os_energy += conv_gain(params, channels, j, jp, k) * powers[jp][k];
      }
    }
    const double e_os = n * os_energy + n * params.antenna_noise_w;
    const double e_cp =
        (len - 1) * (params.tx_power_w * channels.tap_energy(j) +
                     params.antenna_noise_w);
    ctx->eh_slope[j] = (e_cp + e_os) / (n + len - 1);
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// MISO beam block

struct BeamCtx {
  int n_receivers, n_subcarriers, n_antennas;
  double pref;
  double budget;
  // rate term per (j,k): 2*lin . W_{j,k} - s_int * sum_{j'!=j} |H_j . W_{j'}|^2 - noise
  std::vector<std::vector<std::vector<cdouble>>> rate_lin;  // [j][k][m]
  std::vector<std::vector<double>> s_int;                  // [j][k]
  std::vector<std::vector<double>> noise;                  // [j][k]
  std::vector<std::vector<std::vector<cdouble>>> h_row;    // [j][k][m]
  // EH: P_j(W) = eh_const[j] + eh_scale[j] * sum_k sum_j' (2 Re(q . W_{j',k}) - |psi|^2)
  std::vector<double> eh_const, eh_scale;
  std::vector<std::vector<std::vector<std::vector<cdouble>>>> eh_lin;  // [j][k][j'][m]
  std::vector<std::vector<std::vector<double>>> eh_norm;  // [j][k][j'] = |psi|^2

  int w_offset(int j, int k) const {
    return (j * n_subcarriers + k) * 2 * n_antennas;
  }

  cdouble beam_value(std::span<const double> x, int j, int k, int jp) const {
    cdouble u{0.0, 0.0};
    const int off = w_offset(jp, k);
    for (int m = 0; m < n_antennas; ++m) {
      u += h_row[j][k][m] * cdouble{x[off + 2 * m], x[off + 2 * m + 1]};
    }
    return u;
  }

  double inner(std::span<const double> x, int j, int k) const {
    double lin = 0.0;
    const int off = w_offset(j, k);
    for (int m = 0; m < n_antennas; ++m) {
      const cdouble c = rate_lin[j][k][m];
      lin += c.real() * x[off + 2 * m] - c.imag() * x[off + 2 * m + 1];
    }
    double interference = 0.0;
    for (int jp = 0; jp < n_receivers; ++jp) {
      if (jp == j) continue;
      interference += std::norm(beam_value(x, j, k, jp));
    }
    return 2.0 * lin - s_int[j][k] * interference - noise[j][k];
  }

  double rate(std::span<const double> x, int j) const {
    double sum = 0.0;
    for (int k = 0; k < n_subcarriers; ++k) {
      const double g = inner(x, j, k);
      if (g <= -1.0) return -std::numeric_limits<double>::infinity();
      sum += std::log1p(g);
    }
    return pref * sum / kLn2;
  }

  void rate_gradient(std::span<const double> x, int j,
                     std::span<double> grad) const {
    for (int k = 0; k < n_subcarriers; ++k) {
      const double g = inner(x, j, k);
      const double chain = pref / (kLn2 * (1.0 + g));
      const int own = w_offset(j, k);
      for (int m = 0; m < n_antennas; ++m) {
        const cdouble c = rate_lin[j][k][m];
        grad[own + 2 * m] += chain * 2.0 * c.real();
        grad[own + 2 * m + 1] -= chain * 2.0 * c.imag();
      }
      for (int jp = 0; jp < n_receivers; ++jp) {
        if (jp == j) continue;
        const cdouble u = beam_value(x, j, k, jp);
        const int off = w_offset(jp, k);
        for (int m = 0; m < n_antennas; ++m) {
          const cdouble d = std::conj(u) * h_row[j][k][m];
          grad[off + 2 * m] -= chain * s_int[j][k] * 2.0 * d.real();
          grad[off + 2 * m + 1] += chain * s_int[j][k] * 2.0 * d.imag();
        }
      }
    }
  }

  double eh_power(std::span<const double> x, int j) const {
    double acc = 0.0;
    for (int k = 0; k < n_subcarriers; ++k) {
      for (int jp = 0; jp < n_receivers; ++jp) {
        double lin = 0.0;
        const int off = w_offset(jp, k);
        for (int m = 0; m < n_antennas; ++m) {
          const cdouble q = eh_lin[j][k][jp][m];
          lin += q.real() * x[off + 2 * m] - q.imag() * x[off + 2 * m + 1];
        }
        acc += 2.0 * lin - eh_norm[j][k][jp];
      }
    }
    return eh_const[j] + eh_scale[j] * acc;
  }

  void eh_gradient(std::span<const double>, int j, std::span<double> grad) const {
    for (int k = 0; k < n_subcarriers; ++k) {
      for (int jp = 0; jp < n_receivers; ++jp) {
        const int off = w_offset(jp, k);
        for (int m = 0; m < n_antennas; ++m) {
          const cdouble q = eh_lin[j][k][jp][m];
          grad[off + 2 * m] += eh_scale[j] * 2.0 * q.real();
          grad[off + 2 * m + 1] -= eh_scale[j] * 2.0 * q.imag();
        }
      }
    }
  }
};

std::shared_ptr<BeamCtx> make_beam_ctx(const SystemParams& params,
                                       const ChannelSet& channels,
                                       const std::vector<double>& rho,
                                       const fp::SurrogateState& state) {
  auto ctx = std::make_shared<BeamCtx>();
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int m_count = params.n_antennas;
  const int len = channels.max_length;
  ctx->n_receivers = j_count;
  ctx->n_subcarriers = n;
  ctx->n_antennas = m_count;
  ctx->pref = params.bandwidth_hz / (n + len - 1);
  ctx->budget = params.total_power_budget();
  ctx->rate_lin.assign(
      j_count, std::vector<std::vector<cdouble>>(n, std::vector<cdouble>(m_count)));
  ctx->s_int.assign(j_count, std::vector<double>(n, 0.0));
  ctx->noise.assign(j_count, std::vector<double>(n, 0.0));
  ctx->h_row = ctx->rate_lin;
  ctx->eh_const.assign(j_count, 0.0);
  ctx->eh_scale.assign(j_count, 0.0);
  ctx->eh_lin.assign(j_count,
                     std::vector<std::vector<std::vector<cdouble>>>(
                         n, std::vector<std::vector<cdouble>>(
                                j_count, std::vector<cdouble>(m_count))));
  ctx->eh_norm.assign(j_count, std::vector<std::vector<double>>(
                                   n, std::vector<double>(j_count, 0.0)));
  const double m2 = static_cast<double>(m_count) * m_count;
  for (int j = 0; j < j_count; ++j) {
    const double split = 1.0 - rho[j];
    const double amp = std::sqrt(std::max(0.0, n * split));
    for (int k = 0; k < n; ++k) {
      const cdouble psi = state.psi_id[j][k];
      for (int m = 0; m < m_count; ++m) {
        const cdouble h = channels.H(j, m)[k];
        ctx->h_row[j][k][m] = h;
        ctx->rate_lin[j][k][m] = amp * std::conj(psi) * h;
      }
      ctx->s_int[j][k] = std::norm(psi) * n * split;
      ctx->noise[j][k] =
          std::norm(psi) * (split * params.antenna_noise_w + params.conversion_noise_w);
      for (int jp = 0; jp < j_count; ++jp) {
        const cdouble psi_eh = state.psi_eh[j][k][jp];
        for (int m = 0; m < m_count; ++m) {
          ctx->eh_lin[j][k][jp][m] = std::conj(psi_eh) * channels.H(j, m)[k];
        }
        ctx->eh_norm[j][k][jp] = std::norm(psi_eh);
      }
    }
    ctx->eh_const[j] = rho[j] * (len - 1) * m2 * params.tx_power_w *
                           channels.tap_energy(j) / (n + len - 1) +
                       rho[j] * params.antenna_noise_w;
    ctx->eh_scale[j] = rho[j] * n / (n + len - 1.0);
  }
  return ctx;
}

// ---------------------------------------------------------------------------
// MISO split block

struct MisoSplitCtx {
  int n_receivers, n_subcarriers;
  double pref;
  std::vector<std::vector<double>> alpha, beta, cterm;  // [j][k]
  std::vector<double> eh_slope;                         // P_j = rho_j * slope

  double gamma(double rho, int j, int k) const {
    const double split = std::max(0.0, 1.0 - rho);
    return alpha[j][k] * std::sqrt(split) - beta[j][k] * split - cterm[j][k];
  }
  double rate(double rho, int j) const {
    double sum = 0.0;
    for (int k = 0; k < n_subcarriers; ++k) {
      const double g = gamma(rho, j, k);
      if (g <= -1.0) return -std::numeric_limits<double>::infinity();
      sum += std::log1p(g);
    }
    return pref * sum / kLn2;
  }
  double rate_derivative(double rho, int j) const {
    const double split = std::max(1e-300, 1.0 - rho);
    double acc = 0.0;
    for (int k = 0; k < n_subcarriers; ++k) {
      const double g = gamma(rho, j, k);
      const double dg = -0.5 * alpha[j][k] / std::sqrt(split) + beta[j][k];
      acc += dg / (1.0 + g);
    }
    return pref * acc / kLn2;
  }
};

std::shared_ptr<MisoSplitCtx> make_miso_split_ctx(
    const SystemParams& params, const ChannelSet& channels,
    const ResourceAllocation& alloc, const fp::SurrogateState& state) {
  auto ctx = std::make_shared<MisoSplitCtx>();
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int len = channels.max_length;
  const double m2 =
      static_cast<double>(params.n_antennas) * params.n_antennas;
  ctx->n_receivers = j_count;
  ctx->n_subcarriers = n;
  ctx->pref = params.bandwidth_hz / (n + len - 1);
  ctx->alpha.assign(j_count, std::vector<double>(n, 0.0));
  ctx->beta.assign(j_count, std::vector<double>(n, 0.0));
  ctx->cterm.assign(j_count, std::vector<double>(n, 0.0));
  ctx->eh_slope.assign(j_count, 0.0);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  for (int j = 0; j < j_count; ++j) {
    double eh_sum = 0.0;
    for (int k = 0; k < n; ++k) {
      const cdouble psi = state.psi_id[j][k];
      const cdouble own = beam_gain(channels, alloc, j, j, k);
      double interference = 0.0;
      for (int jp = 0; jp < j_count; ++jp) {
        if (jp == j) continue;
        interference += std::norm(beam_gain(channels, alloc, j, jp, k));
      }
      ctx->alpha[j][k] = 2.0 * sqrt_n * std::real(std::conj(psi) * own);
      ctx->beta[j][k] =
          std::norm(psi) * (n * interference + params.antenna_noise_w);
      ctx->cterm[j][k] = std::norm(psi) * params.conversion_noise_w;
      for (int jp = 0; jp < j_count; ++jp) {
        const cdouble psi_eh = state.psi_eh[j][k][jp];
        const cdouble gain = beam_gain(channels, alloc, j, jp, k);
        eh_sum += 2.0 * std::real(std::conj(psi_eh) * gain) - std::norm(psi_eh);
      }
    }
    ctx->eh_slope[j] = (len - 1) * m2 * params.tx_power_w *
                           channels.tap_energy(j) / (n + len - 1) +
                       n / (n + len - 1.0) * eh_sum + params.antenna_noise_w;
  }
  return ctx;
}

}  // namespace

// ---------------------------------------------------------------------------

BlockProgram siso_power_block(const SystemParams& params,
                              const ChannelSet& channels,
                              const std::vector<double>& split_ratios,
                              const fp::SurrogateState& state,
                              const std::vector<double>& eh_thresholds,
                              ObjectiveKind kind, double t_bound) {
  auto ctx = make_power_ctx(params, channels, split_ratios, state);
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int p_dim = j_count * n;
  const bool fair = kind == ObjectiveKind::fair;

  BlockProgram bp;
  bp.t_index = fair ? p_dim : -1;
  auto& prog = bp.program;
  prog.dim = fair ? p_dim + 1 : p_dim;

  if (fair) {
    const int t = bp.t_index;
    prog.objective = [t](std::span<const double> x) { return x[t]; };
    prog.objective_gradient = [t](std::span<const double>, std::span<double> g) {
      for (auto& v : g) v = 0.0;
      g[t] = 1.0;
    };
    for (int j = 0; j < j_count; ++j) {
      kernel::Constraint c;
      c.name = "rate_" + std::to_string(j);
      c.value = [ctx, j, t](std::span<const double> x) {
        return ctx->rate(x, j) - x[t];
      };
      c.gradient = [ctx, j, t](std::span<const double> x, std::span<double> g) {
        for (auto& v : g) v = 0.0;
        ctx->rate_gradient(x, j, g);
        g[t] = -1.0;
      };
      prog.inequalities.push_back(std::move(c));
    }
  } else {
    prog.objective = [ctx, j_count](std::span<const double> x) {
      double sum = 0.0;
      for (int j = 0; j < j_count; ++j) sum += ctx->rate(x, j);
      return sum;
    };
    prog.objective_gradient = [ctx, j_count](std::span<const double> x,
                                             std::span<double> g) {
      for (auto& v : g) v = 0.0;
      for (int j = 0; j < j_count; ++j) ctx->rate_gradient(x, j, g);
    };
    // keep iterates inside the objective's log domain: 1 + gamma~ > 0
    for (int j = 0; j < j_count; ++j) {
      for (int k = 0; k < n; ++k) {
        kernel::Constraint c;
        c.name = "domain_" + std::to_string(j) + "_" + std::to_string(k);
        c.value = [ctx, j, k](std::span<const double> x) {
          return ctx->gamma(x, j, k) + 1.0 - 1e-9;
        };
        c.gradient = [ctx, j, k](std::span<const double> x,
                                 std::span<double> g) {
          for (auto& v : g) v = 0.0;
          const double p_own = std::max(x[j * ctx->n_subcarriers + k], 1e-300);
          g[j * ctx->n_subcarriers + k] = ctx->amp[j][k] / std::sqrt(p_own);
          for (int jp = 0; jp < ctx->n_receivers; ++jp) {
            if (jp == j) continue;
            g[jp * ctx->n_subcarriers + k] = -ctx->quad[j][k][jp];
          }
        };
        prog.inequalities.push_back(std::move(c));
      }
    }
  }

  for (int j = 0; j < j_count; ++j) {
    if (eh_thresholds[j] <= 0.0) continue;  // vacuous constraint
    kernel::Constraint c;
    c.name = "eh_" + std::to_string(j);
    const double th = eh_thresholds[j];
    c.value = [ctx, j, th](std::span<const double> x) {
      return ctx->eh_power(x, j) - th;
    };
    c.gradient = [ctx, j](std::span<const double>, std::span<double> g) {
      for (auto& v : g) v = 0.0;
      for (int jp = 0; jp < ctx->n_receivers; ++jp) {
        for (int k = 0; k < ctx->n_subcarriers; ++k) {
          g[jp * ctx->n_subcarriers + k] = ctx->eh_coef[j][jp][k];
        }
      }
    };
    prog.inequalities.push_back(std::move(c));
  }

  kernel::LinearBudget budget;
  budget.name = "total_power";
  budget.weights.assign(prog.dim, 0.0);
  for (int i = 0; i < p_dim; ++i) budget.weights[i] = 1.0;
  budget.bound = params.total_power_budget();
  prog.budgets.push_back(std::move(budget));

  prog.box.lower.assign(prog.dim, 0.0);
  prog.box.upper.assign(prog.dim, params.total_power_budget());
  if (fair) {
    prog.box.lower[bp.t_index] = -t_bound;
    prog.box.upper[bp.t_index] = t_bound;
  }
  return bp;
}

BlockProgram siso_split_block(const SystemParams& params,
                              const ChannelSet& channels,
                              const std::vector<std::vector<double>>& powers,
                              const fp::SurrogateState& state,
                              const std::vector<double>& eh_thresholds,
                              ObjectiveKind kind, double t_bound) {
  auto ctx = make_split_ctx(params, channels, powers, state);
  const int j_count = params.n_receivers;
  const bool fair = kind == ObjectiveKind::fair;

  BlockProgram bp;
  bp.t_index = fair ? j_count : -1;
  auto& prog = bp.program;
  prog.dim = fair ? j_count + 1 : j_count;

  if (fair) {
    const int t = bp.t_index;
    prog.objective = [t](std::span<const double> x) { return x[t]; };
    prog.objective_gradient = [t](std::span<const double>, std::span<double> g) {
      for (auto& v : g) v = 0.0;
      g[t] = 1.0;
    };
    for (int j = 0; j < j_count; ++j) {
      kernel::Constraint c;
      c.name = "rate_" + std::to_string(j);
      c.value = [ctx, j, t](std::span<const double> x) {
        return ctx->rate(x[j], j) - x[t];
      };
      c.gradient = [ctx, j, t](std::span<const double> x, std::span<double> g) {
        for (auto& v : g) v = 0.0;
        g[j] = ctx->rate_derivative(x[j], j);
        g[t] = -1.0;
      };
      prog.inequalities.push_back(std::move(c));
    }
  } else {
    prog.objective = [ctx, j_count](std::span<const double> x) {
      double sum = 0.0;
      for (int j = 0; j < j_count; ++j) sum += ctx->rate(x[j], j);
      return sum;
    };
    prog.objective_gradient = [ctx, j_count](std::span<const double> x,
                                             std::span<double> g) {
      for (auto& v : g) v = 0.0;
      for (int j = 0; j < j_count; ++j) g[j] = ctx->rate_derivative(x[j], j);
    };
    for (int j = 0; j < j_count; ++j) {
      for (int k = 0; k < ctx->n_subcarriers; ++k) {
        kernel::Constraint c;
        c.name = "domain_" + std::to_string(j) + "_" + std::to_string(k);
        c.value = [ctx, j, k](std::span<const double> x) {
          return ctx->gamma(x[j], j, k) + 1.0 - 1e-9;
        };
        c.gradient = [ctx, j, k](std::span<const double> x,
                                 std::span<double> g) {
          for (auto& v : g) v = 0.0;
          const double split = std::max(1e-300, 1.0 - x[j]);
          g[j] = -ctx->alpha[j][k] / std::sqrt(split) + ctx->beta[j][k];
        };
        prog.inequalities.push_back(std::move(c));
      }
    }
  }

  for (int j = 0; j < j_count; ++j) {
    if (eh_thresholds[j] <= 0.0) continue;
    kernel::Constraint c;
    c.name = "eh_" + std::to_string(j);
    const double th = eh_thresholds[j];
    c.value = [ctx, j, th](std::span<const double> x) {
      return x[j] * ctx->eh_slope[j] - th;
    };
    c.gradient = [ctx, j](std::span<const double>, std::span<double> g) {
      for (auto& v : g) v = 0.0;
      g[j] = ctx->eh_slope[j];
    };
    prog.inequalities.push_back(std::move(c));
  }

  prog.box.lower.assign(prog.dim, 0.0);
  prog.box.upper.assign(prog.dim, 1.0);
  if (fair) {
    prog.box.lower[bp.t_index] = -t_bound;
    prog.box.upper[bp.t_index] = t_bound;
  }
  return bp;
}

BlockProgram miso_beam_block(const SystemParams& params,
                             const ChannelSet& channels,
                             const std::vector<double>& split_ratios,
                             const fp::SurrogateState& state,
                             const std::vector<double>& eh_thresholds,
                             ObjectiveKind kind, double t_bound,
                             bool margin_objective) {
  auto ctx = make_beam_ctx(params, channels, split_ratios, state);
  const int j_count = params.n_receivers;
  const int w_dim = j_count * params.n_subcarriers * 2 * params.n_antennas;
  const bool fair = margin_objective || kind == ObjectiveKind::fair;

  BlockProgram bp;
  bp.t_index = fair ? w_dim : -1;
  auto& prog = bp.program;
  prog.dim = fair ? w_dim + 1 : w_dim;

  if (fair) {
    const int t = bp.t_index;
    prog.objective = [t](std::span<const double> x) { return x[t]; };
    prog.objective_gradient = [t](std::span<const double>, std::span<double> g) {
      for (auto& v : g) v = 0.0;
      g[t] = 1.0;
    };
  } else {
    prog.objective = [ctx, j_count](std::span<const double> x) {
      double sum = 0.0;
      for (int j = 0; j < j_count; ++j) sum += ctx->rate(x, j);
      return sum;
    };
    prog.objective_gradient = [ctx, j_count](std::span<const double> x,
                                             std::span<double> g) {
      for (auto& v : g) v = 0.0;
      for (int j = 0; j < j_count; ++j) ctx->rate_gradient(x, j, g);
    };
    for (int j = 0; j < j_count; ++j) {
      for (int k = 0; k < ctx->n_subcarriers; ++k) {
        kernel::Constraint c;
        c.name = "domain_" + std::to_string(j) + "_" + std::to_string(k);
        c.value = [ctx, j, k](std::span<const double> x) {
          return ctx->inner(x, j, k) + 1.0 - 1e-9;
        };
        c.gradient = [ctx, j, k](std::span<const double> x,
                                 std::span<double> g) {
          for (auto& v : g) v = 0.0;
          const int own = ctx->w_offset(j, k);
          for (int m = 0; m < ctx->n_antennas; ++m) {
            const cdouble coef = ctx->rate_lin[j][k][m];
            g[own + 2 * m] += 2.0 * coef.real();
            g[own + 2 * m + 1] -= 2.0 * coef.imag();
          }
          for (int jp = 0; jp < ctx->n_receivers; ++jp) {
            if (jp == j) continue;
            const cdouble u = ctx->beam_value(x, j, k, jp);
            const int off = ctx->w_offset(jp, k);
            for (int m = 0; m < ctx->n_antennas; ++m) {
              const cdouble d = std::conj(u) * ctx->h_row[j][k][m];
              g[off + 2 * m] -= ctx->s_int[j][k] * 2.0 * d.real();
              g[off + 2 * m + 1] += ctx->s_int[j][k] * 2.0 * d.imag();
            }
          }
        };
        prog.inequalities.push_back(std::move(c));
      }
    }
  }

  if (!margin_objective && fair) {
    const int t = bp.t_index;
    for (int j = 0; j < j_count; ++j) {
      kernel::Constraint c;
      c.name = "rate_" + std::to_string(j);
      c.value = [ctx, j, t](std::span<const double> x) {
        return ctx->rate(x, j) - x[t];
      };
      c.gradient = [ctx, j, t](std::span<const double> x, std::span<double> g) {
        for (auto& v : g) v = 0.0;
        ctx->rate_gradient(x, j, g);
        g[t] = -1.0;
      };
      prog.inequalities.push_back(std::move(c));
    }
  }

  for (int j = 0; j < j_count; ++j) {
    const double th = eh_thresholds[j];
    if (margin_objective) {
      // margin epigraph: P_j(W) - th_j - t >= 0
      const int t = bp.t_index;
      kernel::Constraint c;
      c.name = "margin_" + std::to_string(j);
      c.value = [ctx, j, th, t](std::span<const double> x) {
        return ctx->eh_power(x, j) - th - x[t];
      };
      c.gradient = [ctx, j, t](std::span<const double> x, std::span<double> g) {
        for (auto& v : g) v = 0.0;
        ctx->eh_gradient(x, j, g);
        g[t] = -1.0;
      };
      prog.inequalities.push_back(std::move(c));
    } else if (th > 0.0) {
      kernel::Constraint c;
      c.name = "eh_" + std::to_string(j);
      c.value = [ctx, j, th](std::span<const double> x) {
        return ctx->eh_power(x, j) - th;
      };
      c.gradient = [ctx, j](std::span<const double> x, std::span<double> g) {
        for (auto& v : g) v = 0.0;
        ctx->eh_gradient(x, j, g);
      };
      prog.inequalities.push_back(std::move(c));
    }
  }

  {
    kernel::Constraint c;
    c.name = "total_power";
    const double budget = ctx->budget;
    c.value = [w_dim, budget](std::span<const double> x) {
      double used = 0.0;
      for (int i = 0; i < w_dim; ++i) used += x[i] * x[i];
      return budget - used;
    };
    c.gradient = [w_dim](std::span<const double> x, std::span<double> g) {
      for (auto& v : g) v = 0.0;
      for (int i = 0; i < w_dim; ++i) g[i] = -2.0 * x[i];
    };
    prog.inequalities.push_back(std::move(c));
  }

  const double w_bound = std::sqrt(params.total_power_budget()) * 1.0000001;
  prog.box.lower.assign(prog.dim, -w_bound);
  prog.box.upper.assign(prog.dim, w_bound);
  if (fair) {
    prog.box.lower[bp.t_index] = -t_bound;
    prog.box.upper[bp.t_index] = t_bound;
  }
  return bp;
}

BlockProgram miso_split_block(const SystemParams& params,
                              const ChannelSet& channels,
                              const ResourceAllocation& alloc,
                              const fp::SurrogateState& state,
                              const std::vector<double>& eh_thresholds,
                              ObjectiveKind kind, double t_bound) {
  auto ctx = make_miso_split_ctx(params, channels, alloc, state);
  const int j_count = params.n_receivers;
  const bool fair = kind == ObjectiveKind::fair;

  BlockProgram bp;
  bp.t_index = fair ? j_count : -1;
  auto& prog = bp.program;
  prog.dim = fair ? j_count + 1 : j_count;

  if (fair) {
    const int t = bp.t_index;
    prog.objective = [t](std::span<const double> x) { return x[t]; };
    prog.objective_gradient = [t](std::span<const double>, std::span<double> g) {
      for (auto& v : g) v = 0.0;
      g[t] = 1.0;
    };
    for (int j = 0; j < j_count; ++j) {
      kernel::Constraint c;
      c.name = "rate_" + std::to_string(j);
      c.value = [ctx, j, t](std::span<const double> x) {
        return ctx->rate(x[j], j) - x[t];
      };
      c.gradient = [ctx, j, t](std::span<const double> x, std::span<double> g) {
        for (auto& v : g) v = 0.0;
        g[j] = ctx->rate_derivative(x[j], j);
        g[t] = -1.0;
      };
      prog.inequalities.push_back(std::move(c));
    }
  } else {
    prog.objective = [ctx, j_count](std::span<const double> x) {
      double sum = 0.0;
      for (int j = 0; j < j_count; ++j) sum += ctx->rate(x[j], j);
      return sum;
    };
    prog.objective_gradient = [ctx, j_count](std::span<const double> x,
                                             std::span<double> g) {
      for (auto& v : g) v = 0.0;
      for (int j = 0; j < j_count; ++j) g[j] = ctx->rate_derivative(x[j], j);
    };
    for (int j = 0; j < j_count; ++j) {
      for (int k = 0; k < ctx->n_subcarriers; ++k) {
        kernel::Constraint c;
        c.name = "domain_" + std::to_string(j) + "_" + std::to_string(k);
        c.value = [ctx, j, k](std::span<const double> x) {
          return ctx->gamma(x[j], j, k) + 1.0 - 1e-9;
        };
        c.gradient = [ctx, j, k](std::span<const double> x,
                                 std::span<double> g) {
          for (auto& v : g) v = 0.0;
          const double split = std::max(1e-300, 1.0 - x[j]);
          g[j] = -0.5 * ctx->alpha[j][k] / std::sqrt(split) + ctx->beta[j][k];
        };
        prog.inequalities.push_back(std::move(c));
      }
    }
  }

  for (int j = 0; j < j_count; ++j) {
    if (eh_thresholds[j] <= 0.0) continue;
    kernel::Constraint c;
    c.name = "eh_" + std::to_string(j);
    const double th = eh_thresholds[j];
    c.value = [ctx, j, th](std::span<const double> x) {
      return x[j] * ctx->eh_slope[j] - th;
    };
    c.gradient = [ctx, j](std::span<const double>, std::span<double> g) {
      for (auto& v : g) v = 0.0;
      g[j] = ctx->eh_slope[j];
    };
    prog.inequalities.push_back(std::move(c));
  }

  prog.box.lower.assign(prog.dim, 0.0);
  prog.box.upper.assign(prog.dim, 1.0);
  if (fair) {
    prog.box.lower[bp.t_index] = -t_bound;
    prog.box.upper[bp.t_index] = t_bound;
  }
  return bp;
}

}  // namespace idet::opt::blocks
