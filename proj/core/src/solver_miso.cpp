// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "idet/blocks.hpp"
#include "idet/solver.hpp"
#include "solver_util.hpp"

namespace idet::opt {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxOuter = 200;

double fair_or_sum(const std::vector<double>& values, ObjectiveKind kind) {
  if (kind == ObjectiveKind::fair) {
    return *std::min_element(values.begin(), values.end());
  }
  double s = 0.0;
  for (double v : values) s += v;
  return s;
}

double surrogate_objective(const SystemParams& params,
                           const ChannelSet& channels,
                           const ResourceAllocation& alloc,
                           const fp::SurrogateState& state,
                           ObjectiveKind kind) {
  std::vector<double> rates(params.n_receivers);
  try {
    for (int j = 0; j < params.n_receivers; ++j) {
      rates[j] = fp::r_hat_miso(params, channels, alloc, state, j);
    }
  } catch (const SurrogateDomainError&) {
    return kNegInf;
  }
  return fair_or_sum(rates, kind);
}

double eh_margin(const SystemParams& params, const ChannelSet& channels,
                 const ResourceAllocation& alloc,
                 const fp::SurrogateState& state,
                 const std::vector<double>& thresholds) {
  double margin = std::numeric_limits<double>::infinity();
  for (int j = 0; j < params.n_receivers; ++j) {
    margin = std::min(margin, fp::p_hat_eh_miso(params, channels, alloc,
                                                state, j) -
                                  thresholds[j]);
  }
  return margin;
}

bool block_feasible(const SystemParams& params, const ChannelSet& channels,
                    const ResourceAllocation& alloc,
                    const fp::SurrogateState& state,
                    const std::vector<double>& thresholds) {
  double used = 0.0;
  for (const auto& per_user : alloc.beamformers) {
    for (const auto& beam : per_user) {
      for (const auto& w : beam) used += std::norm(w);
    }
  }
  if (used > params.total_power_budget() * (1.0 + detail::kFeasSlack) +
                 detail::kFeasSlack) {
    return false;
  }
  return eh_margin(params, channels, alloc, state, thresholds) >
         -detail::kFeasSlack;
}

void write_beams(const std::vector<double>& x, ResourceAllocation& alloc,
                 int j_count, int n, int m_count) {
  for (int j = 0; j < j_count; ++j) {
    for (int k = 0; k < n; ++k) {
      const int off = (j * n + k) * 2 * m_count;
      for (int m = 0; m < m_count; ++m) {
        alloc.beamformers[j][k][m] = {x[off + 2 * m], x[off + 2 * m + 1]};
      }
    }
  }
  alloc.sync_envelope_powers();
}

std::vector<double> read_beams(const ResourceAllocation& alloc, int j_count,
                               int n, int m_count, std::size_t dim) {
  std::vector<double> x(dim, 0.0);
  for (int j = 0; j < j_count; ++j) {
    for (int k = 0; k < n; ++k) {
      const int off = (j * n + k) * 2 * m_count;
      for (int m = 0; m < m_count; ++m) {
        x[off + 2 * m] = alloc.beamformers[j][k][m].real();
        x[off + 2 * m + 1] = alloc.beamformers[j][k][m].imag();
      }
    }
  }
  return x;
}

void fill_residuals(const SystemParams& params, const ChannelSet& channels,
                    const ResourceAllocation& alloc, MisoSolveReport& report) {
  report.feasibility_residuals["budget"] =
      std::max(0.0, alloc.total_power() - params.total_power_budget());
  double rho_violation = 0.0;
  for (double r : alloc.split_ratios) {
    rho_violation = std::max({rho_violation, -r, r - 1.0});
  }
  report.feasibility_residuals["rho_range"] = rho_violation;
  double envelope = 0.0;
  for (std::size_t j = 0; j < alloc.beamformers.size(); ++j) {
    for (std::size_t k = 0; k < alloc.beamformers[j].size(); ++k) {
      double e = 0.0;
      for (const auto& w : alloc.beamformers[j][k]) e += std::norm(w);
      envelope = std::max(envelope, e - alloc.powers[j][k]);
    }
  }
  report.feasibility_residuals["beam_envelope"] = envelope;
  for (int j = 0; j < params.n_receivers; ++j) {
    const double dc =
        dc_output(params, eh_power_bound_miso(params, channels, alloc, j));
    report.feasibility_residuals["dc_user_" + std::to_string(j)] =
        std::max(0.0, params.dc_requirements_a[j] - dc);
  }
}

MisoSolveReport run_alternation(const SystemParams& params,
                                const ChannelSet& channels, ObjectiveKind kind,
                                std::uint64_t seed, const MisoInit& init,
                                const std::vector<double>& rho_init,
                                bool tight_psi_init,
                                const ResourceAllocation* beam_init = nullptr) {
  detail::WallTimer timer;
  MisoSolveReport report;
  report.objective_kind = kind;
  report.seed = seed;

  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int m_count = params.n_antennas;
  const auto thresholds = detail::eh_thresholds(params);

  ResourceAllocation alloc = beam_init ? *beam_init : init.allocation;
  alloc.split_ratios = rho_init;
  fp::SurrogateState state = fp::SurrogateState::ones_miso(j_count, n);
  state.psi_eh = init.psi.psi_eh;  // carried over from the feasibility stage
  if (beam_init) fp::update_psi_eh_miso(channels, alloc, state);
  if (tight_psi_init ||
      !std::isfinite(surrogate_objective(params, channels, alloc, state,
                                         kind))) {
    // psi_id = 1 can leave the surrogate outside its log domain at high
    // noise; fall back to the tight closed-form values
    fp::update_psi_id_miso(params, channels, alloc, state);
  }

  double t_bound = 1.0;
  for (int j = 0; j < j_count; ++j) {
    t_bound = std::max(t_bound, throughput_upper_bound(params, channels, j));
  }
  t_bound = 10.0 * (1.0 + t_bound) * (kind == ObjectiveKind::sum ? j_count : 1);

  kernel::SolveOptions kernel_opts;
  double previous = kNegInf;
  bool converged = false;
  double kkt_beam = 0.0;
  double kkt_split = 0.0;

  for (int outer = 0; outer < kMaxOuter; ++outer) {
    // beamformer block
    {
      auto bp = blocks::miso_beam_block(params, channels, alloc.split_ratios,
                                        state, thresholds, kind, t_bound);
      auto x0 = read_beams(alloc, j_count, n, m_count, bp.program.dim);
      const double old_value =
          surrogate_objective(params, channels, alloc, state, kind);
      const bool old_valid =
          std::isfinite(old_value) &&
          block_feasible(params, channels, alloc, state, thresholds);
      if (bp.t_index >= 0) {
        x0[bp.t_index] = std::isfinite(old_value)
                             ? std::clamp(old_value - 1e-3 * (1.0 + std::abs(old_value)),
                                          -t_bound + 1e-6, t_bound - 1e-6)
                             : 0.0;
      }
      auto sol = kernel::solve(bp.program, x0, kernel_opts);
      if (sol.status == kernel::Status::converged ||
          sol.status == kernel::Status::max_iter) {
        ResourceAllocation candidate = alloc;
        write_beams(sol.x, candidate, j_count, n, m_count);
        const double new_value =
            surrogate_objective(params, channels, candidate, state, kind);
        if (!old_valid ||
            new_value >= old_value - 1e-12 * (1.0 + std::abs(old_value))) {
          alloc = std::move(candidate);
          kkt_beam = sol.kkt_residual;
        }
      } else if (!old_valid) {
        report.status = SolveStatus::infeasible;
        report.allocation = alloc;
        fill_residuals(params, channels, report.allocation, report);
        report.iterations = outer;
        report.wall_time_s = timer.seconds();
        return report;
      }
    }

    // splitting block; thresholds uplifted a hair so the EH constraints do
    // not end up exactly binding, which would empty the beam block's
    // barrier interior
    {
      std::vector<double> uplifted = thresholds;
      for (auto& th : uplifted) {
        if (th > 0.0) th += 1e-5 * (1.0 + th);
      }
      auto bp = blocks::miso_split_block(params, channels, alloc, state,
                                         uplifted, kind, t_bound);
      std::vector<double> x0(bp.program.dim, 0.0);
      for (int j = 0; j < j_count; ++j) x0[j] = alloc.split_ratios[j];
      const double old_value =
          surrogate_objective(params, channels, alloc, state, kind);
      const bool old_valid =
          std::isfinite(old_value) &&
          block_feasible(params, channels, alloc, state, thresholds);
      if (bp.t_index >= 0) {
        x0[bp.t_index] = std::isfinite(old_value)
                             ? std::clamp(old_value - 1e-3 * (1.0 + std::abs(old_value)),
                                          -t_bound + 1e-6, t_bound - 1e-6)
                             : 0.0;
      }
      auto sol = kernel::solve(bp.program, x0, kernel_opts);
      if (sol.status == kernel::Status::converged ||
          sol.status == kernel::Status::max_iter) {
        ResourceAllocation candidate = alloc;
        for (int j = 0; j < j_count; ++j) {
          candidate.split_ratios[j] = std::clamp(sol.x[j], 0.0, 1.0);
        }
        const double new_value =
            surrogate_objective(params, channels, candidate, state, kind);
        if (!old_valid ||
            new_value >= old_value - 1e-12 * (1.0 + std::abs(old_value))) {
          alloc = std::move(candidate);
          kkt_split = sol.kkt_residual;
        }
      }
    }

    fp::update_psi_eh_miso(channels, alloc, state);
    fp::update_psi_id_miso(params, channels, alloc, state);
    const double current =
        surrogate_objective(params, channels, alloc, state, kind);
    report.objective_trace.push_back(current);
    report.iterations = outer + 1;
    if (outer > 0 && std::abs(current - previous) <
                         params.tolerance * params.bandwidth_hz) {
      converged = true;
      break;
    }
    previous = current;
  }

  report.allocation = alloc;
  report.objective =
      fair_or_sum(evaluate_operating_point(params, channels, alloc, kind)
                      .throughput_bps,
                  kind);
  report.stationarity_residual = std::max(kkt_beam, kkt_split);
  report.status = converged ? SolveStatus::converged : SolveStatus::max_iter;
  fill_residuals(params, channels, report.allocation, report);
  report.wall_time_s = timer.seconds();
  return report;
}

// Beam-and-psi alternation at fixed splits, for the pattern-search
// refinement over rho.
double fixed_rho_objective(const SystemParams& params,
                           const ChannelSet& channels, ObjectiveKind kind,
                           const std::vector<double>& rho,
                           const ResourceAllocation& warm,
                           const std::vector<double>& thresholds,
                           double t_bound, ResourceAllocation* out_alloc) {
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int m_count = params.n_antennas;
  ResourceAllocation alloc = warm;
  alloc.split_ratios = rho;
  fp::SurrogateState state = fp::SurrogateState::ones_miso(j_count, n);
  fp::update_psi_eh_miso(channels, alloc, state);
  fp::update_psi_id_miso(params, channels, alloc, state);

  kernel::SolveOptions kernel_opts;
  double previous = kNegInf;
  for (int outer = 0; outer < 60; ++outer) {
    auto bp = blocks::miso_beam_block(params, channels, alloc.split_ratios,
                                      state, thresholds, kind, t_bound);
    auto x0 = read_beams(alloc, j_count, n, m_count, bp.program.dim);
    const double old_value =
        surrogate_objective(params, channels, alloc, state, kind);
    const bool old_valid =
        std::isfinite(old_value) &&
        block_feasible(params, channels, alloc, state, thresholds);
    if (bp.t_index >= 0) {
      x0[bp.t_index] = std::isfinite(old_value)
                           ? std::clamp(old_value - 1e-3 * (1.0 + std::abs(old_value)),
                                        -t_bound + 1e-6, t_bound - 1e-6)
                           : 0.0;
    }
    auto sol = kernel::solve(bp.program, x0, kernel_opts);
    if (sol.status == kernel::Status::converged ||
        sol.status == kernel::Status::max_iter) {
      ResourceAllocation candidate = alloc;
      write_beams(sol.x, candidate, j_count, n, m_count);
      const double new_value =
          surrogate_objective(params, channels, candidate, state, kind);
      if (!old_valid ||
          new_value >= old_value - 1e-12 * (1.0 + std::abs(old_value))) {
        alloc = std::move(candidate);
      }
    } else if (!old_valid) {
      return kNegInf;
    }
    fp::update_psi_eh_miso(channels, alloc, state);
    fp::update_psi_id_miso(params, channels, alloc, state);
    const double current =
        surrogate_objective(params, channels, alloc, state, kind);
    if (outer > 0 && std::abs(current - previous) <
                         0.2 * params.tolerance * params.bandwidth_hz) {
      break;
    }
    previous = current;
  }
  if (!block_feasible(params, channels, alloc, state, thresholds)) {
    return kNegInf;
  }
  if (out_alloc) *out_alloc = alloc;
  return fair_or_sum(
      evaluate_operating_point(params, channels, alloc, kind).throughput_bps,
      kind);
}

void refine_splits(const SystemParams& params, const ChannelSet& channels,
                   ObjectiveKind kind, const std::vector<double>& thresholds,
                   MisoSolveReport& report) {
  if (report.status == SolveStatus::infeasible) return;
  const int j_count = params.n_receivers;
  double t_bound = 1.0;
  for (int j = 0; j < j_count; ++j) {
    t_bound = std::max(t_bound, throughput_upper_bound(params, channels, j));
  }
  t_bound = 10.0 * (1.0 + t_bound) * (kind == ObjectiveKind::sum ? j_count : 1);

  std::vector<double> rho = report.allocation.split_ratios;
  ResourceAllocation incumbent = report.allocation;
  double best = report.objective;
  int evals = 0;
  // all -1/0/+1 sign combinations over users: diagonal moves matter when two
  // splits must change together to stay on the EH boundary
  const int n_moves = [&] {
    int m = 1;
    for (int j = 0; j < j_count; ++j) m *= 3;
    return m;
  }();
  for (double delta : {0.08, 0.03, 0.01}) {
    for (int sweep = 0; sweep < 3; ++sweep) {
      bool improved = false;
      for (int move = 1; move < n_moves && evals < 80; ++move) {
        {
          auto candidate_rho = rho;
          int code = move;
          bool changed = false;
          for (int j = 0; j < j_count; ++j) {
            const int digit = code % 3;
            code /= 3;
            if (digit == 0) continue;
            const double sign = digit == 1 ? 1.0 : -1.0;
            candidate_rho[j] =
                std::clamp(rho[j] + sign * delta, 1e-6, 1.0 - 1e-9);
            changed |= candidate_rho[j] != rho[j];
          }
          if (!changed) continue;
          ResourceAllocation cand_alloc;
          const double value =
              fixed_rho_objective(params, channels, kind, candidate_rho,
                                  incumbent, thresholds, t_bound, &cand_alloc);
          ++evals;
          if (value > best + 1e-10 * (1.0 + std::abs(best))) {
            best = value;
            rho = candidate_rho;
            incumbent = cand_alloc;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }
  if (best > report.objective) {
    report.allocation = incumbent;
    report.objective = best;
    report.objective_trace.push_back(best);
    fill_residuals(params, channels, report.allocation, report);
  }
}

MisoSolveReport solve_miso(const SystemParams& params,
                           const ChannelSet& channels, ObjectiveKind kind,
                           std::uint64_t seed) {
  detail::WallTimer timer;
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int m_count = params.n_antennas;

  if (params.total_power_budget() <= 0.0) {
    MisoSolveReport report;
    report.objective_kind = kind;
    report.seed = seed;
    report.allocation = ResourceAllocation::zero(j_count, n, m_count);
    report.allocation.ensure_beamformers(m_count);
    for (auto& r : report.allocation.split_ratios) r = 1.0;
    bool feasible = true;
    for (int j = 0; j < j_count; ++j) {
      const double dc = dc_output(
          params, eh_power_bound_miso(params, channels, report.allocation, j));
      if (dc < params.dc_requirements_a[j] - 1e-12) feasible = false;
    }
    report.status =
        feasible ? SolveStatus::converged : SolveStatus::infeasible;
    report.objective = 0.0;
    report.objective_trace.push_back(0.0);
    fill_residuals(params, channels, report.allocation, report);
    report.wall_time_s = timer.seconds();
    return report;
  }
  params.validate();
  if (params.conversion_noise_w <= 0.0) {
    throw ConfigError("optimizers require a positive conversion noise floor");
  }

  const auto thresholds = detail::eh_thresholds(params);

  MisoInit init = init_feasible_miso(params, channels);
  if (!init.feasible) {
    MisoSolveReport report;
    report.objective_kind = kind;
    report.seed = seed;
    report.status = SolveStatus::infeasible;
    report.allocation = init.allocation;
    fill_residuals(params, channels, report.allocation, report);
    report.wall_time_s = timer.seconds();
    return report;
  }

  // same two-start policy as the SISO solvers so the M = 1 reduction lands
  // in matching basins
  std::vector<double> rho_one(j_count, 1.0 - detail::kRhoGuard);
  MisoSolveReport best =
      run_alternation(params, channels, kind, seed, init, rho_one, false);

  std::vector<double> rho_min(j_count);
  bool distinct = false;
  for (int j = 0; j < j_count; ++j) {
    // the harvested-power bound is linear in rho
    ResourceAllocation probe = init.allocation;
    probe.split_ratios.assign(j_count, 1.0);
    const double capacity = eh_power_bound_miso(params, channels, probe, j);
    const double needed =
        capacity > 0.0 ? thresholds[j] / capacity : (thresholds[j] > 0.0 ? 2.0 : 0.0);
    rho_min[j] = std::clamp(needed + 0.02, 0.02, 1.0 - detail::kRhoGuard);
    if (rho_min[j] < 0.9) distinct = true;
  }
  if (distinct) {
    MisoSolveReport alt =
        run_alternation(params, channels, kind, seed, init, rho_min, true);
    const bool alt_ok = alt.status != SolveStatus::infeasible;
    const bool best_ok = best.status != SolveStatus::infeasible;
    if (alt_ok && (!best_ok || alt.objective > best.objective)) {
      best = std::move(alt);
    }
  }

  // exclusive-subcarrier matched-filter start, mirroring the SISO seeding
  if (j_count > 1) {
    std::vector<std::vector<double>> h2(j_count, std::vector<double>(n, 0.0));
    for (int j = 0; j < j_count; ++j) {
      for (int k = 0; k < n; ++k) {
        for (int m = 0; m < m_count; ++m) {
          h2[j][k] += std::norm(channels.H(j, m)[k]);
        }
      }
    }
    // round-robin draft mirroring the SISO exclusive seeding
    std::vector<int> owner(n, -1);
    int unassigned = n;
    while (unassigned > 0) {
      for (int j = 0; j < j_count && unassigned > 0; ++j) {
        int pick = -1;
        double best_gain = -1.0;
        for (int k = 0; k < n; ++k) {
          if (owner[k] >= 0) continue;
          if (h2[j][k] > best_gain) {
            best_gain = h2[j][k];
            pick = k;
          }
        }
        if (pick >= 0) {
          owner[pick] = j;
          --unassigned;
        }
      }
    }
    ResourceAllocation exclusive =
        ResourceAllocation::zero(j_count, n, m_count);
    exclusive.ensure_beamformers(m_count);
    const double share = params.total_power_budget() / n;
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < j_count; ++j) {
        if (h2[j][k] <= 0.0) continue;
        const double power = j == owner[k]
                                 ? 0.96 * share
                                 : 0.04 * share / (j_count - 1);
        const double scale = std::sqrt(power / h2[j][k]);
        for (int m = 0; m < m_count; ++m) {
          exclusive.beamformers[j][k][m] =
              scale * std::conj(channels.H(j, m)[k]);
        }
      }
    }
    exclusive.sync_envelope_powers();
    MisoSolveReport alt =
        run_alternation(params, channels, kind, seed, init,
                        distinct ? rho_min : rho_one, true, &exclusive);
    const bool alt_ok = alt.status != SolveStatus::infeasible;
    const bool best_ok = best.status != SolveStatus::infeasible;
    if (alt_ok && (!best_ok || alt.objective > best.objective)) {
      best = std::move(alt);
    }
  }
  refine_splits(params, channels, kind, thresholds, best);
  best.wall_time_s = timer.seconds();
  return best;
}

}  // namespace

MisoInit init_feasible_miso(const SystemParams& params,
                            const ChannelSet& channels) {
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const int m_count = params.n_antennas;

  MisoInit init;
  init.allocation = ResourceAllocation::zero(j_count, n, m_count);
  init.allocation.ensure_beamformers(m_count);
  for (auto& r : init.allocation.split_ratios) r = 1.0;
  init.psi = fp::SurrogateState::ones_miso(j_count, n);

  const auto thresholds = detail::eh_thresholds(params);
  const bool any_threshold =
      std::any_of(thresholds.begin(), thresholds.end(),
                  [](double t) { return t > 0.0; });
  if (!any_threshold || params.total_power_budget() <= 0.0) {
    // vacuous DC requirements: zero beamformers qualify
    fp::update_psi_eh_miso(channels, init.allocation, init.psi);
    init.feasible = eh_margin(params, channels, init.allocation, init.psi,
                              thresholds) >= -1e-12;
    init.margin_trace.push_back(
        eh_margin(params, channels, init.allocation, init.psi, thresholds));
    return init;
  }

  // start from matched-filter beams at uniform power
  const double per_beam =
      params.total_power_budget() / (j_count * n) * (1.0 - 1e-9);
  for (int j = 0; j < j_count; ++j) {
    for (int k = 0; k < n; ++k) {
      double h2 = 0.0;
      for (int m = 0; m < m_count; ++m) h2 += std::norm(channels.H(j, m)[k]);
      if (h2 <= 0.0) continue;
      const double scale = std::sqrt(per_beam / h2);
      for (int m = 0; m < m_count; ++m) {
        init.allocation.beamformers[j][k][m] =
            scale * std::conj(channels.H(j, m)[k]);
      }
    }
  }
  init.allocation.sync_envelope_powers();

  double t_bound = 1.0 + std::abs(*std::max_element(thresholds.begin(),
                                                    thresholds.end()));
  for (int j = 0; j < j_count; ++j) {
    double peak_gain = 0.0;
    for (int k = 0; k < n; ++k) {
      double h2 = 0.0;
      for (int m = 0; m < m_count; ++m) h2 += std::norm(channels.H(j, m)[k]);
      peak_gain = std::max(peak_gain, h2);
    }
    const double m2 = static_cast<double>(m_count) * m_count;
    const double cap =
        (m2 * (channels.max_length - 1) * params.tx_power_w *
             channels.tap_energy(j) +
         n * peak_gain * params.total_power_budget()) /
            (n + channels.max_length - 1) +
        params.antenna_noise_w;
    t_bound = std::max(t_bound, cap);
  }
  t_bound *= 10.0;

  kernel::SolveOptions kernel_opts;
  double previous = kNegInf;
  for (int outer = 0; outer < kMaxOuter; ++outer) {
    auto bp = blocks::miso_beam_block(params, channels,
                                      init.allocation.split_ratios, init.psi,
                                      thresholds, ObjectiveKind::fair, t_bound,
                                      /*margin_objective=*/true);
    auto x0 = read_beams(init.allocation, j_count, n, m_count, bp.program.dim);
    const double old_margin =
        eh_margin(params, channels, init.allocation, init.psi, thresholds);
    x0[bp.t_index] = std::clamp(old_margin - 0.5 * (1.0 + std::abs(old_margin)),
                                -t_bound + 1e-6, t_bound - 1e-6);
    auto sol = kernel::solve(bp.program, x0, kernel_opts);
    if (sol.status == kernel::Status::converged ||
        sol.status == kernel::Status::max_iter) {
      ResourceAllocation candidate = init.allocation;
      write_beams(sol.x, candidate, j_count, n, m_count);
      const double new_margin =
          eh_margin(params, channels, candidate, init.psi, thresholds);
      if (new_margin >= old_margin - 1e-12 * (1.0 + std::abs(old_margin))) {
        init.allocation = std::move(candidate);
      }
    }

    fp::update_psi_eh_miso(channels, init.allocation, init.psi);
    const double margin =
        eh_margin(params, channels, init.allocation, init.psi, thresholds);
    init.margin_trace.push_back(margin);
    init.iterations = outer + 1;
    if (outer > 0 && std::abs(margin - previous) < params.tolerance) break;
    previous = margin;
  }

  init.feasible = init.margin_trace.back() >= -1e-12;
  return init;
}

MisoSolveReport solve_fair_miso(const SystemParams& params,
                                const ChannelSet& channels,
                                std::uint64_t seed) {
  return solve_miso(params, channels, ObjectiveKind::fair, seed);
}

MisoSolveReport solve_sum_miso(const SystemParams& params,
                               const ChannelSet& channels,
                               std::uint64_t seed) {
  return solve_miso(params, channels, ObjectiveKind::sum, seed);
}

}  // namespace idet::opt
