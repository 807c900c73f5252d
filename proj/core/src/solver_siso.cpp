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

double fair_or_sum(const std::vector<double>& rates, ObjectiveKind kind) {
  if (kind == ObjectiveKind::fair) {
    return *std::min_element(rates.begin(), rates.end());
  }
  double s = 0.0;
  for (double r : rates) s += r;
  return s;
}

// surrogate block objective at (p, rho) under the current psi; -inf when the
// surrogate is outside its log domain
double surrogate_objective(const SystemParams& params,
                           const ChannelSet& channels,
                           const ResourceAllocation& alloc,
                           const fp::SurrogateState& state,
                           ObjectiveKind kind) {
  std::vector<double> rates(params.n_receivers);
  try {
    for (int j = 0; j < params.n_receivers; ++j) {
      rates[j] = fp::r_tilde_siso(params, channels, alloc, state, j);
    }
  } catch (const SurrogateDomainError&) {
    return kNegInf;
  }
  return fair_or_sum(rates, kind);
}

bool eh_and_budget_feasible(const SystemParams& params,
                            const ChannelSet& channels,
                            const ResourceAllocation& alloc,
                            const std::vector<double>& thresholds) {
  if (alloc.total_power() >
      params.total_power_budget() * (1.0 + detail::kFeasSlack) +
          detail::kFeasSlack) {
    return false;
  }
  for (int j = 0; j < params.n_receivers; ++j) {
    const double margin = eh_power_siso(params, channels, alloc, j) -
                          thresholds[j];
    if (margin < -detail::kFeasSlack * (1.0 + std::abs(thresholds[j]))) {
      return false;
    }
  }
  return true;
}

void fill_residuals(const SystemParams& params, const ChannelSet& channels,
                    const ResourceAllocation& alloc, SolveReport& report) {
  report.feasibility_residuals["budget"] =
      std::max(0.0, alloc.total_power() - params.total_power_budget());
  double rho_violation = 0.0;
  for (double r : alloc.split_ratios) {
    rho_violation = std::max({rho_violation, -r, r - 1.0});
  }
  report.feasibility_residuals["rho_range"] = rho_violation;
  for (int j = 0; j < params.n_receivers; ++j) {
    const double dc =
        dc_output(params, eh_power_siso(params, channels, alloc, j));
    report.feasibility_residuals["dc_user_" + std::to_string(j)] =
        std::max(0.0, params.dc_requirements_a[j] - dc);
  }
}

// Zero-budget degenerate path: nothing to allocate; rho = 1 gives every
// harvester its maximum (noise-only) input.
SolveReport degenerate_zero_budget(const SystemParams& params,
                                   const ChannelSet& channels,
                                   ObjectiveKind kind, std::uint64_t seed) {
  SolveReport report;
  report.objective_kind = kind;
  report.seed = seed;
  report.allocation = ResourceAllocation::zero(
      params.n_receivers, params.n_subcarriers, 1);
  for (auto& rho : report.allocation.split_ratios) rho = 1.0;
  bool feasible = true;
  for (int j = 0; j < params.n_receivers; ++j) {
    const double dc = dc_output(
        params, eh_power_siso(params, channels, report.allocation, j));
    if (dc < params.dc_requirements_a[j] - 1e-12) feasible = false;
  }
  report.status = feasible ? SolveStatus::converged : SolveStatus::infeasible;
  report.objective = 0.0;
  report.objective_trace.push_back(0.0);
  fill_residuals(params, channels, report.allocation, report);
  return report;
}

// One run of the alternating loop from the given start.
SolveReport run_alternation(const SystemParams& params,
                            const ChannelSet& channels, ObjectiveKind kind,
                            std::uint64_t seed,
                            const std::vector<double>& rho_init,
                            bool tight_psi_init,
                            const std::vector<std::vector<double>>* p_init =
                                nullptr) {
  detail::WallTimer timer;
  SolveReport report;
  report.objective_kind = kind;
  report.seed = seed;

  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const double budget = params.total_power_budget();
  const auto thresholds = detail::eh_thresholds(params);

  ResourceAllocation alloc = ResourceAllocation::zero(j_count, n, 1);
  alloc.split_ratios = rho_init;
  if (p_init) {
    alloc.powers = *p_init;
  } else {
    for (auto& row : alloc.powers) {
      std::fill(row.begin(), row.end(), budget / (j_count * n));
    }
  }
  fp::SurrogateState state = fp::SurrogateState::ones_siso(j_count, n);
  if (tight_psi_init ||
      !std::isfinite(surrogate_objective(params, channels, alloc, state,
                                         kind))) {
    // psi = 1 sits outside the surrogate log domain at high noise
    fp::update_psi_siso(params, channels, alloc, state);
  }

  double t_bound = 1.0;
  for (int j = 0; j < j_count; ++j) {
    t_bound = std::max(t_bound, throughput_upper_bound(params, channels, j));
  }
  t_bound = 10.0 * (1.0 + t_bound) * (kind == ObjectiveKind::sum ? j_count : 1);

  kernel::SolveOptions kernel_opts;
  double previous = kNegInf;
  bool converged = false;

  for (int outer = 0; outer < kMaxOuter; ++outer) {
    // power block
    {
      auto bp = blocks::siso_power_block(params, channels, alloc.split_ratios,
                                         state, thresholds, kind, t_bound);
      std::vector<double> x0(bp.program.dim, 0.0);
      for (int j = 0; j < j_count; ++j) {
        for (int k = 0; k < n; ++k) x0[j * n + k] = alloc.powers[j][k];
      }
      const double old_value =
          surrogate_objective(params, channels, alloc, state, kind);
      const bool old_valid =
          std::isfinite(old_value) &&
          eh_and_budget_feasible(params, channels, alloc, thresholds);
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
          for (int k = 0; k < n; ++k) {
            candidate.powers[j][k] = std::max(0.0, sol.x[j * n + k]);
          }
        }
        const double new_value =
            surrogate_objective(params, channels, candidate, state, kind);
        if (!old_valid ||
            new_value >= old_value - 1e-12 * (1.0 + std::abs(old_value))) {
          alloc = std::move(candidate);
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

    // splitting block; the thresholds get a microscopic uplift so the EH
    // constraints stay strictly satisfiable for the next power block (the
    // split block would otherwise pin them exactly binding and empty the
    // barrier interior)
    {
      std::vector<double> uplifted = thresholds;
      for (auto& th : uplifted) {
        if (th > 0.0) th += 1e-5 * (1.0 + th);
      }
      auto bp = blocks::siso_split_block(params, channels, alloc.powers, state,
                                         uplifted, kind, t_bound);
      std::vector<double> x0(bp.program.dim, 0.0);
      for (int j = 0; j < j_count; ++j) x0[j] = alloc.split_ratios[j];
      const double old_value =
          surrogate_objective(params, channels, alloc, state, kind);
      const bool old_valid =
          std::isfinite(old_value) &&
          eh_and_budget_feasible(params, channels, alloc, thresholds);
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
        }
      }
    }

    // closed-form auxiliary update; the surrogate becomes tight, so the
    // traced value is the true throughput objective
    fp::update_psi_siso(params, channels, alloc, state);
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
  report.status = converged ? SolveStatus::converged : SolveStatus::max_iter;
  fill_residuals(params, channels, report.allocation, report);
  report.wall_time_s = timer.seconds();
  return report;
}

// Alternation with the splitting ratios held fixed: power block and psi
// updates only. Used by the pattern-search refinement below.
double fixed_rho_objective(const SystemParams& params,
                           const ChannelSet& channels, ObjectiveKind kind,
                           const std::vector<double>& rho,
                           const std::vector<std::vector<double>>& p_warm,
                           const std::vector<double>& thresholds,
                           double t_bound,
                           ResourceAllocation* out_alloc) {
  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  ResourceAllocation alloc = ResourceAllocation::zero(j_count, n, 1);
  alloc.split_ratios = rho;
  alloc.powers = p_warm;
  fp::SurrogateState state = fp::SurrogateState::ones_siso(j_count, n);
  fp::update_psi_siso(params, channels, alloc, state);

  kernel::SolveOptions kernel_opts;
  double previous = kNegInf;
  for (int outer = 0; outer < 60; ++outer) {
    auto bp = blocks::siso_power_block(params, channels, alloc.split_ratios,
                                       state, thresholds, kind, t_bound);
    std::vector<double> x0(bp.program.dim, 0.0);
    for (int j = 0; j < j_count; ++j) {
      for (int k = 0; k < n; ++k) x0[j * n + k] = alloc.powers[j][k];
    }
    const double old_value =
        surrogate_objective(params, channels, alloc, state, kind);
    const bool old_valid =
        std::isfinite(old_value) &&
        eh_and_budget_feasible(params, channels, alloc, thresholds);
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
        for (int k = 0; k < n; ++k) {
          candidate.powers[j][k] = std::max(0.0, sol.x[j * n + k]);
        }
      }
      const double new_value =
          surrogate_objective(params, channels, candidate, state, kind);
      if (!old_valid ||
          new_value >= old_value - 1e-12 * (1.0 + std::abs(old_value))) {
        alloc = std::move(candidate);
      }
    } else if (!old_valid) {
      return kNegInf;  // no feasible power allocation at this split
    }
    fp::update_psi_siso(params, channels, alloc, state);
    const double current =
        surrogate_objective(params, channels, alloc, state, kind);
    if (outer > 0 && std::abs(current - previous) <
                         0.2 * params.tolerance * params.bandwidth_hz) {
      break;
    }
    previous = current;
  }
  if (!eh_and_budget_feasible(params, channels, alloc, thresholds)) {
    return kNegInf;
  }
  if (out_alloc) *out_alloc = alloc;
  return fair_or_sum(
      evaluate_operating_point(params, channels, alloc, kind).throughput_bps,
      kind);
}

// Block-coordinate ascent can stall where an EH constraint couples rho and p
// along a curved boundary; a derivative-free pattern search over the (low
// dimensional) splits with exact concave power re-solves walks along that
// boundary.
void refine_splits(const SystemParams& params, const ChannelSet& channels,
                   ObjectiveKind kind, const std::vector<double>& thresholds,
                   SolveReport& report) {
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
          const double value = fixed_rho_objective(
              params, channels, kind, candidate_rho, incumbent.powers,
              thresholds, t_bound, &cand_alloc);
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

SolveReport solve_siso(const SystemParams& params, const ChannelSet& channels,
                       ObjectiveKind kind, std::uint64_t seed) {
  detail::WallTimer timer;

  if (params.total_power_budget() <= 0.0) {
    return degenerate_zero_budget(params, channels, kind, seed);
  }
  params.validate();
  if (params.conversion_noise_w <= 0.0) {
    throw ConfigError("optimizers require a positive conversion noise floor");
  }

  const int j_count = params.n_receivers;
  const int n = params.n_subcarriers;
  const auto thresholds = detail::eh_thresholds(params);
  const bool any_threshold =
      std::any_of(thresholds.begin(), thresholds.end(),
                  [](double t) { return t > 0.0; });

  // feasibility pre-check: EH + budget constraints at rho = 1
  if (any_threshold) {
    ResourceAllocation probe = ResourceAllocation::zero(j_count, n, 1);
    for (auto& r : probe.split_ratios) r = 1.0;
    fp::SurrogateState ones = fp::SurrogateState::ones_siso(j_count, n);
    auto bp = blocks::siso_power_block(params, channels, probe.split_ratios,
                                       ones, thresholds, ObjectiveKind::sum,
                                       0.0);
    // strip the rate objective: feasibility only
    bp.program.objective = [](std::span<const double>) { return 0.0; };
    bp.program.objective_gradient = [](std::span<const double>,
                                       std::span<double> g) {
      for (auto& v : g) v = 0.0;
    };
    if (!kernel::feasibility_phase1(bp.program)) {
      SolveReport report;
      report.objective_kind = kind;
      report.seed = seed;
      report.status = SolveStatus::infeasible;
      report.allocation = probe;
      fill_residuals(params, channels, report.allocation, report);
      report.wall_time_s = timer.seconds();
      return report;
    }
  }

  // block-coordinate ascent can land in different basins; run the
  // rho = 1 start and a minimal-split start, keep the better outcome
  std::vector<double> rho_one(j_count, 1.0 - detail::kRhoGuard);
  SolveReport best =
      run_alternation(params, channels, kind, seed, rho_one, false);

  ResourceAllocation uniform = ResourceAllocation::zero(j_count, n, 1);
  for (auto& r : uniform.split_ratios) r = 1.0;
  for (auto& row : uniform.powers) {
    std::fill(row.begin(), row.end(), params.tx_power_w / j_count);
  }
  std::vector<double> rho_min(j_count);
  bool distinct = false;
  for (int j = 0; j < j_count; ++j) {
    const double capacity = eh_power_siso(params, channels, uniform, j);
    const double needed =
        capacity > 0.0 ? thresholds[j] / capacity : (thresholds[j] > 0.0 ? 2.0 : 0.0);
    rho_min[j] = std::clamp(needed + 0.02, 0.02, 1.0 - detail::kRhoGuard);
    if (rho_min[j] < 0.9) distinct = true;
  }
  if (distinct) {
    SolveReport alt =
        run_alternation(params, channels, kind, seed, rho_min, true);
    const bool alt_ok = alt.status != SolveStatus::infeasible;
    const bool best_ok = best.status != SolveStatus::infeasible;
    if (alt_ok && (!best_ok || alt.objective > best.objective)) {
      best = std::move(alt);
    }
  }

  // exclusive-subcarrier start: the concave surrogate block cannot break
  // subcarrier symmetry on its own, so an FDMA-like seed reaches basins the
  // uniform starts miss (multiuser instances only)
  if (j_count > 1) {
    // round-robin draft: each user in turn claims its best unassigned
    // subcarrier, so every user gets spectrum
    std::vector<int> owner(n, -1);
    int unassigned = n;
    while (unassigned > 0) {
      for (int j = 0; j < j_count && unassigned > 0; ++j) {
        int pick = -1;
        double best_gain = -1.0;
        for (int k = 0; k < n; ++k) {
          if (owner[k] >= 0) continue;
          const double gain = std::norm(channels.H(j)[k]);
          if (gain > best_gain) {
            best_gain = gain;
            pick = k;
          }
        }
        if (pick >= 0) {
          owner[pick] = j;
          --unassigned;
        }
      }
    }
    std::vector<std::vector<double>> exclusive(
        j_count, std::vector<double>(n, 0.0));
    const double share = params.total_power_budget() / n;
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < j_count; ++j) {
        exclusive[j][k] =
            j == owner[k] ? 0.96 * share : 0.04 * share / (j_count - 1);
      }
    }
    SolveReport alt = run_alternation(params, channels, kind, seed,
                                      distinct ? rho_min : rho_one, true,
                                      &exclusive);
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

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iter:
      return "max-iter";
    case SolveStatus::infeasible:
      return "infeasible";
  }
  return "unknown";
}

double throughput_upper_bound(const SystemParams& params,
                              const ChannelSet& channels, int j) {
  const int n = params.n_subcarriers;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    double h2 = 0.0;
    for (int m = 0; m < channels.n_antennas; ++m) {
      h2 += std::norm(channels.H(j, m)[k]);
    }
    sum += std::log2(1.0 + static_cast<double>(n) * n * h2 *
                               params.tx_power_w / params.conversion_noise_w);
  }
  return params.bandwidth_hz / (n + channels.max_length - 1) * sum;
}

SolveReport solve_fair_siso(const SystemParams& params,
                            const ChannelSet& channels, std::uint64_t seed) {
  return solve_siso(params, channels, ObjectiveKind::fair, seed);
}

SolveReport solve_sum_siso(const SystemParams& params,
                           const ChannelSet& channels, std::uint64_t seed) {
  return solve_siso(params, channels, ObjectiveKind::sum, seed);
}

std::string SolveReport::to_json_string() const {
  nlohmann::json doc;
  doc["status"] = opt::to_string(status);
  doc["objective"] = objective;
  doc["objective_kind"] = objective_kind == ObjectiveKind::fair ? "fair" : "sum";
  doc["objective_trace"] = objective_trace;
  doc["feasibility_residuals"] = feasibility_residuals;
  doc["iterations"] = iterations;
  doc["seed"] = seed;
  doc["wall_time_s"] = wall_time_s;
  doc["allocation"] = detail::allocation_to_json(allocation);
  return doc.dump(2);
}

std::string MisoSolveReport::to_json_string() const {
  nlohmann::json doc;
  doc["status"] = opt::to_string(status);
  doc["objective"] = objective;
  doc["objective_kind"] = objective_kind == ObjectiveKind::fair ? "fair" : "sum";
  doc["objective_trace"] = objective_trace;
  doc["stationarity_residual"] = stationarity_residual;
  doc["feasibility_residuals"] = feasibility_residuals;
  doc["iterations"] = iterations;
  doc["seed"] = seed;
  doc["wall_time_s"] = wall_time_s;
  doc["allocation"] = detail::allocation_to_json(allocation);
  return doc.dump(2);
}

}  // namespace idet::opt
