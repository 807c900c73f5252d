// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "idet/fp.hpp"
#include "idet/model.hpp"
#include "idet/rng.hpp"
#include "idet/solver.hpp"
#include "test_support.hpp"

using namespace idet;

namespace {

// MISO instance sharing the channels of a SISO instance (M = 1).
testing::Instance as_m1_instance(const testing::Instance& siso) {
  testing::Instance inst = siso;
  inst.params.n_antennas = 1;
  return inst;
}

}  // namespace

TEST_SUITE_BEGIN("miso-optimizer");

TEST_CASE("feasibility initialization") {
  SUBCASE("vacuous DC requirements accept zero beams") {
    auto inst = testing::random_miso_instance(80000, 4, 2, 2, false);
    const auto init = opt::init_feasible_miso(inst.params, inst.channels);
    REQUIRE(init.feasible);
    CHECK(init.allocation.total_power() == 0.0);
  }

  SUBCASE("matched beam dominates random draws for one user") {
    auto inst = testing::random_miso_instance(80001, 4, 1, 2, true);
    REQUIRE(inst.params.n_receivers == 1);
    const auto init = opt::init_feasible_miso(inst.params, inst.channels);
    REQUIRE(init.feasible);
    const double threshold =
        eh_power_threshold(inst.params, inst.params.dc_requirements_a[0]);
    ResourceAllocation probe = init.allocation;
    const double achieved =
        eh_power_bound_miso(inst.params, inst.channels, probe, 0) - threshold;

    auto gen = rng::substream(80002, 0, 0);
    const int n = inst.params.n_subcarriers;
    const int m_count = inst.params.n_antennas;
    for (int draw = 0; draw < 1000; ++draw) {
      ResourceAllocation random_alloc =
          ResourceAllocation::zero(1, n, m_count);
      random_alloc.split_ratios[0] = 1.0;
      double used = 0.0;
      for (int k = 0; k < n; ++k) {
        for (int m = 0; m < m_count; ++m) {
          random_alloc.beamformers[0][k][m] = gen.next_cgaussian(1.0);
          used += std::norm(random_alloc.beamformers[0][k][m]);
        }
      }
      const double scale =
          std::sqrt(inst.params.total_power_budget() / used) *
          std::sqrt(gen.next_double());
      for (int k = 0; k < n; ++k) {
        for (int m = 0; m < m_count; ++m) {
          random_alloc.beamformers[0][k][m] *= scale;
        }
      }
      random_alloc.sync_envelope_powers();
      const double margin =
          eh_power_bound_miso(inst.params, inst.channels, random_alloc, 0) -
          threshold;
      CHECK(achieved >= margin - 1e-6);
    }
  }

  SUBCASE("impossible requirement reports infeasible") {
    auto inst = testing::random_miso_instance(80003, 4, 2, 2, true);
    for (auto& dc : inst.params.dc_requirements_a) dc = 1e9;
    const auto init = opt::init_feasible_miso(inst.params, inst.channels);
    CHECK_FALSE(init.feasible);
    const auto report = opt::solve_fair_miso(inst.params, inst.channels);
    CHECK(report.status == opt::SolveStatus::infeasible);
  }
}

TEST_CASE("M = 1 reduction matches the SISO solvers") {
  int compared = 0;
  for (int trial = 0; trial < 8; ++trial) {
    auto siso = testing::random_siso_instance(81000 + trial, 4, 2);
    auto miso = as_m1_instance(siso);
    const auto fair_siso = opt::solve_fair_siso(siso.params, siso.channels);
    const auto fair_miso = opt::solve_fair_miso(miso.params, miso.channels);
    REQUIRE(fair_siso.status == opt::SolveStatus::converged);
    REQUIRE(fair_miso.status == opt::SolveStatus::converged);
    CHECK(std::abs(fair_miso.objective - fair_siso.objective) <=
          1e-3 * std::max(1.0, std::abs(fair_siso.objective)));

    const auto sum_siso = opt::solve_sum_siso(siso.params, siso.channels);
    const auto sum_miso = opt::solve_sum_miso(miso.params, miso.channels);
    REQUIRE(sum_siso.status == opt::SolveStatus::converged);
    REQUIRE(sum_miso.status == opt::SolveStatus::converged);
    CHECK(std::abs(sum_miso.objective - sum_siso.objective) <=
          1e-3 * std::max(1.0, std::abs(sum_siso.objective)));
    ++compared;
  }
  CHECK(compared == 8);
}

TEST_CASE("symmetric two-user instance is balanced") {
  auto params = testing::base_params(2, 2, 2);
  params.dc_requirements_a = {0.05, 0.05};
  const CVec tap_a = {{0.8, 0.2}};
  const CVec tap_b = {{0.3, -0.5}};
  const auto channels =
      ChannelSet::from_taps(2, {{tap_a, tap_b}, {tap_a, tap_b}});
  const auto report = opt::solve_fair_miso(params, channels, 3);
  REQUIRE(report.status == opt::SolveStatus::converged);
  const auto point = evaluate_operating_point(params, channels,
                                              report.allocation,
                                              ObjectiveKind::fair);
  CHECK(point.throughput_bps[0] ==
        doctest::Approx(point.throughput_bps[1]).epsilon(1e-4));
}

TEST_CASE("single user drives the matched-filter direction") {
  // a flat two-antenna channel: the rate optimum aligns every beam with the
  // conjugate channel, reaching the Cauchy-Schwarz gain
  auto params = testing::base_params(2, 1, 2);
  params.dc_requirements_a = {0.01};
  const auto channels = ChannelSet::from_taps(
      2, {{{{1.2, 0.0}}, {{0.4, 0.9}}}});
  const auto report = opt::solve_fair_miso(params, channels, 11);
  REQUIRE(report.status == opt::SolveStatus::converged);
  double h2 = 0.0;
  for (int m = 0; m < 2; ++m) h2 += std::norm(channels.H(0, m)[0]);
  for (int k = 0; k < 2; ++k) {
    const double gain =
        std::norm(beam_gain(channels, report.allocation, 0, 0, k));
    const double power = report.allocation.powers[0][k];
    if (power > 1e-9) {
      CHECK(gain >= 0.999 * h2 * power);
    }
  }
}

TEST_CASE("traces are monotone and stationarity is tight") {
  for (int trial = 0; trial < 6; ++trial) {
    auto inst = testing::random_miso_instance(82000 + trial, 4, 2, 2);
    const auto init = opt::init_feasible_miso(inst.params, inst.channels);
    REQUIRE(init.feasible);
    for (std::size_t i = 1; i < init.margin_trace.size(); ++i) {
      CHECK(init.margin_trace[i] >= init.margin_trace[i - 1] - 1e-8);
    }

    for (const auto kind : {ObjectiveKind::fair, ObjectiveKind::sum}) {
      const auto report =
          kind == ObjectiveKind::fair
              ? opt::solve_fair_miso(inst.params, inst.channels)
              : opt::solve_sum_miso(inst.params, inst.channels);
      REQUIRE(report.status == opt::SolveStatus::converged);
      REQUIRE(report.iterations <= 200);
      for (std::size_t i = 1; i < report.objective_trace.size(); ++i) {
        CHECK(report.objective_trace[i] >=
              report.objective_trace[i - 1] - 1e-8);
      }
      CHECK(report.stationarity_residual <= 1e-5);

      // beam envelope and budget
      double used = 0.0;
      for (int j = 0; j < inst.params.n_receivers; ++j) {
        for (int k = 0; k < inst.params.n_subcarriers; ++k) {
          double e = 0.0;
          for (const auto& w : report.allocation.beamformers[j][k]) {
            e += std::norm(w);
          }
          CHECK(e <= report.allocation.powers[j][k] + 1e-9);
          used += e;
        }
      }
      CHECK(used <= inst.params.total_power_budget() + 1e-6);

      // diode requirements
      for (int j = 0; j < inst.params.n_receivers; ++j) {
        const double dc = dc_output(
            inst.params,
            eh_power_bound_miso(inst.params, inst.channels, report.allocation,
                                j));
        CHECK(dc >= inst.params.dc_requirements_a[j] - 1e-6);
      }

      // tightness of both surrogates at the returned point
      auto state = fp::SurrogateState::ones_miso(inst.params.n_receivers,
                                                 inst.params.n_subcarriers);
      fp::update_psi_eh_miso(inst.channels, report.allocation, state);
      fp::update_psi_id_miso(inst.params, inst.channels, report.allocation,
                             state);
      for (int j = 0; j < inst.params.n_receivers; ++j) {
        const double rate = throughput_miso(inst.params, inst.channels,
                                            report.allocation, j);
        const double hat = fp::r_hat_miso(inst.params, inst.channels,
                                          report.allocation, state, j);
        CHECK(std::abs(hat - rate) <= 1e-8 * std::max(1.0, rate));
        const double bound = eh_power_bound_miso(inst.params, inst.channels,
                                                 report.allocation, j);
        const double p_hat = fp::p_hat_eh_miso(inst.params, inst.channels,
                                               report.allocation, state, j);
        CHECK(std::abs(p_hat - bound) <= 1e-8 * std::max(1.0, bound));
      }
    }
  }
}

TEST_CASE("sum dominates J times the fair min-rate") {
  for (int trial = 0; trial < 3; ++trial) {
    auto inst = testing::random_miso_instance(83000 + trial, 4, 2, 2);
    const auto fair = opt::solve_fair_miso(inst.params, inst.channels);
    const auto sum = opt::solve_sum_miso(inst.params, inst.channels);
    REQUIRE(fair.status == opt::SolveStatus::converged);
    REQUIRE(sum.status == opt::SolveStatus::converged);
    CHECK(sum.objective >=
          inst.params.n_receivers * fair.objective - 1e-3);
  }
}

TEST_CASE("two-user flat-channel solves beat a rank-one oracle grid") {
  // flat channels: a grid over subcarrier-identical beams (magnitude angle,
  // phase, power split) with per-user minimal splits lower-bounds the optimum
  auto params = testing::base_params(2, 2, 2);
  params.antenna_noise_w = 0.08;
  params.conversion_noise_w = 0.04;
  params.dc_requirements_a = {0.08, 0.06};
  const CVec u0a = {{1.1, 0.0}};
  const CVec u0b = {{0.5, 0.5}};
  const CVec u1a = {{0.4, -0.3}};
  const CVec u1b = {{0.8, 0.1}};
  const auto channels = ChannelSet::from_taps(2, {{u0a, u0b}, {u1a, u1b}});

  const auto sum_report = opt::solve_sum_miso(params, channels, 17);
  REQUIRE(sum_report.status == opt::SolveStatus::converged);
  const auto fair_report = opt::solve_fair_miso(params, channels, 17);
  REQUIRE(fair_report.status == opt::SolveStatus::converged);

  const int res = 13;
  double best_sum = 0.0;
  double best_fair = 0.0;
  const double budget = params.total_power_budget();
  const double pi = 3.14159265358979;
  ResourceAllocation alloc = ResourceAllocation::zero(2, 2, 2);
  for (int iq = 1; iq < res; ++iq) {
    const double q0 = budget * iq / (res - 1);
    const double q1 = budget - q0;
    for (int ia0 = 0; ia0 < res; ++ia0) {
      for (int ip0 = 0; ip0 < res; ++ip0) {
        for (int ia1 = 0; ia1 < res; ++ia1) {
          for (int ip1 = 0; ip1 < res; ++ip1) {
            const double a0 = 0.5 * pi * ia0 / (res - 1);
            const double p0 = 2.0 * pi * ip0 / (res - 1);
            const double a1 = 0.5 * pi * ia1 / (res - 1);
            const double p1 = 2.0 * pi * ip1 / (res - 1);
            for (int k = 0; k < 2; ++k) {
              alloc.beamformers[0][k] = {
                  cdouble{std::sqrt(q0 / 2.0) * std::cos(a0), 0.0},
                  std::sqrt(q0 / 2.0) * std::sin(a0) *
                      cdouble{std::cos(p0), std::sin(p0)}};
              alloc.beamformers[1][k] = {
                  cdouble{std::sqrt(q1 / 2.0) * std::cos(a1), 0.0},
                  std::sqrt(q1 / 2.0) * std::sin(a1) *
                      cdouble{std::cos(p1), std::sin(p1)}};
            }
            alloc.sync_envelope_powers();
            double total = 0.0;
            double min_rate = 1e300;
            bool feasible = true;
            for (int j = 0; j < 2; ++j) {
              alloc.split_ratios[j] = 1.0;
              const double cap =
                  eh_power_bound_miso(params, channels, alloc, j);
              const double th =
                  eh_power_threshold(params, params.dc_requirements_a[j]);
              if (cap < th) {
                feasible = false;
                break;
              }
              alloc.split_ratios[j] = th / cap;
              const double rate = throughput_miso(params, channels, alloc, j);
              total += rate;
              min_rate = std::min(min_rate, rate);
            }
            if (feasible) {
              best_sum = std::max(best_sum, total);
              best_fair = std::max(best_fair, min_rate);
            }
          }
        }
      }
    }
  }
  CHECK(sum_report.objective >= best_sum - 5e-2);
  CHECK(fair_report.objective >= best_fair - 5e-2);
}

TEST_CASE("MISO report serializes beamformers as re/im pairs") {
  auto inst = testing::random_miso_instance(84000, 2, 2, 2);
  const auto report = opt::solve_fair_miso(inst.params, inst.channels, 55);
  const auto text = report.to_json_string();
  CHECK(text.find("\"beamformers\"") != std::string::npos);
  CHECK(text.find("\"stationarity_residual\"") != std::string::npos);
  CHECK(text.find("\"seed\": 55") != std::string::npos);
}

TEST_SUITE_END();
