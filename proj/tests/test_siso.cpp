// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "idet/fp.hpp"
#include "idet/model.hpp"
#include "idet/sim.hpp"
#include "idet/solver.hpp"
#include "test_support.hpp"

using namespace idet;

TEST_SUITE_BEGIN("siso-optimizer");

TEST_CASE("single user, vacuous DC, flat channel: uniform power and rho = 0") {
  auto params = testing::base_params(4, 1);
  params.antenna_noise_w = 0.2;
  params.conversion_noise_w = 0.1;
  params.tx_power_w = 1.5;
  // flat unit-gain channel: single tap of magnitude 2 -> |H_k|^2 = 1
  const auto channels = ChannelSet::from_taps(4, {{{{2.0, 0.0}}}});

  const auto report = opt::solve_fair_siso(params, channels, 99);
  REQUIRE(report.status == opt::SolveStatus::converged);

  // flat channel + symmetric concave objective force the uniform allocation;
  // with no DC requirement all power goes to the decoder
  const double gamma = 4.0 * 1.0 * params.tx_power_w /
                       (params.antenna_noise_w + params.conversion_noise_w);
  const double expected = params.bandwidth_hz / 4.0 * 4.0 * std::log2(1.0 + gamma);
  CHECK(report.objective == doctest::Approx(expected).epsilon(1e-4));
  CHECK(report.allocation.split_ratios[0] < 1e-3);
  for (int k = 0; k < 4; ++k) {
    CHECK(report.allocation.powers[0][k] ==
          doctest::Approx(params.tx_power_w).epsilon(1e-2));
  }
}

TEST_CASE("symmetric two-user instance stays symmetric") {
  auto params = testing::base_params(2, 2);
  params.dc_requirements_a = {0.05, 0.05};
  const CVec taps = {{0.9, 0.3}, {0.2, -0.1}};
  const auto channels = ChannelSet::from_taps(2, {{taps}, {taps}});

  const auto report = opt::solve_fair_siso(params, channels, 7);
  REQUIRE(report.status == opt::SolveStatus::converged);
  const auto point = evaluate_operating_point(params, channels,
                                              report.allocation,
                                              ObjectiveKind::fair);
  CHECK(point.throughput_bps[0] ==
        doctest::Approx(point.throughput_bps[1]).epsilon(1e-4));
  CHECK(report.allocation.split_ratios[0] ==
        doctest::Approx(report.allocation.split_ratios[1]).epsilon(1e-3));
}

TEST_CASE("fair and sum solvers beat the exhaustive grid") {
  for (int trial = 0; trial < 6; ++trial) {
    auto inst = testing::random_siso_instance(42000 + trial, 2, 2);
    REQUIRE(inst.params.n_subcarriers == 2);
    const auto grid = sim::grid_search_siso(inst.params, inst.channels, 21);
    REQUIRE(grid.any_feasible);

    const auto fair = opt::solve_fair_siso(inst.params, inst.channels);
    REQUIRE(fair.status == opt::SolveStatus::converged);
    CHECK(fair.objective >= grid.best_fair - 2e-2);

    const auto sum = opt::solve_sum_siso(inst.params, inst.channels);
    REQUIRE(sum.status == opt::SolveStatus::converged);
    CHECK(sum.objective >= grid.best_sum - 2e-2);
  }
}

TEST_CASE("trace is monotone, bounded, and tight at convergence") {
  for (int trial = 0; trial < 12; ++trial) {
    auto inst = testing::random_siso_instance(43000 + trial);
    const auto report = opt::solve_fair_siso(inst.params, inst.channels);
    REQUIRE(report.status == opt::SolveStatus::converged);
    REQUIRE(report.iterations <= 200);

    double bound = 1e300;
    for (int j = 0; j < inst.params.n_receivers; ++j) {
      bound = std::min(bound,
                       opt::throughput_upper_bound(inst.params, inst.channels, j));
    }
    for (std::size_t i = 0; i < report.objective_trace.size(); ++i) {
      if (i > 0) {
        CHECK(report.objective_trace[i] >=
              report.objective_trace[i - 1] - 1e-8);
      }
      CHECK(report.objective_trace[i] <= bound + 1e-9);
    }

    // tightness: the surrogate at the final psi equals the true throughput
    auto state = fp::SurrogateState::ones_siso(inst.params.n_receivers,
                                               inst.params.n_subcarriers);
    fp::update_psi_siso(inst.params, inst.channels, report.allocation, state);
    for (int j = 0; j < inst.params.n_receivers; ++j) {
      const double truth =
          throughput_siso(inst.params, inst.channels, report.allocation, j);
      const double surrogate = fp::r_tilde_siso(inst.params, inst.channels,
                                                report.allocation, state, j);
      CHECK(std::abs(surrogate - truth) <= 1e-8 * std::max(1.0, truth));
    }

    // feasibility per the acceptance thresholds
    CHECK(report.allocation.total_power() <=
          inst.params.total_power_budget() + 1e-6);
    for (int j = 0; j < inst.params.n_receivers; ++j) {
      CHECK(report.allocation.split_ratios[j] >= 0.0);
      CHECK(report.allocation.split_ratios[j] <= 1.0);
      const double dc = dc_output(
          inst.params,
          eh_power_siso(inst.params, inst.channels, report.allocation, j));
      CHECK(dc >= inst.params.dc_requirements_a[j] - 1e-6);
    }
  }
}

TEST_CASE("single user: fair equals sum") {
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = testing::random_siso_instance(44000 + trial, 8, 1);
    REQUIRE(inst.params.n_receivers == 1);
    const auto fair = opt::solve_fair_siso(inst.params, inst.channels);
    const auto sum = opt::solve_sum_siso(inst.params, inst.channels);
    REQUIRE(fair.status == opt::SolveStatus::converged);
    REQUIRE(sum.status == opt::SolveStatus::converged);
    CHECK(fair.objective ==
          doctest::Approx(sum.objective).epsilon(1e-4));
  }
}

TEST_CASE("sum objective dominates J times the fair min-rate") {
  for (int trial = 0; trial < 5; ++trial) {
    auto inst = testing::random_siso_instance(45000 + trial, 4, 3);
    const auto fair = opt::solve_fair_siso(inst.params, inst.channels);
    const auto sum = opt::solve_sum_siso(inst.params, inst.channels);
    REQUIRE(fair.status == opt::SolveStatus::converged);
    REQUIRE(sum.status == opt::SolveStatus::converged);
    CHECK(sum.objective >=
          inst.params.n_receivers * fair.objective - 1e-4);
  }
}

TEST_CASE("infeasible DC requirements are reported") {
  auto inst = testing::random_siso_instance(46000);
  for (auto& dc : inst.params.dc_requirements_a) dc = 1e9;
  const auto report = opt::solve_fair_siso(inst.params, inst.channels);
  CHECK(report.status == opt::SolveStatus::infeasible);
}

TEST_CASE("zero power budget degenerates gracefully") {
  auto params = testing::base_params(4, 2);
  params.tx_power_w = 0.0;
  const auto channels = generate_channels(4, 2, 1, 2, 0.5, 5);
  const auto report = opt::solve_fair_siso(params, channels);
  CHECK(report.status == opt::SolveStatus::converged);
  CHECK(report.objective == 0.0);
  CHECK(report.allocation.total_power() == 0.0);
}

TEST_CASE("solver output is deterministic") {
  auto inst = testing::random_siso_instance(47000);
  const auto a = opt::solve_fair_siso(inst.params, inst.channels, 1);
  const auto b = opt::solve_fair_siso(inst.params, inst.channels, 1);
  REQUIRE(a.status == b.status);
  CHECK(a.objective == b.objective);
  REQUIRE(a.objective_trace.size() == b.objective_trace.size());
  for (std::size_t i = 0; i < a.objective_trace.size(); ++i) {
    CHECK(a.objective_trace[i] == b.objective_trace[i]);
  }
  for (int j = 0; j < inst.params.n_receivers; ++j) {
    for (int k = 0; k < inst.params.n_subcarriers; ++k) {
      CHECK(a.allocation.powers[j][k] == b.allocation.powers[j][k]);
    }
  }
}

TEST_CASE("report serializes to JSON with the full trace") {
  auto inst = testing::random_siso_instance(48000);
  const auto report = opt::solve_fair_siso(inst.params, inst.channels, 321);
  const auto text = report.to_json_string();
  CHECK(text.find("\"objective_trace\"") != std::string::npos);
  CHECK(text.find("\"seed\": 321") != std::string::npos);
  CHECK(text.find("\"status\": \"converged\"") != std::string::npos);
}

TEST_SUITE_END();
