// SPDX-License-Identifier: Apache-2.0

#include <cmath>

#include "doctest.h"
#include "idet/fp.hpp"
#include "idet/model.hpp"
#include "idet/rng.hpp"
#include "test_support.hpp"

using namespace idet;

TEST_SUITE_BEGIN("fp");

TEST_CASE("gamma_tilde_siso spot values") {
  auto params = testing::base_params(2, 1);
  params.antenna_noise_w = 0.5;
  params.conversion_noise_w = 0.5;
  const auto channels = ChannelSet::from_taps(2, {{{{1.4142135623730951, 0.0}}}});
  auto alloc = ResourceAllocation::zero(1, 2, 1);
  alloc.powers[0][0] = 1.0;
  auto state = fp::SurrogateState::ones_siso(1, 2);

  SUBCASE("psi = 0 gives zero") {
    state.psi_siso[0][0] = 0.0;
    CHECK(fp::gamma_tilde_siso(params, channels, alloc, state, 0, 0) == 0.0);
  }
  SUBCASE("psi = 1 against the hand-computed value") {
    // denominator = 1, |H| = 1, (1-rho) N p = 2
    CHECK(fp::gamma_tilde_siso(params, channels, alloc, state, 0, 0) ==
          doctest::Approx(2.0 * std::sqrt(2.0) - 1.0).epsilon(1e-12));
  }
  SUBCASE("psi* reproduces the SINR exactly") {
    state.psi_siso[0][0] = fp::psi_star_siso(params, channels, alloc, 0, 0);
    CHECK(fp::gamma_tilde_siso(params, channels, alloc, state, 0, 0) ==
          doctest::Approx(sinr_siso(params, channels, alloc, 0, 0))
              .epsilon(1e-12));
  }
}

TEST_CASE("psi_star_siso spot values") {
  auto params = testing::base_params(2, 1);
  params.antenna_noise_w = 0.5;
  params.conversion_noise_w = 0.5;
  const auto channels = ChannelSet::from_taps(2, {{{{1.4142135623730951, 0.0}}}});
  auto alloc = ResourceAllocation::zero(1, 2, 1);

  CHECK(fp::psi_star_siso(params, channels, alloc, 0, 0) == 0.0);
  alloc.powers[0][0] = 1.0;
  CHECK(fp::psi_star_siso(params, channels, alloc, 0, 0) ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("SISO transform tightness on random instances") {
  for (int trial = 0; trial < 1000; ++trial) {
    auto inst = testing::random_siso_instance(2000 + trial);
    auto alloc = testing::random_allocation(inst.params, 3000 + trial);
    auto state = fp::SurrogateState::ones_siso(inst.params.n_receivers,
                                               inst.params.n_subcarriers);
    fp::update_psi_siso(inst.params, inst.channels, alloc, state);
    for (int j = 0; j < inst.params.n_receivers; ++j) {
      for (int k = 0; k < inst.params.n_subcarriers; ++k) {
        const double gamma = sinr_siso(inst.params, inst.channels, alloc, j, k);
        const double tilde =
            fp::gamma_tilde_siso(inst.params, inst.channels, alloc, state, j, k);
        CHECK(std::abs(tilde - gamma) <= 1e-9 * std::max(1.0, gamma));
      }
      const double rate = throughput_siso(inst.params, inst.channels, alloc, j);
      const double tilde_rate =
          fp::r_tilde_siso(inst.params, inst.channels, alloc, state, j);
      CHECK(std::abs(tilde_rate - rate) <= 1e-9 * std::max(1.0, rate));
    }
  }
}

TEST_CASE("psi_star maximizes the surrogate") {
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = testing::random_siso_instance(4000 + trial);
    auto alloc = testing::random_allocation(inst.params, 5000 + trial);
    auto state = fp::SurrogateState::ones_siso(inst.params.n_receivers,
                                               inst.params.n_subcarriers);
    const double star = fp::psi_star_siso(inst.params, inst.channels, alloc, 0, 0);
    state.psi_siso[0][0] = star;
    const double peak =
        fp::gamma_tilde_siso(inst.params, inst.channels, alloc, state, 0, 0);
    // local maximizer check at +-1e-3
    for (const double delta : {-1e-3, 1e-3}) {
      state.psi_siso[0][0] = star + delta;
      CHECK(fp::gamma_tilde_siso(inst.params, inst.channels, alloc, state, 0, 0) <
            peak);
    }
    // coarse scan never beats psi*
    for (int step = 0; step <= 100; ++step) {
      state.psi_siso[0][0] = star - 1.0 + 0.02 * step;
      CHECK(fp::gamma_tilde_siso(inst.params, inst.channels, alloc, state, 0,
                                 0) <= peak + 1e-12);
    }
  }
}

TEST_CASE("r_tilde_siso edge behavior") {
  auto inst = testing::random_siso_instance(6000);
  auto alloc = testing::random_allocation(inst.params, 6001);
  auto state = fp::SurrogateState::ones_siso(inst.params.n_receivers,
                                             inst.params.n_subcarriers);
  SUBCASE("psi = 0 gives zero rate") {
    for (auto& row : state.psi_siso) {
      for (auto& v : row) v = 0.0;
    }
    CHECK(fp::r_tilde_siso(inst.params, inst.channels, alloc, state, 0) == 0.0);
  }
  SUBCASE("surrogate domain error on absurd psi") {
    for (auto& row : state.psi_siso) {
      for (auto& v : row) v = 1e6;
    }
    CHECK_THROWS_AS(
        fp::r_tilde_siso(inst.params, inst.channels, alloc, state, 0),
        SurrogateDomainError);
  }
  SUBCASE("concavity along random power directions") {
    // second difference of R~ along a random direction in p stays <= 0
    fp::update_psi_siso(inst.params, inst.channels, alloc, state);
    auto gen = rng::substream(6002, 0, 0);
    for (int rep = 0; rep < 20; ++rep) {
      auto dir = alloc;
      for (auto& row : dir.powers) {
        for (auto& v : row) v = gen.next_double() - 0.5;
      }
      const double h = 1e-3;
      auto shifted = [&](double step) {
        auto a = alloc;
        for (std::size_t j = 0; j < a.powers.size(); ++j) {
          for (std::size_t k = 0; k < a.powers[j].size(); ++k) {
            a.powers[j][k] =
                std::max(1e-6, a.powers[j][k] + step * dir.powers[j][k]);
          }
        }
        return fp::r_tilde_siso(inst.params, inst.channels, a, state, 0);
      };
      const double second =
          shifted(h) - 2.0 * shifted(0.0) + shifted(-h);
      CHECK(second <= 1e-8);
    }
  }
}

TEST_CASE("MISO closed-form maximizers") {
  SUBCASE("psi_eh_star spot values") {
    auto params = testing::base_params(2, 1, 2);
    // H = [1/sqrt(2) * sqrt(2), 0] = [1, 0] per subcarrier
    const auto channels = ChannelSet::from_taps(
        2, {{{{1.4142135623730951, 0.0}}, {{0.0, 0.0}}}});
    auto alloc = ResourceAllocation::zero(1, 2, 2);
    SUBCASE("zero beam") {
      CHECK(fp::psi_eh_star(channels, alloc, 0, 0) == cdouble{0.0, 0.0});
    }
    SUBCASE("aligned unit beam") {
      alloc.beamformers[0][0] = {{1.0, 0.0}, {0.0, 0.0}};
      CHECK(std::abs(fp::psi_eh_star(channels, alloc, 0, 0) -
                     cdouble{1.0, 0.0}) < 1e-12);
    }
  }
  SUBCASE("psi_eh_star with a complex channel") {
    // H = [1/sqrt(2), i/sqrt(2)] on every subcarrier: taps scaled by sqrt(2)
    auto params = testing::base_params(2, 1, 2);
    const auto channels = ChannelSet::from_taps(
        2, {{{{1.0, 0.0}}, {{0.0, 1.0}}}});
    auto alloc = ResourceAllocation::zero(1, 2, 2);
    alloc.beamformers[0][0] = {{1.0, 0.0}, {0.0, 0.0}};
    CHECK(std::abs(fp::psi_eh_star(channels, alloc, 0, 0) -
                   cdouble{1.0 / std::sqrt(2.0), 0.0}) < 1e-12);
  }
  SUBCASE("psi_id_star vanishes with the beam or at full split") {
    auto inst = testing::random_miso_instance(7000);
    auto alloc = testing::random_allocation(inst.params, 7001);
    auto zeroed = alloc;
    for (auto& w : zeroed.beamformers[0][0]) w = {0.0, 0.0};
    zeroed.sync_envelope_powers();
    CHECK(std::abs(fp::psi_id_star(inst.params, inst.channels, zeroed, 0, 0)) ==
          0.0);
    auto split = alloc;
    split.split_ratios[0] = 1.0;
    CHECK(std::abs(fp::psi_id_star(inst.params, inst.channels, split, 0, 0)) ==
          0.0);
  }
}

TEST_CASE("MISO transform tightness on random instances") {
  for (int trial = 0; trial < 1000; ++trial) {
    auto inst = testing::random_miso_instance(8000 + trial);
    auto alloc = testing::random_allocation(inst.params, 9000 + trial);
    auto state = fp::SurrogateState::ones_miso(inst.params.n_receivers,
                                               inst.params.n_subcarriers);
    fp::update_psi_eh_miso(inst.channels, alloc, state);
    fp::update_psi_id_miso(inst.params, inst.channels, alloc, state);
    for (int j = 0; j < inst.params.n_receivers; ++j) {
      const double rate = throughput_miso(inst.params, inst.channels, alloc, j);
      const double hat =
          fp::r_hat_miso(inst.params, inst.channels, alloc, state, j);
      CHECK(std::abs(hat - rate) <= 1e-9 * std::max(1.0, rate));
      const double bound =
          eh_power_bound_miso(inst.params, inst.channels, alloc, j);
      const double p_hat =
          fp::p_hat_eh_miso(inst.params, inst.channels, alloc, state, j);
      CHECK(std::abs(p_hat - bound) <= 1e-9 * std::max(1.0, bound));
    }
  }
}

TEST_CASE("MISO surrogate caps at the true value for any psi") {
  for (int trial = 0; trial < 100; ++trial) {
    auto inst = testing::random_miso_instance(10000 + trial);
    auto alloc = testing::random_allocation(inst.params, 11000 + trial);
    auto state = fp::SurrogateState::ones_miso(inst.params.n_receivers,
                                               inst.params.n_subcarriers);
    auto gen = rng::substream(12000, 0, trial);
    for (auto& per_j : state.psi_id) {
      for (auto& v : per_j) v = gen.next_cgaussian(1.0);
    }
    for (auto& per_j : state.psi_eh) {
      for (auto& per_k : per_j) {
        for (auto& v : per_k) v = gen.next_cgaussian(1.0);
      }
    }
    for (int j = 0; j < inst.params.n_receivers; ++j) {
      const double bound =
          eh_power_bound_miso(inst.params, inst.channels, alloc, j);
      CHECK(fp::p_hat_eh_miso(inst.params, inst.channels, alloc, state, j) <=
            bound + 1e-9 * std::max(1.0, bound));
      const double rate = throughput_miso(inst.params, inst.channels, alloc, j);
      bool in_domain = true;
      double hat = 0.0;
      try {
        hat = fp::r_hat_miso(inst.params, inst.channels, alloc, state, j);
      } catch (const SurrogateDomainError&) {
        in_domain = false;  // random psi outside the log domain is legal
      }
      if (in_domain) {
        CHECK(hat <= rate + 1e-9 * std::max(1.0, rate));
      }
    }
  }
}

TEST_CASE("M = 1 surrogate consistency with the SISO transform") {
  // phase-aligned scalar beams make the two surrogates coincide
  for (int trial = 0; trial < 50; ++trial) {
    auto inst = testing::random_siso_instance(13000 + trial);
    const int j_count = inst.params.n_receivers;
    const int n = inst.params.n_subcarriers;
    auto siso_alloc = testing::random_allocation(inst.params, 14000 + trial);
    auto miso_params = inst.params;
    miso_params.n_antennas = 1;

    ResourceAllocation miso_alloc = siso_alloc;
    miso_alloc.beamformers.assign(j_count, std::vector<CVec>(n, CVec(1)));
    for (int j = 0; j < j_count; ++j) {
      for (int k = 0; k < n; ++k) {
        const cdouble h = inst.channels.H(j)[k];
        const double mag = std::abs(h);
        const cdouble phase =
            mag > 0 ? std::conj(h) / mag : cdouble{1.0, 0.0};
        miso_alloc.beamformers[j][k][0] =
            std::sqrt(siso_alloc.powers[j][k]) * phase;
      }
    }
    miso_alloc.sync_envelope_powers();

    auto siso_state = fp::SurrogateState::ones_siso(j_count, n);
    fp::update_psi_siso(inst.params, inst.channels, siso_alloc, siso_state);
    auto miso_state = fp::SurrogateState::ones_miso(j_count, n);
    fp::update_psi_eh_miso(inst.channels, miso_alloc, miso_state);
    fp::update_psi_id_miso(miso_params, inst.channels, miso_alloc, miso_state);

    for (int j = 0; j < j_count; ++j) {
      const double a =
          fp::r_tilde_siso(inst.params, inst.channels, siso_alloc, siso_state, j);
      const double b =
          fp::r_hat_miso(miso_params, inst.channels, miso_alloc, miso_state, j);
      CHECK(a == doctest::Approx(b).epsilon(1e-9));
    }
  }
}

TEST_SUITE_END();
