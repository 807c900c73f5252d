// SPDX-License-Identifier: Apache-2.0
//
// Internal helpers shared by the SISO and MISO alternating optimizers.
#pragma once

#include <chrono>
#include <vector>

#include "idet/model.hpp"
#include "idet/solver.hpp"
#include "json.hpp"

namespace idet::opt::detail {

// rho = 1 makes every SINR numerator vanish and stalls the surrogate in a
// log(1+0) stationary point; the alternating loops start just inside.
constexpr double kRhoGuard = 1e-9;

// slack when deciding whether a warm-start point is block-feasible
constexpr double kFeasSlack = 1e-9;

inline std::vector<double> eh_thresholds(const SystemParams& params) {
  std::vector<double> th(params.n_receivers);
  for (int j = 0; j < params.n_receivers; ++j) {
    th[j] = eh_power_threshold(params, params.dc_requirements_a[j]);
  }
  return th;
}

inline nlohmann::json complex_to_json(const cdouble& z) {
  return nlohmann::json::array({z.real(), z.imag()});
}

inline nlohmann::json allocation_to_json(const ResourceAllocation& alloc) {
  nlohmann::json doc;
  doc["powers"] = alloc.powers;
  doc["split_ratios"] = alloc.split_ratios;
  if (alloc.has_beamformers()) {
    nlohmann::json w = nlohmann::json::array();
    for (const auto& per_user : alloc.beamformers) {
      nlohmann::json per_k = nlohmann::json::array();
      for (const auto& beam : per_user) {
        nlohmann::json vec = nlohmann::json::array();
        for (const auto& coef : beam) vec.push_back(complex_to_json(coef));
        per_k.push_back(std::move(vec));
      }
      w.push_back(std::move(per_k));
    }
    doc["beamformers"] = std::move(w);
  }
  return doc;
}

class WallTimer {
 public:
  WallTimer() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace idet::opt::detail
