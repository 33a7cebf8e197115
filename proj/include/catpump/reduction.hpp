// Copyright 2026 The catpump Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Adiabatic elimination of the strongly damped readout: the two-mode model
// collapses onto the storage with two-photon loss sqrt(kappa2) a^2 and
// two-photon drive eps2, kappa2 = 4|g2|^2/kappa_r, eps2 = -2i g2 eps_d/kappa_r.

#pragma once

#include <string>
#include <vector>

#include "catpump/device.hpp"
#include "catpump/dynamics.hpp"

namespace catpump {

struct ReductionOptions {
  /// kappa_r must exceed |g2|, |eps_d| and chi_rs by at least this factor.
  double ratio_threshold = 10.0;
  std::string readout = "readout";
  std::string storage = "storage";
};

struct ReducedModel {
  LindbladModel model;
  cplx eps2{};
  double kappa2 = 0.0;
  /// One entry per violated separation of scales; empty in the valid regime.
  std::vector<std::string> warnings;
};

/// H_s = eps2* a^2 + eps2 a^dag^2 - chi_ss/2 a^dag^2 a^2 with loss
/// sqrt(kappa2) a^2 and thermal single-photon channels on the storage.
LindbladModel reduced_storage_model(const DeviceParams& p, cplx eps2, double kappa2, const FockSpace& space,
                                    const std::string& storage = "storage");
LindbladModel reduced_storage_model(const DeviceParams& p, const DerivedParams& d, int n_storage,
                                    const std::string& storage = "storage");

/// Reduces a readout/storage model built by `build_two_mode_model`. The
/// storage truncation of `two_mode` carries over.
ReducedModel adiabatic_reduce(const LindbladModel& two_mode, const DeviceParams& p, const DerivedParams& d,
                              const ReductionOptions& opt = {});

}  // namespace catpump
