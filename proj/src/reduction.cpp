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

#include "catpump/reduction.hpp"

#include <cmath>
#include <sstream>

namespace catpump {

LindbladModel reduced_storage_model(const DeviceParams& p, cplx eps2, double kappa2, const FockSpace& space,
                                    const std::string& storage) {
  const Operator a = annihilation(space, storage);
  const Operator ad = a.adjoint();
  const Operator a2 = a * a;
  Operator h = (ad * ad * a * a) * (-0.5 * p.chi_ss);
  h = h + (a2 * std::conj(eps2)).plus_adjoint();
  std::vector<Operator> c;
  if (kappa2 > 0.0) c.push_back(a2 * std::sqrt(kappa2));
  for (auto& op : thermal_loss(space, storage, p.kappa_s(), p.nth_s)) c.push_back(std::move(op));
  return LindbladModel(Operator(space, h.matrix(), true), std::move(c));
}

LindbladModel reduced_storage_model(const DeviceParams& p, const DerivedParams& d, int n_storage,
                                    const std::string& storage) {
  return reduced_storage_model(p, d.eps2, d.kappa2, FockSpace::single(storage, n_storage), storage);
}

ReducedModel adiabatic_reduce(const LindbladModel& two_mode, const DeviceParams& p, const DerivedParams& d,
                              const ReductionOptions& opt) {
  const FockSpace& full = two_mode.space();
  if (full.num_modes() != 2 || !full.has_mode(opt.readout) || !full.has_mode(opt.storage))
    throw InvalidModelError("adiabatic_reduce expects a two-mode (" + opt.readout + ", " + opt.storage +
                            ") model, got " + full.describe());
  const double kr = p.kappa_r();
  const double kappa2 = 4.0 * std::norm(d.g2) / kr;
  const cplx eps2 = -2.0 * kI * d.g2 * p.eps_d / kr;

  ReducedModel out{reduced_storage_model(p, eps2, kappa2, full.subspace({opt.storage}), opt.storage), eps2, kappa2,
                   {}};
  auto check = [&](double scale, const char* name) {
    if (scale > 0.0 && kr / scale < opt.ratio_threshold) {
      std::ostringstream os;
      os << "kappa_r / " << name << " = " << kr / scale << " is below the separation threshold "
         << opt.ratio_threshold;
      out.warnings.push_back(os.str());
    }
  };
  check(std::abs(d.g2), "|g2|");
  check(std::abs(p.eps_d), "|eps_d|");
  check(p.chi_rs, "chi_rs");
  if (d.delta_d != 0.0 || d.delta_p != 0.0)
    out.warnings.push_back("detunings are nonzero; the reduction assumes Delta_d = Delta_p = 0");
  return out;
}

}  // namespace catpump
