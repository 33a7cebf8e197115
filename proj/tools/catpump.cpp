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

// catpump <scenario> --params <file> --out <dir> [--set k=v]... [--seed n]
//
// Writes CSV files into the output directory and a JSON run summary on
// stdout. Failures exit nonzero with a JSON error object on stderr.

#include <cstdint>
#include <algorithm>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "catpump/error.hpp"
#include "catpump/scenarios.hpp"

namespace {

enum Exit { kOk = 0, kInternal = 1, kUsage = 2, kNumerical = 3, kIo = 4 };

int fail(const std::string& kind, const std::string& message, const std::string& scenario, int code) {
  nlohmann::json j{{"status", "error"}, {"error", kind}, {"message", message}, {"exit_code", code}};
  if (!scenario.empty()) j["scenario"] = scenario;
  std::cerr << j.dump() << std::endl;
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pumped cat-state oscillator scenarios"};
  std::string scenario, params, out;
  std::vector<std::string> sets;
  std::uint64_t seed = 1;
  std::string names;
  for (const auto& n : catpump::scenario_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("scenario", scenario, "One of: " + names)->required();
  app.add_option("--params", params, "Parameter file (key = value [unit] per line)")->required();
  app.add_option("--out", out, "Output directory, created if missing")->required();
  app.add_option("--set", sets, "Override a parameter, key=value [unit]; repeatable");
  app.add_option("--seed", seed, "Seed for every stochastic step");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), scenario, kUsage);
  }

  try {
    catpump::RunRequest req;
    req.scenario = scenario;
    req.params = catpump::load_key_values(params);
    req.params_origin = params;
    for (const auto& s : sets) {
      auto [key, value] = catpump::parse_override(s);
      req.params[key] = value;
    }
    req.out_dir = out;
    req.seed = seed;
    // Validate the scenario name before touching the file system.
    const auto& all = catpump::scenario_names();
    if (std::find(all.begin(), all.end(), scenario) == all.end())
      throw catpump::ConfigError("unknown scenario '" + scenario + "' (expected one of: " + names + ")");
    const auto summary = catpump::run_scenario(req);
    nlohmann::json j{{"status", "ok"}, {"scenario", scenario}, {"out", out}, {"seed", seed}};
    j["files"] = nlohmann::json::array();
    for (const auto& f : summary.files) j["files"].push_back(f.string());
    j["metrics"] = nlohmann::json::object();
    for (const auto& [k, v] : summary.metrics) j["metrics"][k] = v;
    j["warnings"] = summary.warnings;
    std::cout << j.dump(2) << std::endl;
    return kOk;
  } catch (const catpump::ConfigError& e) {
    return fail(e.kind(), e.what(), scenario, kUsage);
  } catch (const catpump::IoError& e) {
    return fail(e.kind(), e.what(), scenario, kIo);
  } catch (const catpump::Error& e) {
    return fail(e.kind(), e.what(), scenario, kNumerical);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), scenario, kInternal);
  }
}
