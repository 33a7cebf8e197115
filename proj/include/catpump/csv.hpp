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

// Small helpers shared by the CSV emitters. Files start with `# key=value`
// comment lines describing how they were produced, then one header row.

#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace catpump::csv {

using Meta = std::vector<std::pair<std::string, std::string>>;

/// Shortest text that reads back to the same double.
std::string num(double v);

void write_meta(std::ostream& os, const Meta& meta);
void write_row(std::ostream& os, const std::vector<std::string>& cells);

/// Parsed file: metadata, column names and rows of numbers.
struct Table {
  Meta meta;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;
  const std::string* meta_value(const std::string& key) const;
};

/// Reads a file written with the helpers above. Throws ConfigError with
/// the offending line number on malformed input.
Table read(std::istream& is, const std::string& origin = "<stream>");

}  // namespace catpump::csv
