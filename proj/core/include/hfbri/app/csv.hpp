// Copyright 2026 The hfbri Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#pragma once

// Minimal CSV emission with locale-independent, deterministic number
// formatting. Every file ends with "# seed=<s> config_hash=<h>".

#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace hfbri::app {

// Shortest round-trip-safe form for float-derived values ("%.9g").
std::string format_real(double value);
// Fixed six decimals, used for accuracies.
std::string format_fixed(double value);

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);
void write_csv_metadata(std::ostream& out, std::uint64_t seed, std::string_view config_hash);

}  // namespace hfbri::app
