// Copyright 2026 The derfl Authors
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

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace derfl {

// Runs one subcommand (generate, run, compare, sweep) and returns the process
// exit code: 0 success, 1 configuration or I/O error, 2 data error, 3
// numeric failure. Diagnostics go to `err`.
int Execute(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "1,2,5" or "1..10" (inclusive), or a mix: "1..3,7".
std::vector<std::uint64_t> ParseSeedList(std::string_view text);

}  // namespace derfl
