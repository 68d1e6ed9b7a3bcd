/*
 * Copyright 2026 The offload-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace offload::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // validation or feasibility failure
inline constexpr int kExitUsage = 2;

inline constexpr const char* kDefaultConfigPath = "./offload-sim.json";

/// Runs `offload-sim <subcommand> ...`; args exclude the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace offload::cli
