/*
 * Copyright 2026 The htsim Authors
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

namespace htsim::cli {

/// Entry point of the `htsim` tool. `args` excludes the program name.
/// Returns the process exit status.
int main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace htsim::cli
