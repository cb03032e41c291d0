// Copyright 2026 The coordlab Authors
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

#ifndef COORDLAB_CLI_HPP_
#define COORDLAB_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace coordlab {

/// Runs one CLI invocation. `args` excludes the program name. Exit status:
/// 0 on success, 1 when a check subcommand finds an inconsistency, 2 on
/// usage errors. Diagnostics go to `err`.
int dispatch(const std::vector<std::string>& args, std::ostream& out,
             std::ostream& err);

}  // namespace coordlab

#endif  // COORDLAB_CLI_HPP_
