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

#ifndef COORDLAB_CONFIG_HPP_
#define COORDLAB_CONFIG_HPP_

#include <map>
#include <string>

namespace coordlab {

using KeyValueMap = std::map<std::string, std::string>;

/// Parses a flat `key = value` file. '#' starts a comment, blank lines are
/// skipped, duplicate keys are errors.
KeyValueMap read_key_value_file(const std::string& path);
KeyValueMap parse_key_value_text(const std::string& text);

double parse_double(const std::string& text, const std::string& what);
long parse_long(const std::string& text, const std::string& what);

}  // namespace coordlab

#endif  // COORDLAB_CONFIG_HPP_
