// Copyright 2026 The dpclip Authors
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

#include <ostream>
#include <string>
#include <vector>

namespace dpclip::cli {

/// Runs one `dpclip` subcommand. Returns the process exit status: 0 on
/// success, 1 on a failed verification or runtime error, 2 on bad usage.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Directory holding the bundled architecture files.
std::string data_dir();

}  // namespace dpclip::cli
