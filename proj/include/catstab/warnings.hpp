// Copyright 2026 The Catstab Authors.
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

#ifndef CATSTAB_WARNINGS_HPP
#define CATSTAB_WARNINGS_HPP

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace catstab {

// Non-fatal diagnostics (parameter-regime violations, truncation-quality
// notices, ...) are routed through a process-wide handler so tests can
// capture them.  The default handler prints "warning: <msg>" to stderr.
using WarningHandler = std::function<void(const std::string&)>;

// Replaces the active handler and returns the previous one.  Passing an
// empty function restores the default stderr handler.
WarningHandler set_warning_handler(WarningHandler handler);

// Emits `msg` through the active handler.
void warn(const std::string& msg);

// RAII capture of warnings into a vector, for tests.
class WarningCapture {
 public:
  WarningCapture();
  ~WarningCapture();
  WarningCapture(const WarningCapture&) = delete;
  WarningCapture& operator=(const WarningCapture&) = delete;
  const std::vector<std::string>& messages() const { return *messages_; }

 private:
  std::shared_ptr<std::vector<std::string>> messages_;
  WarningHandler previous_;
};

}  // namespace catstab

#endif  // CATSTAB_WARNINGS_HPP
