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

#include "catstab/warnings.hpp"

#include <iostream>
#include <mutex>

namespace catstab {

namespace {

std::mutex g_mutex;
WarningHandler g_handler;

void default_handler(const std::string& msg) {
  std::cerr << "warning: " << msg << "\n";
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard<std::mutex> lock(g_mutex);
  WarningHandler previous = g_handler;
  g_handler = std::move(handler);
  return previous;
}

void warn(const std::string& msg) {
  WarningHandler handler;
  {
    std::lock_guard<std::mutex> lock(g_mutex);
    handler = g_handler;
  }
  if (handler)
    handler(msg);
  else
    default_handler(msg);
}

WarningCapture::WarningCapture()
    : messages_(std::make_shared<std::vector<std::string>>()) {
  auto sink = messages_;
  previous_ = set_warning_handler(
      [sink](const std::string& msg) { sink->push_back(msg); });
}

WarningCapture::~WarningCapture() { set_warning_handler(previous_); }

}  // namespace catstab
