// Copyright 2026 The ddmm Authors
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

#include "ddmm/log.hpp"

#include <cstdio>
#include <mutex>

namespace ddmm {

namespace {

std::mutex sink_mutex;
LogSink current_sink = nullptr;
void* current_user = nullptr;

}  // namespace

void set_log_sink(LogSink sink, void* user) {
    std::lock_guard lock(sink_mutex);
    current_sink = sink;
    current_user = user;
}

void log_message(LogLevel level, const std::string& message) {
    std::lock_guard lock(sink_mutex);
    if (current_sink) {
        current_sink(level, message.c_str(), current_user);
        return;
    }
    if (level == LogLevel::Warning) std::fprintf(stderr, "warning: %s\n", message.c_str());
}

}  // namespace ddmm
