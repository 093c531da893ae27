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

#pragma once

#include <string>

namespace ddmm {

enum class LogLevel { Info = 0, Warning = 1 };

using LogSink = void (*)(LogLevel level, const char* message, void* user);

/// Replaces the process-wide sink (nullptr restores the default, which writes
/// warnings to stderr and drops info messages).
void set_log_sink(LogSink sink, void* user);
void log_message(LogLevel level, const std::string& message);

inline void warn(const std::string& message) { log_message(LogLevel::Warning, message); }
inline void info(const std::string& message) { log_message(LogLevel::Info, message); }

}  // namespace ddmm
