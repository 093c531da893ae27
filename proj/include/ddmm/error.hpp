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

#include <stdexcept>
#include <string>

namespace ddmm {

/// Failure classes raised by the library. The numeric values are stable and
/// are mirrored by the C API status codes.
enum class ErrorCode : int {
    InvalidArgument = 1,
    NestednessViolation = 2,
    InvalidAllocation = 3,
    ConditionsNotMet = 4,
    ModelOrderViolation = 5,
    InvalidSpectrum = 6,
    DegenerateVariance = 7,
    SeriesDiverged = 8,
    OutOfSupport = 9,
    NonFiniteIntegrand = 10,
    NotPositiveDefinite = 11,
    ZeroVariance = 12,
    RootBracketFailure = 13,
    DesignTooSmall = 14,
    ExtrapolationRefused = 15,
    CpNonConvergence = 16,
    EmptyConfidenceWindow = 17,
    GpFitFailure = 18,
    RiskFitFailure = 19,
    DegenerateData = 20,
    ZeroOutputVariance = 21,
    IoError = 22,
    FormatError = 23,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, ErrorCode code, const std::string& what) {
    if (!condition) fail(code, what);
}

}  // namespace ddmm
