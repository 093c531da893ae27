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

#include "ddmm/error.hpp"

namespace ddmm {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::NestednessViolation: return "NestednessViolation";
        case ErrorCode::InvalidAllocation: return "InvalidAllocation";
        case ErrorCode::ConditionsNotMet: return "ConditionsNotMet";
        case ErrorCode::ModelOrderViolation: return "ModelOrderViolation";
        case ErrorCode::InvalidSpectrum: return "InvalidSpectrum";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::SeriesDiverged: return "SeriesDiverged";
        case ErrorCode::OutOfSupport: return "OutOfSupport";
        case ErrorCode::NonFiniteIntegrand: return "NonFiniteIntegrand";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::ZeroVariance: return "ZeroVariance";
        case ErrorCode::RootBracketFailure: return "RootBracketFailure";
        case ErrorCode::DesignTooSmall: return "DesignTooSmall";
        case ErrorCode::ExtrapolationRefused: return "ExtrapolationRefused";
        case ErrorCode::CpNonConvergence: return "CpNonConvergence";
        case ErrorCode::EmptyConfidenceWindow: return "EmptyConfidenceWindow";
        case ErrorCode::GpFitFailure: return "GpFitFailure";
        case ErrorCode::RiskFitFailure: return "RiskFitFailure";
        case ErrorCode::DegenerateData: return "DegenerateData";
        case ErrorCode::ZeroOutputVariance: return "ZeroOutputVariance";
        case ErrorCode::IoError: return "IoError";
        case ErrorCode::FormatError: return "FormatError";
    }
    return "UnknownError";
}

}  // namespace ddmm
