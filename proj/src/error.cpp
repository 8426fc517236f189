// Copyright 2026 The impact_governor Authors
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

#include "impact_governor/error.hpp"

namespace impact_governor
{

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::RateMismatch: return "RateMismatch";
    case ErrorCode::EmptyStream: return "EmptyStream";
    case ErrorCode::TriggerMissing: return "TriggerMissing";
    case ErrorCode::AlignmentOutOfTolerance: return "AlignmentOutOfTolerance";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::WindowTooLarge: return "WindowTooLarge";
    case ErrorCode::NonPositiveDefiniteCovariance: return "NonPositiveDefiniteCovariance";
    case ErrorCode::CutoffAboveNyquist: return "CutoffAboveNyquist";
    case ErrorCode::NoImpactFound: return "NoImpactFound";
    case ErrorCode::VelocityTooLow: return "VelocityTooLow";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::RestitutionAboveUnity: return "RestitutionAboveUnity";
    case ErrorCode::Underdetermined: return "Underdetermined";
    case ErrorCode::DegenerateX: return "DegenerateX";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::RestitutionOutOfRange: return "RestitutionOutOfRange";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ScenarioInvariantViolation: return "ScenarioInvariantViolation";
    case ErrorCode::MalformedMessage: return "MalformedMessage";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace impact_governor
