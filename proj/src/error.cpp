// Copyright 2026 The review-perturb Authors
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

#include "rp/error.hpp"

namespace rp {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kMalformedHeading: return "MalformedHeading";
    case ErrorCode::kOrphanRebuttal: return "OrphanRebuttal";
    case ErrorCode::kInvalidDocument: return "InvalidDocument";
    case ErrorCode::kInsufficientPool: return "InsufficientPool";
    case ErrorCode::kNoTargets: return "NoTargets";
    case ErrorCode::kEmptyAnchor: return "EmptyAnchor";
    case ErrorCode::kStartNotFound: return "StartNotFound";
    case ErrorCode::kEndNotFound: return "EndNotFound";
    case ErrorCode::kAmbiguousStart: return "AmbiguousStart";
    case ErrorCode::kAllEditsFailed: return "AllEditsFailed";
    case ErrorCode::kBucketParseError: return "BucketParseError";
    case ErrorCode::kBucketTooSmall: return "BucketTooSmall";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kWrongAspect: return "WrongAspect";
    case ErrorCode::kInvalidRequest: return "InvalidRequest";
    case ErrorCode::kProviderExhausted: return "ProviderExhausted";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kTruncation: return "TruncationError";
    case ErrorCode::kGatewayError: return "GatewayError";
    case ErrorCode::kUnboundPlaceholder: return "UnboundPlaceholder";
    case ErrorCode::kUnknownTemplate: return "UnknownTemplate";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kEmptyIntersection: return "EmptyIntersection";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kUnknownCategory: return "UnknownCategory";
    case ErrorCode::kMissingAnalysis: return "MissingAnalysis";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace rp
