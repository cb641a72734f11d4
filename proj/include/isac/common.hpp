// SPDX-License-Identifier: Apache-2.0
//
// isacsim — deterministic ray-traced channel simulation and radio sensing
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <stdexcept>
#include <string>

namespace isac {

inline constexpr double kSpeedOfLight = 299792458.0; // m/s, vacuum
inline constexpr double kPi = 3.14159265358979323846;

inline constexpr double deg2rad(double deg) { return deg * kPi / 180.0; }
inline constexpr double rad2deg(double rad) { return rad * 180.0 / kPi; }

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Scene / input errors
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };
struct UnknownObjectError : Error { using Error::Error; };
struct FrameOutOfRangeError : Error { using Error::Error; };
struct InvalidResolutionError : Error { using Error::Error; };

// Propagation errors
struct NonPositiveDistanceError : Error { using Error::Error; };
struct EvanescentRegimeError : Error { using Error::Error; };

// Channel / sensing errors
struct DimensionMismatchError : Error { using Error::Error; };
struct DimensionTooSmallError : Error { using Error::Error; };
struct ZeroPilotError : Error { using Error::Error; };
struct DelayOutOfRangeError : Error { using Error::Error; };
struct EigendecompositionError : Error { using Error::Error; };
struct QOutOfRangeError : Error { using Error::Error; };

// Metric errors
struct EmptyInputError : Error { using Error::Error; };
struct TruthOutOfBoundsError : Error { using Error::Error; };
struct PeakNotMaximumError : Error { using Error::Error; };
struct TargetNotInListError : Error { using Error::Error; };

// Dataset errors
struct IoError : Error { using Error::Error; };
struct ChecksumMismatchError : Error { using Error::Error; };
struct VersionUnsupportedError : Error { using Error::Error; };

} // namespace isac
