// Copyright 2026 The hearshape Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hearshape {

enum class Errc {
  invalid_argument,
  negative_fundamental,
  unstable_damping,
  negative_dispersion,
  negative_carrier,
  all_modes_aliased,
  invalid_scale,
  length_mismatch,
  shape_mismatch,
  empty_validation,
  out_of_range,
  io_error,
  diverged_loss,
  empty_split,
  out_of_membrane,
  no_progress,
};

constexpr std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::negative_fundamental: return "NegativeFundamental";
    case Errc::unstable_damping: return "UnstableDamping";
    case Errc::negative_dispersion: return "NegativeDispersion";
    case Errc::negative_carrier: return "NegativeCarrier";
    case Errc::all_modes_aliased: return "AllModesAliased";
    case Errc::invalid_scale: return "InvalidScale";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::empty_validation: return "EmptyValidation";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::io_error: return "IoError";
    case Errc::diverged_loss: return "DivergedLoss";
    case Errc::empty_split: return "EmptySplit";
    case Errc::out_of_membrane: return "OutOfMembrane";
    case Errc::no_progress: return "NoProgress";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
/// `field` names the offending input when there is one (a θ component, a
/// mode multiindex such as "(3,4)", a file path).
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        field_(std::move(field)) {}

  Errc code() const noexcept { return code_; }
  const std::string& field() const noexcept { return field_; }

 private:
  Errc code_;
  std::string field_;
};

inline void require(bool condition, Errc code, const std::string& message,
                    std::string field = {}) {
  if (!condition) throw Error(code, message, std::move(field));
}

}  // namespace hearshape
