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

#include "hearshape/dataset/grid.hpp"
#include "hearshape/synth/shape.hpp"

namespace hearshape::experiments {

/// The drum used by the single-shape studies: the center of the default
/// dataset grid (270 Hz, tau 0.55 s, p = D = 10^-2.5, alpha 0.75).
inline ShapeVector reference_theta() {
  return dataset::denormalize_theta({0.5, 0.5, 0.5, 0.5, 0.5}, dataset::GridSpec{});
}

}  // namespace hearshape::experiments
