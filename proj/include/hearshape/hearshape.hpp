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

// Umbrella header.

#pragma once

#include "hearshape/core/error.hpp"
#include "hearshape/core/parallel.hpp"
#include "hearshape/core/random.hpp"
#include "hearshape/dataset/grid.hpp"
#include "hearshape/dataset/render.hpp"
#include "hearshape/dsp/fft.hpp"
#include "hearshape/dsp/image.hpp"
#include "hearshape/dsp/wav.hpp"
#include "hearshape/experiments/laplacian.hpp"
#include "hearshape/experiments/reconstruct.hpp"
#include "hearshape/experiments/reference.hpp"
#include "hearshape/experiments/spectrogram.hpp"
#include "hearshape/nn/adam.hpp"
#include "hearshape/nn/checkpoint.hpp"
#include "hearshape/nn/model.hpp"
#include "hearshape/nn/predictor.hpp"
#include "hearshape/nn/train.hpp"
#include "hearshape/scattering/feature_io.hpp"
#include "hearshape/scattering/filterbank.hpp"
#include "hearshape/scattering/transform.hpp"
#include "hearshape/service/server.hpp"
#include "hearshape/synth/excitation.hpp"
#include "hearshape/synth/modal.hpp"
#include "hearshape/synth/shape.hpp"
#include "hearshape/synth/synthesize.hpp"
