/*
 * Copyright 2026 The SMS Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *   http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

// End-to-end gradient verification of encoder + head + loss on a random
// instance, in double precision.

#include "sms/autodiff.hpp"
#include "sms/model.hpp"

namespace sms {

struct ModelCheckSpec {
  std::size_t d = 8;        // head width; the BiLSTM uses d / 2 per direction
  std::size_t n = 7;        // tokens
  std::size_t classes = 4;  // |R|
  std::uint64_t seed = 1;
  head::FeatureToggles toggles;
};

struct RandomInstanceSetup {
  data::Vocab vocab;
  data::RelationInstance instance;
  ModelConfig config;
};

// Small random vocabulary, instance and model config of the requested size.
RandomInstanceSetup random_setup(const ModelCheckSpec& spec);

ad::GradCheckReport check_model_gradients(const ModelCheckSpec& spec, const ad::GradCheckOptions& opts = {});

}  // namespace sms
