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

#include "sms/verify.hpp"

namespace sms {

RandomInstanceSetup random_setup(const ModelCheckSpec& spec) {
  if (spec.d < 2 || spec.d % 2 != 0) throw UsageError("d must be an even number of at least 2");
  if (spec.n < 2) throw UsageError("n must be at least 2");
  if (spec.classes < 2) throw UsageError("at least two classes are required");
  Rng rng(Rng::mix(spec.seed, 0x9c));

  RandomInstanceSetup s;
  auto& inst = s.instance;
  inst.id = "gradcheck-" + std::to_string(spec.seed);
  const std::vector<std::string> words = {"alpha", "beta", "gamma", "delta", "epsilon", "zeta"};
  const std::vector<std::string> tags = {"NN", "VB", "IN"};
  for (std::size_t i = 0; i < spec.n; ++i) {
    inst.tokens.push_back(rng.pick(words));
    inst.pos_tags.push_back(rng.pick(tags));
    inst.ner_tags.push_back("O");
  }
  const std::size_t split = 1 + rng.below(spec.n - 1);  // subject in [0, split), object in [split, n)
  const std::size_t s0 = rng.below(split);
  const std::size_t o0 = split + rng.below(spec.n - split);
  inst.subj = {s0, s0 + 1 + rng.below(split - s0)};
  inst.obj = {o0, o0 + 1 + rng.below(spec.n - o0)};
  inst.subj_type = "PERSON";
  inst.obj_type = "ORGANIZATION";
  for (std::size_t i = inst.subj.start; i < inst.subj.end; ++i) inst.ner_tags[i] = "PERSON";
  for (std::size_t i = inst.obj.start; i < inst.obj.end; ++i) inst.ner_tags[i] = "ORGANIZATION";

  data::VocabOptions vo;
  for (std::size_t c = 0; c < spec.classes; ++c) vo.relation_labels.push_back("r" + std::to_string(c));
  inst.relation = vo.relation_labels[rng.below(spec.classes)];
  s.vocab = data::build_vocab({inst}, vo);

  auto& mc = s.config;
  mc.channels.word_dim = 4;
  mc.channels.pos_dim = mc.channels.ner_dim = mc.channels.position_dim = 2;
  mc.lstm.hidden = spec.d / 2;
  mc.head.toggles = spec.toggles;
  return s;
}

ad::GradCheckReport check_model_gradients(const ModelCheckSpec& spec, const ad::GradCheckOptions& opts) {
  auto setup = random_setup(spec);
  RelationModel<double> model(setup.config, setup.vocab, spec.seed);
  const auto ex = model.prepare(setup.instance);
  return ad::grad_check(model.store(), [&](ad::Graph<double>& g) { return model.loss(g, ex); }, opts);
}

}  // namespace sms
