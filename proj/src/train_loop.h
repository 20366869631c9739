// Copyright 2026 The nlu-forge Authors.
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

// Mini-batch Adam loop shared by the neural models.

#ifndef NLUFORGE_SRC_TRAIN_LOOP_H_
#define NLUFORGE_SRC_TRAIN_LOOP_H_

#include <algorithm>
#include <functional>
#include <vector>

#include "nluforge/neural.h"
#include "nluforge/optim.h"

namespace nluforge::internal {

struct Example {
  std::vector<int> ids;
  std::vector<int> gold;
};

using ExampleLoss =
    std::function<double(const Example &, std::vector<double> *grad, Rng *dropout)>;

struct LoopOptions {
  int epochs = 10;
  size_t batch_size = 16;
  double lr = 1e-3;
  uint64_t seed = 1;
  const ParamSlot *frozen = nullptr;  // slot excluded from updates
};

// Batches group examples of similar length; batch order is reshuffled every
// epoch. Keeps the parameters with the best dev score (`dev_score` may be
// empty, then the last epoch wins).
inline TrainCurve run_training(ParamStore &params, const std::vector<Example> &train,
                               const LoopOptions &opts, const ExampleLoss &loss,
                               const std::function<double()> &dev_score) {
  TrainCurve curve;
  Rng rng(opts.seed ^ 0x5bd1e995ULL);
  Rng order_rng(rng.fork());
  Rng dropout_rng(rng.fork());
  Adam adam(params.size(), {opts.lr, 0.9, 0.999, 1e-8});
  std::vector<double> grad(params.size());
  std::vector<double> best = params.values;
  double best_score = -1.0;
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    std::vector<size_t> order(train.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    order_rng.shuffle(order);
    std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
      return train[a].ids.size() < train[b].ids.size();
    });
    std::vector<std::vector<size_t>> batches;
    for (size_t s = 0; s < order.size(); s += opts.batch_size) {
      batches.emplace_back(order.begin() + s,
                           order.begin() + std::min(order.size(), s + opts.batch_size));
    }
    order_rng.shuffle(batches);
    double total = 0.0;
    for (const auto &batch : batches) {
      std::fill(grad.begin(), grad.end(), 0.0);
      for (size_t i : batch) total += loss(train[i], &grad, &dropout_rng);
      const double scale = 1.0 / double(batch.size());
      for (double &g : grad) g *= scale;
      if (opts.frozen != nullptr) {
        std::fill(grad.begin() + opts.frozen->offset,
                  grad.begin() + opts.frozen->offset + opts.frozen->size, 0.0);
      }
      adam.step(params.values, grad);
    }
    curve.train_loss.push_back(train.empty() ? 0.0 : total / double(train.size()));
    if (!dev_score) {
      best = params.values;
      curve.best_epoch = epoch;
      continue;
    }
    const double score = dev_score();
    curve.dev_score.push_back(score);
    if (score > best_score) {
      best_score = score;
      best = params.values;
      curve.best_epoch = epoch;
    }
  }
  params.values = std::move(best);
  return curve;
}

}  // namespace nluforge::internal

#endif  // NLUFORGE_SRC_TRAIN_LOOP_H_
