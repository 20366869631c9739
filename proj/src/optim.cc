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

#include "nluforge/optim.h"

#include <cmath>

#include "nluforge/error.h"

namespace nluforge {

Adam::Adam(size_t n_params, AdamOptions options)
    : options_(options), m_(n_params, 0.0), v_(n_params, 0.0) {
  if (!(options_.lr > 0.0)) throw UsageError("Adam: learning rate must be positive");
}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw UsageError("Adam: parameter/gradient size mismatch");
  }
  ++steps_;
  const double b1 = options_.beta1, b2 = options_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(steps_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(steps_));
  for (size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    if (g == 0.0 && m_[i] == 0.0 && v_[i] == 0.0) continue;
    m_[i] = b1 * m_[i] + (1.0 - b1) * g;
    v_[i] = b2 * v_[i] + (1.0 - b2) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
  }
}

}  // namespace nluforge
