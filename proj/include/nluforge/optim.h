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

#ifndef NLUFORGE_OPTIM_H_
#define NLUFORGE_OPTIM_H_

#include <cstdint>
#include <span>
#include <vector>

namespace nluforge {

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam over a flat parameter vector.
class Adam {
 public:
  Adam(size_t n_params, AdamOptions options);

  void step(std::span<double> params, std::span<const double> grads);

  uint64_t steps() const { return steps_; }
  const std::vector<double> &first_moment() const { return m_; }
  const std::vector<double> &second_moment() const { return v_; }
  const AdamOptions &options() const { return options_; }

 private:
  AdamOptions options_;
  std::vector<double> m_;
  std::vector<double> v_;
  uint64_t steps_ = 0;
};

}  // namespace nluforge

#endif  // NLUFORGE_OPTIM_H_
