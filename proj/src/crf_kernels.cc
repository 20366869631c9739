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

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "nluforge/crf.h"
#include "nluforge/error.h"

namespace nluforge {

double log_sum_exp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  const double m = *std::max_element(values.begin(), values.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double v : values) s += std::exp(v - m);
  return m + std::log(s);
}

namespace {

// alpha[t][y] = log sum over prefixes ending in y at t.
std::vector<double> forward(const ChainPotentials &c, std::span<const double> tr) {
  const int T = c.length, L = c.labels;
  std::vector<double> alpha(size_t(T) * L);
  std::vector<double> scratch(L);
  for (int y = 0; y < L; ++y) alpha[y] = c.at(0, y);
  for (int t = 1; t < T; ++t) {
    const double *prev = alpha.data() + size_t(t - 1) * L;
    for (int y = 0; y < L; ++y) {
      for (int p = 0; p < L; ++p) scratch[p] = prev[p] + tr[size_t(p) * L + y];
      alpha[size_t(t) * L + y] = c.at(t, y) + log_sum_exp(scratch);
    }
  }
  return alpha;
}

std::vector<double> backward(const ChainPotentials &c, std::span<const double> tr) {
  const int T = c.length, L = c.labels;
  std::vector<double> beta(size_t(T) * L, 0.0);
  std::vector<double> scratch(L);
  for (int t = T - 2; t >= 0; --t) {
    const double *next = beta.data() + size_t(t + 1) * L;
    for (int y = 0; y < L; ++y) {
      for (int n = 0; n < L; ++n) scratch[n] = tr[size_t(y) * L + n] + c.at(t + 1, n) + next[n];
      beta[size_t(t) * L + y] = log_sum_exp(scratch);
    }
  }
  return beta;
}

void check_shapes(const ChainPotentials &c, std::span<const double> tr) {
  if (c.labels <= 0 || c.emissions.size() != size_t(c.length) * c.labels ||
      tr.size() != size_t(c.labels) * c.labels) {
    throw UsageError("chain potentials have inconsistent shapes");
  }
}

}  // namespace

double log_partition(const ChainPotentials &chain, std::span<const double> transitions) {
  check_shapes(chain, transitions);
  if (chain.length == 0) return 0.0;
  const auto alpha = forward(chain, transitions);
  return log_sum_exp({alpha.data() + size_t(chain.length - 1) * chain.labels,
                      size_t(chain.labels)});
}

double path_score(const ChainPotentials &chain, std::span<const double> transitions,
                  std::span<const int> path) {
  double s = 0.0;
  for (int t = 0; t < chain.length; ++t) {
    s += chain.at(t, path[t]);
    if (t > 0) s += transitions[size_t(path[t - 1]) * chain.labels + path[t]];
  }
  return s;
}

std::vector<int> viterbi(const ChainPotentials &chain, std::span<const double> transitions,
                         double *best_score) {
  check_shapes(chain, transitions);
  const int T = chain.length, L = chain.labels;
  if (T == 0) {
    if (best_score) *best_score = 0.0;
    return {};
  }
  std::vector<double> delta(size_t(T) * L);
  std::vector<int> back(size_t(T) * L, 0);
  for (int y = 0; y < L; ++y) delta[y] = chain.at(0, y);
  for (int t = 1; t < T; ++t) {
    for (int y = 0; y < L; ++y) {
      int arg = 0;
      double best = delta[size_t(t - 1) * L] + transitions[y];
      for (int p = 1; p < L; ++p) {
        const double s = delta[size_t(t - 1) * L + p] + transitions[size_t(p) * L + y];
        if (s > best) {
          best = s;
          arg = p;
        }
      }
      delta[size_t(t) * L + y] = best + chain.at(t, y);
      back[size_t(t) * L + y] = arg;
    }
  }
  std::vector<int> path(T);
  int y = 0;
  for (int k = 1; k < L; ++k) {
    if (delta[size_t(T - 1) * L + k] > delta[size_t(T - 1) * L + y]) y = k;
  }
  if (best_score) *best_score = delta[size_t(T - 1) * L + y];
  for (int t = T - 1; t >= 0; --t) {
    path[t] = y;
    y = back[size_t(t) * L + y];
  }
  return path;
}

Marginals forward_backward(const ChainPotentials &chain, std::span<const double> transitions) {
  check_shapes(chain, transitions);
  const int T = chain.length, L = chain.labels;
  Marginals m;
  m.node.assign(size_t(T) * L, 0.0);
  m.edge.assign(size_t(L) * L, 0.0);
  if (T == 0) return m;
  const auto alpha = forward(chain, transitions);
  const auto beta = backward(chain, transitions);
  m.log_z = log_sum_exp({alpha.data() + size_t(T - 1) * L, size_t(L)});
  for (size_t i = 0; i < m.node.size(); ++i) m.node[i] = std::exp(alpha[i] + beta[i] - m.log_z);
  for (int t = 1; t < T; ++t) {
    for (int p = 0; p < L; ++p) {
      const double a = alpha[size_t(t - 1) * L + p];
      for (int y = 0; y < L; ++y) {
        m.edge[size_t(p) * L + y] += std::exp(a + transitions[size_t(p) * L + y] +
                                              chain.at(t, y) + beta[size_t(t) * L + y] -
                                              m.log_z);
      }
    }
  }
  return m;
}

namespace {

struct SentenceTerms {
  double loss = 0.0;
  Marginals marginals;  // node/edge turned into (expected - observed) residuals
};

SentenceTerms sentence_terms(const CrfModel &model, const CompiledSentence &sent) {
  const int L = model.num_labels();
  if (sent.gold.size() != size_t(sent.length)) {
    throw DataError("CRF training sentence lacks gold labels");
  }
  const ChainPotentials chain = emission_scores(model, sent);
  SentenceTerms out;
  out.marginals = forward_backward(chain, model.transitions());
  out.loss = out.marginals.log_z - path_score(chain, model.transitions(), sent.gold);
  for (int t = 0; t < sent.length; ++t) {
    out.marginals.node[size_t(t) * L + sent.gold[t]] -= 1.0;
    if (t > 0) out.marginals.edge[size_t(sent.gold[t - 1]) * L + sent.gold[t]] -= 1.0;
  }
  return out;
}

void accumulate(const CrfModel &model, const CompiledSentence &sent, const SentenceTerms &terms,
                LossAndGrad &acc) {
  const int L = model.num_labels();
  const size_t dense_off = model.dense_offset();
  const size_t tr_off = model.transition_offset();
  acc.loss += terms.loss;
  for (int t = 0; t < sent.length; ++t) {
    const double *res = terms.marginals.node.data() + size_t(t) * L;
    for (int f : sent.features[t]) {
      double *g = acc.grad.data() + size_t(f) * L;
      for (int y = 0; y < L; ++y) g[y] += res[y];
    }
    for (int d = 0; d < model.dense_dim; ++d) {
      const double x = sent.dense[size_t(t) * model.dense_dim + d];
      double *g = acc.grad.data() + dense_off + size_t(d) * L;
      for (int y = 0; y < L; ++y) g[y] += x * res[y];
    }
  }
  for (size_t i = 0; i < size_t(L) * L; ++i) acc.grad[tr_off + i] += terms.marginals.edge[i];
}

void add_l2(const CrfModel &model, LossAndGrad &acc) {
  if (model.l2 == 0.0) return;
  double sq = 0.0;
  for (size_t i = 0; i < model.params.size(); ++i) {
    sq += model.params[i] * model.params[i];
    acc.grad[i] += model.l2 * model.params[i];
  }
  acc.loss += 0.5 * model.l2 * sq;
}

}  // namespace

LossAndGrad nll_and_grad_serial(const CrfModel &model, std::span<const CompiledSentence> batch) {
  LossAndGrad acc;
  acc.grad.assign(model.num_params(), 0.0);
  for (const auto &sent : batch) accumulate(model, sent, sentence_terms(model, sent), acc);
  add_l2(model, acc);
  return acc;
}

LossAndGrad nll_and_grad(const CrfModel &model, std::span<const CompiledSentence> batch) {
  // Exceptions must not escape the parallel region.
  for (const auto &sent : batch) {
    if (sent.gold.size() != size_t(sent.length)) {
      throw DataError("CRF training sentence lacks gold labels");
    }
  }
  std::vector<SentenceTerms> terms(batch.size());
  const auto n = static_cast<std::ptrdiff_t>(batch.size());
#pragma omp parallel for schedule(dynamic, 4) if (n > 8)
  for (std::ptrdiff_t i = 0; i < n; ++i) terms[i] = sentence_terms(model, batch[i]);

  LossAndGrad acc;
  acc.grad.assign(model.num_params(), 0.0);
  for (size_t i = 0; i < batch.size(); ++i) accumulate(model, batch[i], terms[i], acc);
  add_l2(model, acc);
  return acc;
}

}  // namespace nluforge
