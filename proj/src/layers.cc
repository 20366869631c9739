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
#include <exception>

#include "nluforge/error.h"
#include "nluforge/neural.h"

namespace nluforge {

size_t ParamStore::add(const std::string &name, std::vector<int> shape) {
  if (index_.count(name)) throw UsageError("duplicate parameter '" + name + "'");
  ParamSlot s;
  s.name = name;
  s.size = 1;
  for (int d : shape) s.size *= static_cast<size_t>(d);
  s.shape = std::move(shape);
  s.offset = values.size();
  values.resize(values.size() + s.size, 0.0);
  index_[name] = slots.size();
  slots.push_back(s);
  return s.offset;
}

bool ParamStore::has(const std::string &name) const { return index_.count(name) > 0; }

const ParamSlot &ParamStore::slot(const std::string &name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw DataError("missing parameter '" + name + "'");
  return slots[it->second];
}

namespace {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

void lstm_forward(const double *W, const double *b, int input_dim, int hidden,
                  std::span<const double> x, bool reverse, LstmCache &cache) {
  const int I = input_dim, H = hidden, C = I + H;
  if (x.size() % size_t(I) != 0) throw UsageError("LSTM input size is not a multiple of its width");
  const int T = static_cast<int>(x.size() / I);
  cache.length = T;
  cache.input_dim = I;
  cache.hidden = H;
  cache.reverse = reverse;
  cache.x.assign(x.begin(), x.end());
  cache.gates.assign(size_t(T) * 4 * H, 0.0);
  cache.c.assign(size_t(T) * H, 0.0);
  cache.h.assign(size_t(T) * H, 0.0);
  std::vector<double> z(4 * H);
  const double *h_prev = nullptr;
  const double *c_prev = nullptr;
  for (int s = 0; s < T; ++s) {
    const int p = reverse ? T - 1 - s : s;
    const double *xp = x.data() + size_t(p) * I;
    for (int r = 0; r < 4 * H; ++r) {
      const double *w = W + size_t(r) * C;
      double acc = b[r];
      for (int i = 0; i < I; ++i) acc += w[i] * xp[i];
      if (h_prev != nullptr) {
        for (int j = 0; j < H; ++j) acc += w[I + j] * h_prev[j];
      }
      z[r] = acc;
    }
    double *g = cache.gates.data() + size_t(p) * 4 * H;
    double *c = cache.c.data() + size_t(p) * H;
    double *h = cache.h.data() + size_t(p) * H;
    for (int j = 0; j < H; ++j) {
      g[j] = sigmoid(z[j]);                  // i
      g[H + j] = sigmoid(z[H + j]);          // f
      g[2 * H + j] = sigmoid(z[2 * H + j]);  // o
      g[3 * H + j] = std::tanh(z[3 * H + j]);
      c[j] = g[j] * g[3 * H + j] + (c_prev != nullptr ? g[H + j] * c_prev[j] : 0.0);
      h[j] = g[2 * H + j] * std::tanh(c[j]);
    }
    h_prev = h;
    c_prev = c;
  }
}

void lstm_backward(const double *W, const LstmCache &cache, std::span<const double> dh,
                   double *dW, double *db, std::span<double> dx) {
  const int T = cache.length, I = cache.input_dim, H = cache.hidden, C = I + H;
  if (dh.size() != size_t(T) * H || dx.size() != size_t(T) * I) {
    throw UsageError("LSTM backward: gradient shapes do not match the cache");
  }
  std::vector<double> dh_carry(H, 0.0), dc_carry(H, 0.0), dz(4 * H);
  for (int s = T - 1; s >= 0; --s) {
    const int p = cache.reverse ? T - 1 - s : s;
    const int q = s > 0 ? (cache.reverse ? T - s : s - 1) : -1;  // previous in processing order
    const double *g = cache.gates.data() + size_t(p) * 4 * H;
    const double *c = cache.c.data() + size_t(p) * H;
    const double *c_prev = q >= 0 ? cache.c.data() + size_t(q) * H : nullptr;
    const double *h_prev = q >= 0 ? cache.h.data() + size_t(q) * H : nullptr;
    for (int j = 0; j < H; ++j) {
      const double i = g[j], f = g[H + j], o = g[2 * H + j], gg = g[3 * H + j];
      const double tc = std::tanh(c[j]);
      const double dht = dh[size_t(p) * H + j] + dh_carry[j];
      const double d_o = dht * tc;
      const double dc = dht * o * (1.0 - tc * tc) + dc_carry[j];
      const double d_i = dc * gg;
      const double d_g = dc * i;
      const double d_f = c_prev != nullptr ? dc * c_prev[j] : 0.0;
      dc_carry[j] = dc * f;
      dz[j] = d_i * i * (1.0 - i);
      dz[H + j] = d_f * f * (1.0 - f);
      dz[2 * H + j] = d_o * o * (1.0 - o);
      dz[3 * H + j] = d_g * (1.0 - gg * gg);
    }
    const double *xp = cache.x.data() + size_t(p) * I;
    double *dxp = dx.data() + size_t(p) * I;
    std::fill(dxp, dxp + I, 0.0);
    std::fill(dh_carry.begin(), dh_carry.end(), 0.0);
    for (int r = 0; r < 4 * H; ++r) {
      const double d = dz[r];
      if (d == 0.0) continue;
      db[r] += d;
      const double *w = W + size_t(r) * C;
      double *dw = dW + size_t(r) * C;
      for (int k = 0; k < I; ++k) {
        dw[k] += d * xp[k];
        dxp[k] += d * w[k];
      }
      if (h_prev != nullptr) {
        for (int j = 0; j < H; ++j) {
          dw[I + j] += d * h_prev[j];
          dh_carry[j] += d * w[I + j];
        }
      }
    }
  }
}

void conv1d_maxpool(const double *W, const double *b, int dim, int kernel, int filters,
                    std::span<const double> x, ConvCache &cache) {
  if (kernel < 1 || dim < 1 || x.size() % size_t(dim) != 0) {
    throw UsageError("conv1d: inconsistent shapes");
  }
  const int T = static_cast<int>(x.size() / dim);
  cache.dim = dim;
  cache.kernel = kernel;
  cache.filters = filters;
  cache.pad = std::max(0, kernel - T);
  cache.positions = T + cache.pad;
  cache.x.assign(size_t(cache.pad) * dim, 0.0);
  cache.x.insert(cache.x.end(), x.begin(), x.end());
  const int windows = cache.positions - kernel + 1;
  const size_t width = size_t(kernel) * dim;
  cache.pre.assign(size_t(windows) * filters, 0.0);
  cache.argmax.assign(filters, 0);
  cache.out.assign(filters, 0.0);
  for (int w = 0; w < windows; ++w) {
    const double *xw = cache.x.data() + size_t(w) * dim;
    for (int f = 0; f < filters; ++f) {
      const double *wf = W + size_t(f) * width;
      double acc = b[f];
      for (size_t k = 0; k < width; ++k) acc += wf[k] * xw[k];
      cache.pre[size_t(w) * filters + f] = acc;
    }
  }
  for (int f = 0; f < filters; ++f) {
    double best = -1.0;
    for (int w = 0; w < windows; ++w) {
      const double v = std::max(0.0, cache.pre[size_t(w) * filters + f]);
      if (v > best) {
        best = v;
        cache.argmax[f] = w;
      }
    }
    cache.out[f] = best;
  }
}

void conv1d_maxpool_backward(const double *W, const ConvCache &cache,
                             std::span<const double> dout, double *dW, double *db,
                             std::span<double> dx) {
  const int dim = cache.dim, F = cache.filters;
  const size_t width = size_t(cache.kernel) * dim;
  if (dout.size() != size_t(F) || dx.size() != size_t(cache.positions - cache.pad) * dim) {
    throw UsageError("conv1d backward: gradient shapes do not match the cache");
  }
  std::vector<double> dxp(cache.x.size(), 0.0);
  for (int f = 0; f < F; ++f) {
    const int w = cache.argmax[f];
    if (cache.pre[size_t(w) * F + f] <= 0.0 || dout[f] == 0.0) continue;
    const double d = dout[f];
    db[f] += d;
    const double *xw = cache.x.data() + size_t(w) * dim;
    const double *wf = W + size_t(f) * width;
    double *dwf = dW + size_t(f) * width;
    double *dxw = dxp.data() + size_t(w) * dim;
    for (size_t k = 0; k < width; ++k) {
      dwf[k] += d * xw[k];
      dxw[k] += d * wf[k];
    }
  }
  std::copy(dxp.begin() + size_t(cache.pad) * dim, dxp.end(), dx.begin());
}

double softmax_inplace(std::span<double> logits) {
  double m = -INFINITY;
  for (double v : logits) m = std::max(m, v);
  double s = 0.0;
  for (double &v : logits) {
    v = std::exp(v - m);
    s += v;
  }
  for (double &v : logits) v /= s;
  return m + std::log(s);
}

TokenVocab::TokenVocab() { add("<unk>"); }

TokenVocab::TokenVocab(const std::vector<std::string> &words) {
  if (words.empty() || words[0] != "<unk>") add("<unk>");
  for (const auto &w : words) add(w);
}

int TokenVocab::add(const std::string &word) {
  auto [it, inserted] = index_.emplace(word, static_cast<int>(words_.size()));
  if (inserted) words_.push_back(word);
  return it->second;
}

int TokenVocab::id(const std::string &word) const {
  auto it = index_.find(word);
  return it == index_.end() ? 0 : it->second;
}

std::vector<int> TokenVocab::encode(const std::vector<std::string> &tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto &t : tokens) ids.push_back(id(t));
  return ids;
}

TokenVocab build_token_vocab(const Corpus &corpus, const EmbeddingModel *pretrained) {
  TokenVocab v;
  for (const auto &u : corpus.utterances) {
    for (const auto &t : u.tokens) v.add(t);
  }
  if (pretrained != nullptr) {
    for (const auto &w : pretrained->vocab.words()) v.add(w);
  }
  return v;
}

namespace {

constexpr int kDims[] = {50, 100, 300};
constexpr int kHidden[] = {64, 128, 256};

}  // namespace

GridPoint sample_grid_point(Rng &rng) {
  GridPoint p;
  p.embed_dim = kDims[rng.index(3)];
  p.hidden = kHidden[rng.index(3)];
  p.dropout = 0.1 * double(1 + rng.index(5));
  p.kernel = 2 + static_cast<int>(rng.index(4));
  p.filters = 50 * (1 + static_cast<int>(rng.index(5)));
  return p;
}

std::vector<GridPoint> sample_grid(uint64_t seed, int n) {
  Rng rng(seed);
  std::vector<GridPoint> out;
  for (int i = 0; i < n; ++i) out.push_back(sample_grid_point(rng));
  return out;
}

bool in_grid(const GridPoint &p) {
  const bool dim = std::find(std::begin(kDims), std::end(kDims), p.embed_dim) != std::end(kDims);
  const bool hid = std::find(std::begin(kHidden), std::end(kHidden), p.hidden) != std::end(kHidden);
  const double steps = p.dropout * 10.0;
  const bool drop = p.dropout > 0.05 && p.dropout < 0.55 && std::abs(steps - std::round(steps)) < 1e-9;
  return dim && hid && drop && p.kernel >= 2 && p.kernel <= 5 && p.filters >= 50 &&
         p.filters <= 250 && p.filters % 50 == 0;
}

std::vector<SearchResult> random_search(
    const std::vector<GridPoint> &points, uint64_t seed, int threads,
    const std::function<double(const GridPoint &, uint64_t seed)> &train_and_score) {
  Rng rng(seed);
  std::vector<SearchResult> results(points.size());
  for (size_t i = 0; i < points.size(); ++i) {
    results[i].point = points[i];
    results[i].seed = rng.fork();
  }
  std::vector<std::exception_ptr> errors(points.size());
  const auto n = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, threads))
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    try {
      results[i].dev_score = train_and_score(results[i].point, results[i].seed);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace nluforge
