// Copyright 2026 The RBP Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rbp/rng.hpp"

#include <algorithm>
#include <numeric>

#include "rbp/error.hpp"

namespace rbp {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                          std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stage) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(master ^ h) + index);
}

int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs,
                       Rng& rng) {
  const int n = static_cast<int>(probs.size());
  require(n > 0, ErrorKind::kEmptyInput, "sample_categorical: empty support");
  const double u = uniform01(rng);
  double acc = 0.0;
  int last_positive = 0;
  for (int i = 0; i < n; ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    acc += probs[i];
    if (u < acc) return i;
  }
  return last_positive;
}

int uniform_index(int n, Rng& rng) {
  require(n > 0, ErrorKind::kEmptyInput, "uniform_index: n must be positive");
  // Plain modulo is biased, so the tail is rejected.
  const std::uint64_t range = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % range;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return static_cast<int>(r % range);
}

Eigen::VectorXd uniform_simplex(int n, Rng& rng) {
  require(n > 0, ErrorKind::kInvalidArgument, "uniform_simplex: n < 1");
  std::vector<double> cuts(n + 1);
  cuts[0] = 0.0;
  cuts[n] = 1.0;
  for (int i = 1; i < n; ++i) cuts[i] = uniform01(rng);
  std::sort(cuts.begin() + 1, cuts.end() - 1);
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = cuts[i + 1] - cuts[i];
  return out;
}

std::vector<int> permutation(int n, Rng& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(idx[i], idx[uniform_index(i + 1, rng)]);
  return idx;
}

}  // namespace rbp
