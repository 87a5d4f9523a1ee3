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

#ifndef RBP_RNG_HPP_
#define RBP_RNG_HPP_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace rbp {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Counter-based seed derivation. The stage name is hashed with FNV-1a and
// mixed with the master seed and the index through splitmix64, so any stage
// can be re-run alone given (master, stage, index).
std::uint64_t derive_seed(std::uint64_t master, std::string_view stage,
                          std::uint64_t index = 0);

inline Rng make_rng(std::uint64_t master, std::string_view stage,
                    std::uint64_t index = 0) {
  return Rng(derive_seed(master, stage, index));
}

// Uniform on [0, 1) with 53 random bits. Written out rather than taken from
// std::uniform_real_distribution so streams match across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Inverse-CDF draw. The final index absorbs rounding in the cumulative sum.
int sample_categorical(const Eigen::Ref<const Eigen::VectorXd>& probs,
                       Rng& rng);

int uniform_index(int n, Rng& rng);

// Symmetric Dirichlet(1, ..., 1), i.e. uniform on the simplex, through
// sorted uniform spacings.
Eigen::VectorXd uniform_simplex(int n, Rng& rng);

// Fisher-Yates.
std::vector<int> permutation(int n, Rng& rng);

}  // namespace rbp

#endif  // RBP_RNG_HPP_
