// Copyright 2026 The smpf Authors
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

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "smpf/parallel.hpp"

namespace smpf {

/// Philox4x32-10 block function (Salmon et al., SC'11). Stateless: the output
/// is a pure function of (counter, key).
struct Philox4x32 {
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter apply(Counter ctr, Key key);
};

/// Standard-normal substream addressed by (seed, stream). Counter layout:
/// words 0-1 hold the block index, words 2-3 the stream id; the key is the
/// seed. Two normals per block via Box-Muller.
class NormalStream {
 public:
  NormalStream(std::uint64_t seed, std::uint64_t stream);

  double next();
  /// Uniform on the open interval (0, 1), consuming half a block.
  double next_uniform();

 private:
  void refill();

  Philox4x32::Key key_;
  std::uint64_t stream_;
  std::uint64_t block_ = 0;
  std::array<std::uint32_t, 4> words_{};
  int cursor_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Brownian increments for a set of paths, stored path-major as
/// [path][step][component]. Path p always draws from NormalStream(seed, p).
class BrownianIncrements {
 public:
  static std::shared_ptr<const BrownianIncrements> generate(
      std::uint64_t seed, std::size_t n_paths, std::size_t n_steps,
      std::size_t dim, double dt, const ExecOptions& exec = {});

  /// Wraps given increments, laid out [path][step][dim].
  static std::shared_ptr<const BrownianIncrements> from_values(
      std::size_t n_paths, std::size_t n_steps, std::size_t dim, double dt,
      std::vector<double> values, std::uint64_t seed = 0);

  /// Sums groups of `factor` consecutive steps. The coarse increments are
  /// exactly those of the same Brownian paths on a grid with `factor` times
  /// the step.
  std::shared_ptr<const BrownianIncrements> coarsened(std::size_t factor) const;

  std::size_t n_paths() const { return n_paths_; }
  std::size_t n_steps() const { return n_steps_; }
  std::size_t dim() const { return dim_; }
  double dt() const { return dt_; }
  std::uint64_t seed() const { return seed_; }

  std::span<const double> step(std::size_t path, std::size_t n) const {
    return {data_.data() + (path * n_steps_ + n) * dim_, dim_};
  }
  const double* path_data(std::size_t path) const {
    return data_.data() + path * n_steps_ * dim_;
  }
  std::span<const double> raw() const { return data_; }

  /// FNV-1a over the raw bytes; used to assert common random numbers.
  std::uint64_t checksum() const;

 private:
  BrownianIncrements() = default;

  std::uint64_t seed_ = 0;
  std::size_t n_paths_ = 0;
  std::size_t n_steps_ = 0;
  std::size_t dim_ = 0;
  double dt_ = 0.0;
  std::vector<double> data_;
};

std::uint64_t fnv1a(const void* data, std::size_t bytes,
                    std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace smpf
