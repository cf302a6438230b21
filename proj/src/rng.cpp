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

#include "smpf/rng.hpp"

#include <cmath>
#include <numbers>

#include "smpf/errors.hpp"

namespace smpf {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

// 53 random bits mapped to the open interval (0, 1).
inline double to_unit(std::uint32_t hi, std::uint32_t lo) {
  const std::uint64_t bits =
      ((static_cast<std::uint64_t>(hi) << 32) | lo) >> 11;
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

}  // namespace

Philox4x32::Counter Philox4x32::apply(Counter ctr, Key key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kPhiloxW0;
      key[1] += kPhiloxW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

NormalStream::NormalStream(std::uint64_t seed, std::uint64_t stream)
    : key_{static_cast<std::uint32_t>(seed),
           static_cast<std::uint32_t>(seed >> 32)},
      stream_(stream) {}

void NormalStream::refill() {
  const Philox4x32::Counter ctr{static_cast<std::uint32_t>(block_),
                                static_cast<std::uint32_t>(block_ >> 32),
                                static_cast<std::uint32_t>(stream_),
                                static_cast<std::uint32_t>(stream_ >> 32)};
  words_ = Philox4x32::apply(ctr, key_);
  ++block_;
  cursor_ = 0;
}

double NormalStream::next_uniform() {
  if (cursor_ > 2) refill();
  const double u = to_unit(words_[cursor_], words_[cursor_ + 1]);
  cursor_ += 2;
  return u;
}

double NormalStream::next() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::shared_ptr<const BrownianIncrements> BrownianIncrements::generate(
    std::uint64_t seed, std::size_t n_paths, std::size_t n_steps,
    std::size_t dim, double dt, const ExecOptions& exec) {
  if (n_paths == 0 || n_steps == 0 || dim == 0)
    throw InputError("Brownian increments need positive paths, steps, dim");
  if (!(dt > 0.0)) throw InputError("Brownian increments need dt > 0");
  std::shared_ptr<BrownianIncrements> out(new BrownianIncrements());
  out->seed_ = seed;
  out->n_paths_ = n_paths;
  out->n_steps_ = n_steps;
  out->dim_ = dim;
  out->dt_ = dt;
  out->data_.resize(n_paths * n_steps * dim);
  const double scale = std::sqrt(dt);
  const std::size_t per_path = n_steps * dim;
  double* data = out->data_.data();
  parallel_for(n_paths, exec, [&](std::size_t begin, std::size_t end) {
    for (std::size_t p = begin; p < end; ++p) {
      NormalStream rng(seed, p);
      double* row = data + p * per_path;
      for (std::size_t i = 0; i < per_path; ++i) row[i] = scale * rng.next();
    }
  });
  return out;
}

std::shared_ptr<const BrownianIncrements> BrownianIncrements::from_values(
    std::size_t n_paths, std::size_t n_steps, std::size_t dim, double dt,
    std::vector<double> values, std::uint64_t seed) {
  if (values.size() != n_paths * n_steps * dim)
    throw InputError("increment array has " + std::to_string(values.size()) +
                     " entries, expected " +
                     std::to_string(n_paths * n_steps * dim));
  if (!(dt > 0.0)) throw InputError("increment step must be positive");
  std::shared_ptr<BrownianIncrements> out(new BrownianIncrements());
  out->seed_ = seed;
  out->n_paths_ = n_paths;
  out->n_steps_ = n_steps;
  out->dim_ = dim;
  out->dt_ = dt;
  out->data_ = std::move(values);
  return out;
}

std::shared_ptr<const BrownianIncrements> BrownianIncrements::coarsened(
    std::size_t factor) const {
  if (factor == 0 || n_steps_ % factor != 0)
    throw InputError("coarsening factor must divide the number of steps");
  std::shared_ptr<BrownianIncrements> out(new BrownianIncrements());
  out->seed_ = seed_;
  out->n_paths_ = n_paths_;
  out->n_steps_ = n_steps_ / factor;
  out->dim_ = dim_;
  out->dt_ = dt_ * static_cast<double>(factor);
  out->data_.assign(n_paths_ * out->n_steps_ * dim_, 0.0);
  for (std::size_t p = 0; p < n_paths_; ++p) {
    for (std::size_t n = 0; n < n_steps_; ++n) {
      const auto fine = step(p, n);
      double* coarse =
          out->data_.data() + (p * out->n_steps_ + n / factor) * dim_;
      for (std::size_t j = 0; j < dim_; ++j) coarse[j] += fine[j];
    }
  }
  return out;
}

std::uint64_t BrownianIncrements::checksum() const {
  return fnv1a(data_.data(), data_.size() * sizeof(double));
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t h) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace smpf
