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

#include "smpf/types.hpp"

#include <algorithm>
#include <cmath>

#include "smpf/errors.hpp"

namespace smpf {

double pairwise_sum(std::span<const double> values) {
  constexpr std::size_t kLeaf = 64;
  if (values.size() <= kLeaf) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

Estimate estimate(std::span<const double> samples) {
  Estimate e;
  e.n = samples.size();
  if (samples.empty()) return e;
  e.mean = pairwise_sum(samples) / static_cast<double>(e.n);
  // Identical samples give se == 0 exactly, which marks a deterministic value.
  const bool constant = std::all_of(samples.begin(), samples.end(),
                                    [&](double v) { return v == samples[0]; });
  if (constant) {
    e.mean = samples[0];
    return e;
  }
  if (e.n < 2) return e;
  std::vector<double> sq(e.n);
  for (std::size_t i = 0; i < e.n; ++i) {
    const double c = samples[i] - e.mean;
    sq[i] = c * c;
  }
  const double var = pairwise_sum(sq) / static_cast<double>(e.n - 1);
  e.se = std::sqrt(var / static_cast<double>(e.n));
  return e;
}

const Mat& ParamBlock::matrix(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end())
    throw InputError("parameter '" + key + "' missing in block '" + name + "'");
  return it->second;
}

Mat ParamBlock::matrix_or(const std::string& key, const Mat& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ParamBlock::scalar(const std::string& key) const {
  const Mat& m = matrix(key);
  if (m.size() != 1)
    throw InputError("parameter '" + key + "' in block '" + name +
                     "' must be a scalar");
  return m(0, 0);
}

double ParamBlock::scalar_or(const std::string& key, double fallback) const {
  return has(key) ? scalar(key) : fallback;
}

Vec ParamBlock::vector(const std::string& key) const {
  const Mat& m = matrix(key);
  if (m.cols() != 1 && m.rows() != 1)
    throw InputError("parameter '" + key + "' in block '" + name +
                     "' must be a vector");
  return m.cols() == 1 ? Vec(m.col(0)) : Vec(m.row(0).transpose());
}

void ParamBlock::require_only(std::initializer_list<const char*> allowed,
                              const std::string& context) const {
  for (const auto& [key, value] : values) {
    const bool ok = std::any_of(allowed.begin(), allowed.end(),
                                [&](const char* a) { return key == a; });
    if (!ok)
      throw InputError("unknown parameter '" + key + "' in " + context);
  }
}

}  // namespace smpf
