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

#include "smpf/registry.hpp"

#include <cmath>

namespace smpf {

MatrixSchedule::MatrixSchedule(std::vector<Mat> table, double dt)
    : table_(std::move(table)), dt_(dt) {
  if (table_.empty()) throw InputError("empty coefficient table");
  for (const auto& m : table_) {
    if (m.rows() != table_[0].rows() || m.cols() != table_[0].cols())
      throw InputError("coefficient table entries must share one shape");
  }
  if (table_.size() > 1 && !(dt_ > 0.0))
    throw InputError("coefficient table needs a positive step");
}

const Mat& MatrixSchedule::at(double t) const {
  if (table_.size() == 1) return table_[0];
  // Grid times are n*dt up to rounding; the offset keeps t_n in cell n.
  const double cell = std::floor(t / dt_ + 1e-7);
  const std::size_t n =
      cell <= 0.0 ? 0 : static_cast<std::size_t>(cell);
  return node(n);
}

}  // namespace smpf
