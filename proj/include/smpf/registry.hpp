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

#include <algorithm>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

#include "smpf/errors.hpp"
#include "smpf/types.hpp"

namespace smpf {

/// Name -> builder table for components instantiated from config files.
/// Builders receive the parameter block and the problem dimensions.
template <typename Product>
class Library {
 public:
  using Builder = std::function<Product(const ParamBlock&, std::size_t state_dim,
                                        std::size_t control_dim)>;

  void add(const std::string& name, std::string summary, Builder builder) {
    std::lock_guard lock(mu_);
    entries_[name] = Entry{std::move(summary), std::move(builder)};
  }

  bool contains(const std::string& name) const {
    std::lock_guard lock(mu_);
    return entries_.count(name) != 0;
  }

  Product build(const ParamBlock& params, std::size_t state_dim,
                std::size_t control_dim) const {
    Builder builder;
    {
      std::lock_guard lock(mu_);
      auto it = entries_.find(params.name);
      if (it == entries_.end())
        throw InputError("no registered component named '" + params.name +
                         "'");
      builder = it->second.builder;
    }
    return builder(params, state_dim, control_dim);
  }

  std::vector<std::pair<std::string, std::string>> list() const {
    std::lock_guard lock(mu_);
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& [name, entry] : entries_) out.emplace_back(name, entry.summary);
    return out;
  }

 private:
  struct Entry {
    std::string summary;
    Builder builder;
  };
  mutable std::mutex mu_;
  std::map<std::string, Entry> entries_;
};

/// Piecewise-constant matrix coefficient on a uniform grid. Entry n applies on
/// [t_n, t_{n+1}); a single entry is a constant coefficient.
class MatrixSchedule {
 public:
  MatrixSchedule() = default;
  explicit MatrixSchedule(Mat constant) : table_{std::move(constant)} {}
  MatrixSchedule(std::vector<Mat> table, double dt);

  const Mat& at(double t) const;
  const Mat& node(std::size_t n) const {
    return table_[std::min(n, table_.size() - 1)];
  }
  bool empty() const { return table_.empty(); }
  bool is_constant() const { return table_.size() == 1; }
  std::size_t size() const { return table_.size(); }
  Eigen::Index rows() const { return table_.empty() ? 0 : table_[0].rows(); }
  Eigen::Index cols() const { return table_.empty() ? 0 : table_[0].cols(); }

 private:
  std::vector<Mat> table_;
  double dt_ = 0.0;
};

}  // namespace smpf
