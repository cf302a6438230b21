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

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace smpf {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using VecRef = Eigen::Ref<Eigen::VectorXd>;
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd>;
using MatRef = Eigen::Ref<Eigen::MatrixXd>;
using ConstMatRef = Eigen::Ref<const Eigen::MatrixXd>;
using ConstVecMap = Eigen::Map<const Eigen::VectorXd>;
using VecMap = Eigen::Map<Eigen::VectorXd>;

// Small dense kernels for the per-path hot loops. Operands are column-major
// with leading dimension `lda`; dimensions there are tiny, where these plain
// loops beat Eigen's dynamic-size dispatch.
namespace kernel {

/// y = A x (accumulate == false) or y += A x.
inline void gemv(const double* A, Eigen::Index rows, Eigen::Index cols,
                 Eigen::Index lda, const double* x, double* y, bool accumulate) {
  Eigen::Index j0 = 0;
  if (!accumulate) {
    // Assign from the first column; a zeroing loop would become a memset call.
    if (cols == 0) {
      for (Eigen::Index i = 0; i < rows; ++i) y[i] = 0.0;
      return;
    }
    const double x0 = x[0];
    for (Eigen::Index i = 0; i < rows; ++i) y[i] = A[i] * x0;
    j0 = 1;
  }
  for (Eigen::Index j = j0; j < cols; ++j) {
    const double xj = x[j];
    const double* a = A + j * lda;
    for (Eigen::Index i = 0; i < rows; ++i) y[i] += a[i] * xj;
  }
}

/// y = A^T x (accumulate == false) or y += A^T x.
inline void gemv_t(const double* A, Eigen::Index rows, Eigen::Index cols,
                   Eigen::Index lda, const double* x, double* y,
                   bool accumulate) {
  for (Eigen::Index j = 0; j < cols; ++j) {
    const double* a = A + j * lda;
    double acc = 0.0;
    for (Eigen::Index i = 0; i < rows; ++i) acc += a[i] * x[i];
    y[j] = accumulate ? y[j] + acc : acc;
  }
}

inline void gemv(const Mat& A, const double* x, double* y, bool accumulate) {
  gemv(A.data(), A.rows(), A.cols(), A.rows(), x, y, accumulate);
}

inline void gemv_t(const Mat& A, const double* x, double* y, bool accumulate) {
  gemv_t(A.data(), A.rows(), A.cols(), A.rows(), x, y, accumulate);
}

/// out = A for a column-major destination with leading dimension ldo.
inline void copy(const Mat& A, double* out, Eigen::Index ldo) {
  for (Eigen::Index j = 0; j < A.cols(); ++j)
    for (Eigen::Index i = 0; i < A.rows(); ++i) out[i + j * ldo] = A(i, j);
}

}  // namespace kernel

/// Monte Carlo estimate. `se == 0` means every sample was identical, which is
/// how deterministic quantities are flagged.
struct Estimate {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;

  bool deterministic() const { return se == 0.0; }
};

/// Pairwise (tree) summation in index order. The result depends only on the
/// input order, never on how the samples were produced.
double pairwise_sum(std::span<const double> values);

/// Sample mean and standard error of the mean.
Estimate estimate(std::span<const double> samples);

/// Named numeric parameters for registered library components (factors,
/// drifts, costs, controls). Scalars are stored as 1x1 matrices and plain
/// lists as column vectors.
struct ParamBlock {
  std::string name;
  std::map<std::string, Mat> values;
  std::vector<ParamBlock> items;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  const Mat& matrix(const std::string& key) const;
  Mat matrix_or(const std::string& key, const Mat& fallback) const;
  double scalar(const std::string& key) const;
  double scalar_or(const std::string& key, double fallback) const;
  Vec vector(const std::string& key) const;
  /// Throws InputError naming `context` if a key outside `allowed` is present.
  void require_only(std::initializer_list<const char*> allowed,
                    const std::string& context) const;
};

}  // namespace smpf
