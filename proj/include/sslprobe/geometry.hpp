// Copyright 2026  The sslprobe Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sslprobe/aggregation.hpp"
#include "sslprobe/common.hpp"
#include "sslprobe/dataset.hpp"

namespace sslprobe {

struct CentroidMatrix {
  Eigen::MatrixXd centroids;  // N_c x d
  std::vector<int> class_ids;
  std::vector<std::int64_t> counts;

  Eigen::Index class_count() const { return centroids.rows(); }
};

/// Exact per-class means. Throws naming the first class with no samples.
CentroidMatrix class_centroids(const SampleSet& samples, int class_count);

/// As class_centroids, but classes with no samples are left out (with a
/// warning) instead of raising.
CentroidMatrix present_class_centroids(const SampleSet& samples, int class_count);

/// Principal directions of a centred point set, one per row.
template <typename Scalar>
struct BasicSubspace {
  DenseMatrix<Scalar> basis;       // k x d, orthonormal rows
  DenseVector<Scalar> variances;   // k, non-increasing
  Eigen::Index source_rank = 0;

  Eigen::Index size() const { return basis.rows(); }
  Eigen::Index ambient_dim() const { return basis.cols(); }
};
using Subspace = BasicSubspace<double>;

/// PCA of the row-centred centroid matrix. Returns min(k, N_c - 1, d)
/// directions; variances use the N_c - 1 denominator. Each direction's
/// largest-magnitude coordinate is positive.
template <typename Derived>
BasicSubspace<typename Derived::Scalar> fit_subspace(const Eigen::MatrixBase<Derived>& points, Eigen::Index k);

Subspace fit_subspace(const CentroidMatrix& centroids, Eigen::Index k);

/// Sum_i var_i |R u_i|^2 / Sum_i var_i, where R projects out span(Y).
/// Y's basis rows must be orthonormal.
template <typename Scalar>
Scalar crv_value(const BasicSubspace<Scalar>& x, const BasicSubspace<Scalar>& y);

struct CrvReport {
  double value = 0.0;
  Eigen::Index k_x = 0;
  Eigen::Index k_y = 0;
  int layer = 0;
  std::string model_id;
  std::string test_set;
  LabelKind pair_x = LabelKind::kPhone;
  LabelKind pair_y = LabelKind::kSpeaker;
};

CrvReport crv(const Subspace& x, const Subspace& y);

struct GeometryConfig {
  Eigen::Index k_phone = 35;
  Eigen::Index k_speaker = 35;
  Eigen::Index k_tone = 35;  // clipped to N_tones - 1 by the rank bound
};

using KindPair = std::pair<LabelKind, LabelKind>;

/// All six directed pairs of {phone, speaker, tone}.
std::vector<KindPair> all_directed_pairs();

/// For each layer, centroid subspaces for every kind named in `pairs`, then
/// CRV for each pair in the given order. Throws UnsupportedError if a tone
/// pair is requested on a corpus without tone labels.
std::vector<CrvReport> crv_sweep(const Dataset& dataset, std::span<const int> layers, std::span<const KindPair> pairs,
                                 const GeometryConfig& config = {}, int workers = 1);

// ---------------------------------------------------------------------------

template <typename Derived>
BasicSubspace<typename Derived::Scalar> fit_subspace(const Eigen::MatrixBase<Derived>& points, Eigen::Index k) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = points.rows();
  const Eigen::Index d = points.cols();
  if (n < 2) throw Error("PCA needs at least two points");
  if (k < 1) throw Error("requested PC count must be positive");

  const DenseMatrix<Scalar> centred = points.rowwise() - points.colwise().mean();
  Eigen::JacobiSVD<DenseMatrix<Scalar>> svd(centred, Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(0) == Scalar(0)) throw Error("all points identical; subspace has rank 0");

  const Scalar tol = sv(0) * static_cast<Scalar>(std::max(n, d)) * Eigen::NumTraits<Scalar>::epsilon();
  BasicSubspace<Scalar> out;
  out.source_rank = (sv.array() > tol).count();

  const Eigen::Index keep = std::min({k, n - 1, d, static_cast<Eigen::Index>(sv.size())});
  out.basis = svd.matrixV().leftCols(keep).transpose();
  out.variances = sv.head(keep).array().square() / static_cast<Scalar>(n - 1);
  for (Eigen::Index i = 0; i < keep; ++i) {
    Eigen::Index arg = 0;
    out.basis.row(i).cwiseAbs().maxCoeff(&arg);
    if (out.basis(i, arg) < Scalar(0)) out.basis.row(i) *= Scalar(-1);
  }
  return out;
}

template <typename Scalar>
Scalar crv_value(const BasicSubspace<Scalar>& x, const BasicSubspace<Scalar>& y) {
  if (x.ambient_dim() != y.ambient_dim()) throw Error("subspaces live in different ambient dimensions");
  const Scalar total = x.variances.sum();
  if (!(total > Scalar(0))) throw Error("subspace X carries no variance");
  // |R u|^2 = 1 - |W u|^2 for orthonormal W rows; clamp rounding below 0.
  const DenseVector<Scalar> captured = (x.basis * y.basis.transpose()).rowwise().squaredNorm();
  const DenseVector<Scalar> residual = (Scalar(1) - captured.array()).max(Scalar(0)).min(Scalar(1));
  return x.variances.dot(residual) / total;
}

}  // namespace sslprobe
