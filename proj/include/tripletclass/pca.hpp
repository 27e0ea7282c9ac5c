#pragma once

#include <Eigen/Dense>

#include "tripletclass/tensor.hpp"

namespace tripletclass {

struct Projection {
  Tensor coords;  // [N, 2]
  bool degenerate = false;
};

/// Projects [N, D] embeddings onto their top-2 principal components
/// (mean-centered). Sign convention: the largest-magnitude loading of each
/// component is positive, so the output is platform-stable. A point cloud
/// with no variance comes back as all zeros with the degenerate flag set.
inline Projection project_embeddings_2d(const Tensor& embeddings) {
  if (embeddings.rank() != 2) fail(ErrorCode::contract, "project_embeddings_2d expects [N,D]");
  const int N = embeddings.shape[0], D = embeddings.shape[1];
  if (N < 2 || D < 2) {
    fail(ErrorCode::contract, "project_embeddings_2d needs N >= 2 and D >= 2");
  }

  Eigen::MatrixXd x(N, D);
  for (int i = 0; i < N; ++i) {
    for (int d = 0; d < D; ++d) x(i, d) = embeddings.at(i, d);
  }
  x.rowwise() -= x.colwise().mean();

  const Eigen::MatrixXd cov = x.transpose() * x / std::max(N - 1, 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) {
    fail(ErrorCode::numerical, "eigendecomposition failed in project_embeddings_2d");
  }

  Projection out;
  out.coords = Tensor({N, 2});
  // eigenvalues come back ascending; the last two columns span the plane
  if (solver.eigenvalues()(D - 1) <= 1e-12) {
    out.degenerate = true;
    return out;
  }

  Eigen::MatrixXd basis(D, 2);
  basis.col(0) = solver.eigenvectors().col(D - 1);
  basis.col(1) = solver.eigenvectors().col(D - 2);
  for (int c = 0; c < 2; ++c) {
    int arg = 0;
    for (int d = 1; d < D; ++d) {
      if (std::abs(basis(d, c)) > std::abs(basis(arg, c))) arg = d;
    }
    if (basis(arg, c) < 0.0) basis.col(c) = -basis.col(c);
  }

  const Eigen::MatrixXd projected = x * basis;
  for (int i = 0; i < N; ++i) {
    out.coords.at(i, 0) = static_cast<float>(projected(i, 0));
    out.coords.at(i, 1) = static_cast<float>(projected(i, 1));
  }
  return out;
}

}  // namespace tripletclass
