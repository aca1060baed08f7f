#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "srmap/environments.hpp"
#include "srmap/matrix.hpp"

namespace srmap {

/// Discount and number of transition steps kept in the truncated series.
/// An empty horizon means "sum until the terms vanish", which needs gamma < 1.
struct SRConfig {
  double gamma = 0.9;
  std::optional<std::size_t> horizon = 10;

  void validate() const;
};

struct SuccessorMatrix {
  Matrix entries;
  SRConfig config;
};

/// M = sum_{t=0..H} gamma^t T^t by repeated multiply-accumulate.
SuccessorMatrix successor_matrix(const Matrix& tp, const SRConfig& config);
inline SuccessorMatrix successor_matrix(const TransitionMatrix& tp, const SRConfig& config) {
  return successor_matrix(tp.probs, config);
}

/// V(s) = sum_{s'} M(s,s') R(s'). An empty reward vector means R = 1 everywhere.
std::vector<double> value_function(const SuccessorMatrix& sr, std::span<const double> rewards);

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // descending
  Matrix eigenvectors;              // column k pairs with eigenvalues[k]
  double symmetrization_residual = 0.0;
  std::size_t sweeps = 0;
};

struct JacobiOptions {
  double tol = 1e-10;
  std::size_t max_sweeps = 100;
};

/// Cyclic Jacobi rotations on a symmetric matrix. Eigenpairs come back in
/// descending eigenvalue order; exact ties keep their diagonal order. Each
/// eigenvector's sign is fixed so its entries sum to a non-negative value.
SpectralDecomposition jacobi_eigen(const Matrix& a, const JacobiOptions& options = {});

/// (A + A^T) / 2 and ||(A - A^T) / 2||_F.
Matrix symmetric_part(const Matrix& a, double* residual = nullptr);

struct EigenMap {
  Matrix values;  // grid-shaped, walls hold 0
  std::vector<bool> wall_mask;
  double eigenvalue = 0.0;
  std::size_t rank = 0;  // 0 = largest eigenvalue
};

struct EigenMapSet {
  std::vector<EigenMap> maps;
  std::vector<double> eigenvalues;  // full spectrum over the valid states
  double symmetrization_residual = 0.0;
};

/// Decomposes the symmetric part of M restricted to the valid states and
/// scatters the leading k eigenvectors back onto the grid.
EigenMapSet sr_eigenmaps(const SuccessorMatrix& sr, const StateSpace& space, std::size_t k,
                         const JacobiOptions& options = {});

}  // namespace srmap
