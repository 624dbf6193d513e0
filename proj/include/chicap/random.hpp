#pragma once

// Seeded generators for random states, channels and ensembles. Everything
// draws from a caller-owned std::mt19937_64.

#include <random>
#include <vector>

#include "chicap/channel.hpp"
#include "chicap/core.hpp"
#include "chicap/density.hpp"
#include "chicap/ensemble.hpp"
#include "chicap/linalg.hpp"

namespace chicap::random {

using Rng = std::mt19937_64;

inline Matrix ginibre(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix g(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) g(i, j) = cplx(n(rng), n(rng));
  return g;
}

/// Haar-random unit vector.
inline Vector pure_vector(Eigen::Index dim, Rng& rng) {
  Vector v = ginibre(dim, 1, rng).col(0);
  return v / v.norm();
}

inline DensityMatrix pure_state(Eigen::Index dim, Rng& rng) { return DensityMatrix::pure(pure_vector(dim, rng)); }

/// G G^dagger / Tr with G a dim x rank Ginibre matrix.
inline DensityMatrix mixed_state(Eigen::Index dim, Rng& rng, Eigen::Index rank = 0) {
  if (rank <= 0) rank = dim;
  const Matrix g = ginibre(dim, rank, rng);
  const Matrix m = g * g.adjoint();
  return DensityMatrix::trusted(m / linalg::real_trace(m));
}

/// Haar-random isometry with orthonormal columns.
inline Matrix isometry(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  return linalg::orthonormal_columns(ginibre(rows, cols, rng));
}

inline Matrix unitary(Eigen::Index dim, Rng& rng) { return isometry(dim, dim, rng); }

/// Channel with `n_kraus` Kraus operators cut from a random isometry
/// C^{dim_in} -> C^{dim_out} (x) C^{n_kraus}.
inline Channel channel(Eigen::Index dim_in, Eigen::Index dim_out, Eigen::Index n_kraus, Rng& rng) {
  if (dim_out * n_kraus < dim_in) throw InvalidArgument("random channel: need dim_out * n_kraus >= dim_in");
  const Matrix v = isometry(dim_out * n_kraus, dim_in, rng);
  std::vector<Matrix> kraus;
  for (Eigen::Index k = 0; k < n_kraus; ++k) kraus.push_back(v.middleRows(k * dim_out, dim_out));
  return validate_channel(Channel(dim_in, dim_out, std::move(kraus)));
}

/// Column-stochastic matrix with flat-Dirichlet columns.
inline RealMatrix stochastic_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  RealMatrix t(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) t(i, j) = e(rng);
    t.col(j) /= t.col(j).sum();
  }
  return t;
}

inline std::vector<double> probability_vector(std::size_t size, Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  std::vector<double> w(size);
  double total = 0.0;
  for (double& x : w) total += (x = e(rng) + 1e-3);
  for (double& x : w) x /= total;
  return w;
}

inline Ensemble ensemble(Eigen::Index dim, std::size_t size, Rng& rng, bool pure = false) {
  std::vector<DensityMatrix> states;
  for (std::size_t i = 0; i < size; ++i) states.push_back(pure ? pure_state(dim, rng) : mixed_state(dim, rng));
  return Ensemble(probability_vector(size, rng), std::move(states));
}

}  // namespace chicap::random
