#pragma once

// Direct fixed-point solve of the Ulam matrix via sparse LU. Power iteration
// stalls when the neutral conveyor is stiff (alpha near or above 3/4: the
// finest-cell relaxation and the transit time through the refined tail both
// exceed 1e5 sweeps), so the stationary vector is obtained by solving
// (P^T - I) m = 0 with one row replaced by the normalization sum(m) = 1.
// The residual is still reported from an explicit multiplication.

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include "irand/ulam.hpp"

namespace irand {

inline DensityResult invariant_density_direct(const SparseRowMatrix& matrix,
                                              const UlamGrid& grid,
                                              unsigned workers = 1) {
  const std::size_t K = grid.cells();
  if (matrix.size != K)
    throw std::invalid_argument("invariant_density_direct: size mismatch");

  using Trip = Eigen::Triplet<double>;
  std::vector<Trip> trips;
  trips.reserve(matrix.col.size() + 2 * K);
  // rows 1..K-1: (P^T - I) m = 0 ; row 0: sum(m) = 1
  for (std::size_t j = 0; j < K; ++j) trips.emplace_back(0, j, 1.0);
  for (std::size_t i = 0; i < K; ++i)
    for (std::size_t k = matrix.row_begin[i]; k < matrix.row_begin[i + 1]; ++k) {
      const std::size_t j = matrix.col[k];
      if (j == 0) continue;
      trips.emplace_back(static_cast<int>(j), static_cast<int>(i), matrix.val[k]);
    }
  for (std::size_t j = 1; j < K; ++j)
    trips.emplace_back(static_cast<int>(j), static_cast<int>(j), -1.0);

  Eigen::SparseMatrix<double> A(static_cast<int>(K), static_cast<int>(K));
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("invariant_density_direct: factorization failed");
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(static_cast<int>(K));
  rhs[0] = 1.0;
  Eigen::VectorXd m = lu.solve(rhs);
  if (lu.info() != Eigen::Success)
    throw std::runtime_error("invariant_density_direct: solve failed");

  DensityResult out;
  out.density.grid = grid;
  out.density.mass.assign(m.data(), m.data() + K);
  // clip roundoff negatives and renormalize
  double total = 0.0;
  for (auto& v : out.density.mass) {
    if (v < 0.0 && v > -1e-12) v = 0.0;
    total += v;
  }
  for (auto& v : out.density.mass) v /= total;

  const SparseRowMatrix pull = transpose(matrix);
  std::vector<double> scratch(K);
  out.residual_l1 =
      detail::exit_residual(pull, out.density.mass, scratch, workers);
  out.iterations = 1;
  out.converged = out.residual_l1 < 1e-10;
  return out;
}

}  // namespace irand
