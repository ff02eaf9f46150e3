#pragma once

#include <cstddef>
#include <random>

#include "oracles.hpp"
#include "porodec/models.hpp"

namespace oracle {

/// Dense two-field system with random SPD blocks, coupling entries in
/// [-0.3, 0.3] and smooth time-dependent loads.
inline porodec::TwoFieldSystem random_system(std::mt19937_64& rng, std::size_t nu, std::size_t np) {
  using porodec::SparseMatrix;
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  Mat d = zeros(np, nu);
  for (auto& row : d)
    for (auto& v : row) v = 0.3 * U(rng);
  porodec::LoadVector f(nu), g(np);
  porodec::Vector fs(nu), gs(np), p0(np);
  for (auto& v : fs) v = U(rng);
  for (auto& v : gs) v = U(rng);
  for (auto& v : p0) v = U(rng);
  f.add_term(fs, [](double t) { return std::cos(2 * t); });
  g.add_term(gs, [](double t) { return 1.0 + t; });
  return porodec::TwoFieldSystem::from_matrices(
      SparseMatrix::from_dense(random_spd(nu, rng)), SparseMatrix::from_dense(random_spd(np, rng)),
      SparseMatrix::from_dense(random_spd(np, rng)), SparseMatrix::from_dense(d), f, g, p0);
}

}  // namespace oracle
