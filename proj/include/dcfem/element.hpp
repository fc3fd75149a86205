#pragma once

#include "dcfem/types.hpp"

#include <stdexcept>

namespace dcfem {

/// Local matrices of one brick, edge order matching Mesh::cell_edges:
///   0..3   x-edges, index jy + 2*kz
///   4..7   y-edges, index ix + 2*kz
///   8..11  z-edges, index ix + 2*jy
/// Bases have unit line integral along their own edge.
template <typename Scalar>
struct ElementMatrices {
  Eigen::Matrix<Scalar, 12, 12> Se;  // mu_r^-1 <curl Ni, curl Nj>
  Eigen::Matrix<Scalar, 12, 12> Te;  // mu0 eps0 eps_r <Ni, Nj>
  Eigen::Matrix<Scalar, 12, 12> Re;  // mu0 sigma <Ni, Nj>
};

/// Closed-form local matrices for a brick of size a x b x c. Shape functions
/// are tensor products of P0(s) = 1-s, P1(s) = s, scaled by the inverse edge
/// length, so all integrals factor into the 1D tables
///   M[p][q] = int P_p P_q,  K[p][q] = int P_p' P_q',  D[p] = int P_p'.
template <typename Scalar>
ElementMatrices<Scalar> local_matrices(Scalar a, Scalar b, Scalar c, Scalar eps_r, Scalar mu_r,
                                       Scalar sigma) {
  if (!(a > Scalar(0) && b > Scalar(0) && c > Scalar(0)))
    throw std::invalid_argument("local_matrices: cell dimensions must be > 0");
  if (!(eps_r > Scalar(0) && mu_r > Scalar(0) && sigma >= Scalar(0)))
    throw std::invalid_argument("local_matrices: need eps_r > 0, mu_r > 0, sigma >= 0");

  const Scalar M[2][2] = {{Scalar(1) / 3, Scalar(1) / 6}, {Scalar(1) / 6, Scalar(1) / 3}};
  const Scalar K[2][2] = {{Scalar(1), Scalar(-1)}, {Scalar(-1), Scalar(1)}};
  const Scalar D[2] = {Scalar(-1), Scalar(1)};

  Eigen::Matrix<Scalar, 12, 12> curl = Eigen::Matrix<Scalar, 12, 12>::Zero();
  Eigen::Matrix<Scalar, 12, 12> mass = Eigen::Matrix<Scalar, 12, 12>::Zero();

  for (int k1 = 0; k1 < 2; ++k1)
    for (int j1 = 0; j1 < 2; ++j1)
      for (int k2 = 0; k2 < 2; ++k2)
        for (int j2 = 0; j2 < 2; ++j2) {
          // x-x
          curl(j1 + 2 * k1, j2 + 2 * k2) =
              b / (a * c) * M[j1][j2] * K[k1][k2] + c / (a * b) * K[j1][j2] * M[k1][k2];
          mass(j1 + 2 * k1, j2 + 2 * k2) = b * c / a * M[j1][j2] * M[k1][k2];
          // y-y (indices are (i,k) here)
          curl(4 + j1 + 2 * k1, 4 + j2 + 2 * k2) =
              a / (b * c) * M[j1][j2] * K[k1][k2] + c / (a * b) * K[j1][j2] * M[k1][k2];
          mass(4 + j1 + 2 * k1, 4 + j2 + 2 * k2) = a * c / b * M[j1][j2] * M[k1][k2];
          // z-z (indices are (i,j) here)
          curl(8 + j1 + 2 * k1, 8 + j2 + 2 * k2) =
              a / (b * c) * M[j1][j2] * K[k1][k2] + b / (a * c) * K[j1][j2] * M[k1][k2];
          mass(8 + j1 + 2 * k1, 8 + j2 + 2 * k2) = a * b / c * M[j1][j2] * M[k1][k2];
        }

  // Cross-axis curl blocks; the mass cross blocks vanish.
  for (int jx = 0; jx < 2; ++jx)
    for (int kx = 0; kx < 2; ++kx)
      for (int iy = 0; iy < 2; ++iy)
        for (int ky = 0; ky < 2; ++ky) {
          const Scalar v = -c / (a * b) * D[iy] * D[jx] * M[kx][ky];
          curl(jx + 2 * kx, 4 + iy + 2 * ky) = v;
          curl(4 + iy + 2 * ky, jx + 2 * kx) = v;
        }
  for (int jx = 0; jx < 2; ++jx)
    for (int kx = 0; kx < 2; ++kx)
      for (int iz = 0; iz < 2; ++iz)
        for (int jz = 0; jz < 2; ++jz) {
          const Scalar v = -b / (a * c) * D[iz] * D[kx] * M[jx][jz];
          curl(jx + 2 * kx, 8 + iz + 2 * jz) = v;
          curl(8 + iz + 2 * jz, jx + 2 * kx) = v;
        }
  for (int iy = 0; iy < 2; ++iy)
    for (int ky = 0; ky < 2; ++ky)
      for (int iz = 0; iz < 2; ++iz)
        for (int jz = 0; jz < 2; ++jz) {
          const Scalar v = -a / (b * c) * M[iy][iz] * D[jz] * D[ky];
          curl(4 + iy + 2 * ky, 8 + iz + 2 * jz) = v;
          curl(8 + iz + 2 * jz, 4 + iy + 2 * ky) = v;
        }

  ElementMatrices<Scalar> em;
  em.Se = curl / mu_r;
  em.Te = Scalar(mu0) * Scalar(eps0) * eps_r * mass;
  em.Re = Scalar(mu0) * sigma * mass;
  return em;
}

/// Corner-potential to edge-coefficient map of one brick (12 x 8, corners
/// indexed i + 2j + 4k). Columns span the local gradient space, which Se
/// annihilates.
template <typename Scalar = Real>
Eigen::Matrix<Scalar, 12, 8> local_gradient() {
  Eigen::Matrix<Scalar, 12, 8> g = Eigen::Matrix<Scalar, 12, 8>::Zero();
  auto corner = [](int i, int j, int k) { return i + 2 * j + 4 * k; };
  for (int k = 0; k < 2; ++k)
    for (int j = 0; j < 2; ++j) {
      g(j + 2 * k, corner(1, j, k)) = Scalar(1);
      g(j + 2 * k, corner(0, j, k)) = Scalar(-1);
    }
  for (int k = 0; k < 2; ++k)
    for (int i = 0; i < 2; ++i) {
      g(4 + i + 2 * k, corner(i, 1, k)) = Scalar(1);
      g(4 + i + 2 * k, corner(i, 0, k)) = Scalar(-1);
    }
  for (int j = 0; j < 2; ++j)
    for (int i = 0; i < 2; ++i) {
      g(8 + i + 2 * j, corner(i, j, 1)) = Scalar(1);
      g(8 + i + 2 * j, corner(i, j, 0)) = Scalar(-1);
    }
  return g;
}

}  // namespace dcfem
