#pragma once

#include <Eigen/Dense>

#include <complex>
#include <numbers>

namespace dcfem {

/// Engine-wide working scalar.
///
/// The quasi-static solves run at frequencies several orders of magnitude
/// below the first structural resonance, so the response norm exceeds the
/// excitation norm by ~1e8 relative to ||A||. Extended precision keeps the
/// cross-solver agreement checks (direct vs modal vs reduced) below 1e-10;
/// plain double bottoms out near 1e-8 on these systems.
using Real = long double;
using Complex = std::complex<Real>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatR = Mat<Real>;
using VecR = Vec<Real>;
using MatC = Mat<Complex>;
using VecC = Vec<Complex>;
using Index = Eigen::Index;

// Physical constants, SI.
inline constexpr Real c0 = 299792458.0L;                              // m/s
inline constexpr Real mu0 = 4.0L * std::numbers::pi_v<Real> * 1e-7L;  // H/m
inline constexpr Real eps0 = 1.0L / (mu0 * c0 * c0);                  // F/m
inline constexpr Real pi = std::numbers::pi_v<Real>;

}  // namespace dcfem
