#pragma once

#include "dcfem/partition.hpp"
#include "dcfem/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcfem {

/// Ascending eigenvalues with T-orthonormal eigenvector columns.
template <typename Scalar>
struct EigenDecomposition {
  Vec<Scalar> eigenvalues;
  Mat<Scalar> eigenvectors;
};

/// Zero-block split of a sorted |eigenvalue| sequence. The split is placed
/// at the largest consecutive ratio when that ratio reaches the acceptance
/// threshold; a spectrum that starts comfortably away from zero has an
/// empty zero block.
struct GapReport {
  std::vector<double> magnitudes;  // sorted ascending
  int split = 0;                   // number of zero eigenvalues
  double ratio = 0;                // largest consecutive ratio
  bool gap_found = false;

  static constexpr double accept_ratio = 1e6;
  static constexpr double floor_guard = 1e-300;
};

class NoGapError : public std::runtime_error {
 public:
  NoGapError(std::string msg, GapReport rep)
      : std::runtime_error(std::move(msg)), report(std::move(rep)) {}
  GapReport report;
};

inline GapReport detect_gap(const std::vector<double>& ascending_magnitudes) {
  if (ascending_magnitudes.empty()) throw std::invalid_argument("detect_gap: empty sequence");
  GapReport rep;
  rep.magnitudes = ascending_magnitudes;
  const double vmax = ascending_magnitudes.back();
  if (vmax <= 0) {  // identically zero spectrum
    rep.split = static_cast<int>(ascending_magnitudes.size());
    rep.ratio = std::numeric_limits<double>::infinity();
    rep.gap_found = true;
    return rep;
  }
  int arg = -1;
  double best = 0;
  for (size_t i = 0; i + 1 < ascending_magnitudes.size(); ++i) {
    const double lo = std::max(ascending_magnitudes[i], GapReport::floor_guard);
    const double r = ascending_magnitudes[i + 1] / lo;
    if (r > best) {
      best = r;
      arg = static_cast<int>(i);
    }
  }
  rep.ratio = best;
  if (best >= GapReport::accept_ratio) {
    rep.gap_found = true;
    rep.split = arg + 1;
  }
  return rep;
}

namespace detail {

template <typename Scalar>
std::vector<double> abs_sorted(const Vec<Scalar>& v, std::vector<int>* perm = nullptr) {
  std::vector<int> idx(static_cast<size_t>(v.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
    return std::abs(v(a)) < std::abs(v(b));
  });
  std::vector<double> mags(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) mags[i] = static_cast<double>(std::abs(v(idx[i])));
  if (perm) *perm = std::move(idx);
  return mags;
}

/// Zero-block size of a spectrum: the detected gap split, or 0 when the
/// whole spectrum sits away from zero. Anything else is undecidable.
template <typename Scalar>
int zero_count(const Vec<Scalar>& eigenvalues, GapReport& rep, std::vector<int>& perm) {
  const auto mags = abs_sorted(eigenvalues, &perm);
  rep = detect_gap(mags);
  if (rep.gap_found) return rep.split;
  if (mags.front() >= 1e-6 * mags.back()) return 0;
  throw NoGapError("no detectable zero/high eigenvalue gap (ratio " + std::to_string(rep.ratio) + ")",
                   rep);
}

}  // namespace detail

/// Generalized symmetric eigensolve S v = lambda T v via Cholesky of T.
template <typename Scalar>
EigenDecomposition<Scalar> generalized_eig(const Mat<Scalar>& S, const Mat<Scalar>& T) {
  if (S.rows() != S.cols() || T.rows() != T.cols() || S.rows() != T.rows())
    throw std::invalid_argument("generalized_eig: dimension mismatch");
  Eigen::LLT<Mat<Scalar>> llt(T);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("generalized_eig: T is not positive definite (Cholesky failed)");
  Mat<Scalar> c = llt.matrixL().solve(S);
  c = llt.matrixL().solve(c.transpose()).eval();
  c = ((c + c.transpose()) / Scalar(2)).eval();
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(c);
  if (es.info() != Eigen::Success) throw std::runtime_error("generalized_eig: eigensolver failed");
  EigenDecomposition<Scalar> dec;
  dec.eigenvalues = es.eigenvalues();
  dec.eigenvectors = llt.matrixU().solve(es.eigenvectors());
  return dec;
}

/// Per-layer nullspace basis of a standalone stiffness block.
template <typename Scalar>
struct NullspaceBasis {
  int layer = 0;
  int k = 0;                   // zero-eigenvalue count
  Mat<Scalar> standalone;      // standalone-set rows x k, orthonormal
  Mat<Scalar> restricted;      // owned rows x k (filled by restrict_rows)
  Vec<Scalar> eigenvalues;     // full spectrum of the standalone block, ascending
  GapReport gap;
};

/// Symmetric eigensolve of a standalone stiffness block; the columns below
/// the detected gap form the basis. Real arithmetic only, no mass matrix.
template <typename Scalar>
NullspaceBasis<Scalar> nullspace_of_standalone(const Mat<Scalar>& s0, int layer = 0) {
  if (s0.rows() != s0.cols()) throw std::invalid_argument("nullspace_of_standalone: not square");
  Eigen::SelfAdjointEigenSolver<Mat<Scalar>> es(s0);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("nullspace_of_standalone: eigensolver failed");

  NullspaceBasis<Scalar> basis;
  basis.layer = layer;
  basis.eigenvalues = es.eigenvalues();
  std::vector<int> perm;
  basis.k = detail::zero_count(basis.eigenvalues, basis.gap, perm);

  std::vector<int> cols(perm.begin(), perm.begin() + basis.k);
  std::sort(cols.begin(), cols.end());
  basis.standalone.resize(s0.rows(), basis.k);
  for (int c = 0; c < basis.k; ++c) basis.standalone.col(c) = es.eigenvectors().col(cols[c]);
  return basis;
}

/// Restriction of a standalone basis to the layer's owned rows, followed by
/// re-orthonormalization. The restriction must keep full column rank.
template <typename Scalar>
Mat<Scalar> restrict_rows(NullspaceBasis<Scalar>& basis, const LayerPartition& part, int layer) {
  const auto& lay = part.layers.at(static_cast<size_t>(layer));
  if (basis.standalone.rows() != static_cast<Index>(lay.standalone.size()))
    throw std::invalid_argument("restrict_rows: basis does not match layer standalone set");

  Mat<Scalar> sel(lay.owned.size(), basis.k);
  size_t p = 0;
  for (size_t r = 0; r < lay.owned.size(); ++r) {
    while (p < lay.standalone.size() && lay.standalone[p] < lay.owned[r]) ++p;
    if (p >= lay.standalone.size() || lay.standalone[p] != lay.owned[r])
      throw std::logic_error("restrict_rows: owned set is not a subset of the standalone set");
    sel.row(r) = basis.standalone.row(p);
  }
  if (basis.k == 0) {
    basis.restricted = sel;
    return sel;
  }

  Eigen::ColPivHouseholderQR<Mat<Scalar>> qr(sel);
  if (qr.rank() != basis.k)
    throw std::runtime_error("restrict_rows: rank dropped from " + std::to_string(basis.k) + " to " +
                             std::to_string(qr.rank()) + " after row restriction");
  Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(sel.rows(), basis.k);
  basis.restricted = q;
  return q;
}

/// Modal solution x = V (Lambda - omega^2 I)^-1 V^T b for lossless systems.
/// Eigenvalues under the detected zero gap are treated as exact zeros; at
/// omega = 0 the zero modes are excluded and the Euclidean nullspace
/// component is removed, which yields the minimum-norm solution of S x = b.
template <typename Scalar>
Vec<std::complex<Scalar>> modal_solution(const EigenDecomposition<Scalar>& dec,
                                         const Vec<std::complex<Scalar>>& b, Scalar omega) {
  const Index n = dec.eigenvalues.size();
  if (b.size() != n) throw std::invalid_argument("modal_solution: size mismatch");
  GapReport rep;
  std::vector<int> perm;
  const int k = detail::zero_count(dec.eigenvalues, rep, perm);
  std::vector<char> is_zero(static_cast<size_t>(n), 0);
  for (int i = 0; i < k; ++i) is_zero[static_cast<size_t>(perm[i])] = 1;

  const Scalar w2 = omega * omega;
  for (Index i = 0; i < n; ++i) {
    if (is_zero[static_cast<size_t>(i)]) continue;
    const Scalar lam = dec.eigenvalues(i);
    if (std::abs(lam - w2) < Scalar(1e-12) * std::max(std::abs(lam), w2))
      throw std::runtime_error("modal_solution: omega^2 within 1e-12 of eigenvalue " +
                               std::to_string(static_cast<double>(lam)));
  }

  Vec<std::complex<Scalar>> y = dec.eigenvectors.transpose().template cast<std::complex<Scalar>>() * b;
  for (Index i = 0; i < n; ++i) {
    if (is_zero[static_cast<size_t>(i)])
      y(i) = (omega == Scalar(0)) ? std::complex<Scalar>(0) : y(i) / (-w2);
    else
      y(i) /= (dec.eigenvalues(i) - w2);
  }
  Vec<std::complex<Scalar>> x = dec.eigenvectors.template cast<std::complex<Scalar>>() * y;

  if (omega == Scalar(0) && k > 0) {
    Mat<Scalar> n0(n, k);
    for (int i = 0; i < k; ++i) n0.col(i) = dec.eigenvectors.col(perm[i]);
    Eigen::HouseholderQR<Mat<Scalar>> qr(n0);
    Mat<Scalar> q = qr.householderQ() * Mat<Scalar>::Identity(n, k);
    const auto qc = q.template cast<std::complex<Scalar>>();
    x -= qc * (qc.transpose() * x);
  }
  return x;
}

/// Principal angles (radians, ascending) between the spans of two
/// orthonormal column blocks. Cosines come from the SVD of Q1^T Q2 and
/// sines from the SVD of (I - Q1 Q1^T) Q2; small angles use the sine form,
/// which stays accurate where acos cannot resolve them.
template <typename Scalar>
Vec<Scalar> principal_angles(const Mat<Scalar>& q1, const Mat<Scalar>& q2) {
  if (q1.rows() != q2.rows()) throw std::invalid_argument("principal_angles: row mismatch");
  const Mat<Scalar> c = q1.transpose() * q2;
  Eigen::JacobiSVD<Mat<Scalar>> svd_cos(c);
  Eigen::JacobiSVD<Mat<Scalar>> svd_sin(Mat<Scalar>(q2 - q1 * c));
  const auto& cosines = svd_cos.singularValues();  // descending
  const auto& sines = svd_sin.singularValues();    // descending
  const Index k = cosines.size();
  const Index ns = sines.size();
  Vec<Scalar> angles(k);
  for (Index i = 0; i < k; ++i) {
    const Scalar cv = std::min(Scalar(1), std::max(Scalar(-1), cosines(i)));
    const Scalar sv = std::min(Scalar(1), std::max(Scalar(0), sines(ns - 1 - i)));
    angles(i) = cv * cv > Scalar(0.5) ? std::asin(sv) : std::acos(cv);
  }
  return angles;
}

/// Orthonormal basis of the numerically significant column space.
template <typename Scalar>
Mat<Scalar> orthonormal_columns(const Mat<Scalar>& m, Scalar rel_tol) {
  Eigen::JacobiSVD<Mat<Scalar>> svd(m, Eigen::ComputeThinU);
  const auto& sv = svd.singularValues();
  Index rank = 0;
  if (sv.size() > 0 && sv(0) > Scalar(0))
    while (rank < sv.size() && sv(rank) > rel_tol * sv(0)) ++rank;
  return svd.matrixU().leftCols(rank);
}

}  // namespace dcfem
