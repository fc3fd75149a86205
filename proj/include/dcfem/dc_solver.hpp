#pragma once

#include "dcfem/assembly.hpp"
#include "dcfem/spectral.hpp"
#include "dcfem/types.hpp"

#include <Eigen/LU>

#include <cfloat>
#include <chrono>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace dcfem {

namespace detail {

#if defined(__SIZEOF_FLOAT128__) && (LDBL_MANT_DIG < 113)
using Accum = __float128;
#else
using Accum = long double;
#endif

/// r = b - A x with products and sums accumulated in extended precision.
/// The direct solve refines against this residual; without it the refined
/// iterate stalls at the working-precision residual floor.
template <typename Scalar>
Vec<std::complex<Scalar>> residual(const Mat<std::complex<Scalar>>& a,
                                   const Vec<std::complex<Scalar>>& x,
                                   const Vec<std::complex<Scalar>>& b) {
  const Index n = a.rows();
  Vec<std::complex<Scalar>> r(n);
  for (Index i = 0; i < n; ++i) {
    Accum re = static_cast<Accum>(b(i).real());
    Accum im = static_cast<Accum>(b(i).imag());
    for (Index j = 0; j < n; ++j) {
      const Accum ar = static_cast<Accum>(a(i, j).real());
      const Accum ai = static_cast<Accum>(a(i, j).imag());
      const Accum xr = static_cast<Accum>(x(j).real());
      const Accum xi = static_cast<Accum>(x(j).imag());
      re -= ar * xr - ai * xi;
      im -= ar * xi + ai * xr;
    }
    r(i) = std::complex<Scalar>(static_cast<Scalar>(re), static_cast<Scalar>(im));
  }
  return r;
}

/// Iterative refinement of A y = g against the extended-precision residual;
/// `apply_inverse` applies the already-computed factorization.
template <typename Scalar, typename ApplyInverse>
void refine(const Mat<std::complex<Scalar>>& a, Vec<std::complex<Scalar>>& y,
            const Vec<std::complex<Scalar>>& g, ApplyInverse&& apply_inverse, int steps = 2) {
  Vec<std::complex<Scalar>> r = residual(a, y, g);
  Scalar rnorm = r.norm();
  for (int it = 0; it < steps && rnorm > Scalar(0); ++it) {
    const Vec<std::complex<Scalar>> y2 = y + apply_inverse(r);
    Vec<std::complex<Scalar>> r2 = residual(a, y2, g);
    const Scalar rnorm2 = r2.norm();
    if (!(rnorm2 < rnorm)) break;
    y = y2;
    r.swap(r2);
    rnorm = rnorm2;
  }
}

/// Flags matrices that are singular to working precision. The U diagonal of
/// an exactly singular system bottoms out near eps * ||A||, several orders
/// below anything a legitimate quasi-static system produces here, so a few
/// decades above eps separates the two cleanly.
template <typename MatrixType>
void require_nonsingular(const Eigen::PartialPivLU<MatrixType>& lu, const std::string& what) {
  using RealScalar = typename MatrixType::RealScalar;
  const auto d = lu.matrixLU().diagonal().cwiseAbs().eval();
  const RealScalar dmax = d.maxCoeff();
  const RealScalar eps = std::numeric_limits<RealScalar>::epsilon();
  if (!(dmax > RealScalar(0)) || d.minCoeff() <= dmax * eps * RealScalar(1e4))
    throw std::runtime_error(what + ": matrix is singular to working precision");
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - start_).count();
    start_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace detail

/// Block-diagonal global nullspace: one restricted basis per layer, rows
/// mapped to the layer's owned unknowns.
template <typename Scalar>
struct GlobalNullspace {
  struct Block {
    std::vector<int> rows;  // global unknown ids, sorted
    Mat<Scalar> basis;      // rows.size() x k
  };
  std::vector<Block> blocks;
  Index n = 0;

  Index cols() const {
    Index c = 0;
    for (const auto& blk : blocks) c += blk.basis.cols();
    return c;
  }

  Mat<Scalar> dense() const {
    Mat<Scalar> v = Mat<Scalar>::Zero(n, cols());
    Index off = 0;
    for (const auto& blk : blocks) {
      for (size_t r = 0; r < blk.rows.size(); ++r)
        v.row(blk.rows[r]).segment(off, blk.basis.cols()) = blk.basis.row(static_cast<Index>(r));
      off += blk.basis.cols();
    }
    return v;
  }

  /// Stacked basis for a contiguous layer range; `rows` receives the
  /// matching global row ids in block order.
  Mat<Scalar> dense_for_layers(int first, int last, std::vector<int>& rows) const {
    rows.clear();
    Index nrows = 0, ncols = 0;
    for (int l = first; l < last; ++l) {
      nrows += static_cast<Index>(blocks[static_cast<size_t>(l)].rows.size());
      ncols += blocks[static_cast<size_t>(l)].basis.cols();
    }
    Mat<Scalar> v = Mat<Scalar>::Zero(nrows, ncols);
    Index roff = 0, coff = 0;
    for (int l = first; l < last; ++l) {
      const auto& blk = blocks[static_cast<size_t>(l)];
      rows.insert(rows.end(), blk.rows.begin(), blk.rows.end());
      v.block(roff, coff, blk.basis.rows(), blk.basis.cols()) = blk.basis;
      roff += blk.basis.rows();
      coff += blk.basis.cols();
    }
    return v;
  }
};

/// Assembles the block-diagonal V0 from per-layer restricted bases. The
/// layer row sets must partition the unknowns.
template <typename Scalar>
GlobalNullspace<Scalar> build_global_V0(const std::vector<NullspaceBasis<Scalar>>& bases,
                                        const LayerPartition& part) {
  if (static_cast<int>(bases.size()) != part.num_layers())
    throw std::invalid_argument("build_global_V0: need exactly one basis per layer");
  GlobalNullspace<Scalar> v0;
  v0.n = part.n_unknowns;
  std::vector<char> seen(static_cast<size_t>(part.n_unknowns), 0);
  for (int l = 0; l < part.num_layers(); ++l) {
    const auto& lay = part.layers[static_cast<size_t>(l)];
    const auto& basis = bases[static_cast<size_t>(l)];
    if (basis.restricted.rows() != static_cast<Index>(lay.owned.size()) ||
        basis.restricted.cols() != basis.k)
      throw std::invalid_argument("build_global_V0: restricted block shape mismatch in layer " +
                                  std::to_string(l));
    for (int u : lay.owned) {
      if (seen[static_cast<size_t>(u)])
        throw std::invalid_argument("build_global_V0: overlapping layer row sets");
      seen[static_cast<size_t>(u)] = 1;
    }
    v0.blocks.push_back({lay.owned, basis.restricted});
  }
  for (char s : seen)
    if (!s) throw std::invalid_argument("build_global_V0: layer row sets do not cover all unknowns");
  return v0;
}

template <typename Scalar>
struct SolveReport {
  std::string method;
  Vec<std::complex<Scalar>> x;
  Scalar residual = Scalar(-1);             // relative 2-norm residual (direct solve)
  std::map<std::string, Scalar> rel_errors; // vs. reference solutions, filled by the caller
  std::map<std::string, double> timings_s;
  long long reduced_ops = 0;                // counted multiply-adds in the reduced solve
};

template <typename Scalar>
Scalar relative_error(const Vec<std::complex<Scalar>>& xa, const Vec<std::complex<Scalar>>& xb) {
  if (xa.size() != xb.size()) throw std::invalid_argument("relative_error: size mismatch");
  const Scalar nb = xb.norm();
  if (!(nb > Scalar(0))) throw std::invalid_argument("relative_error: zero reference norm");
  return (xa - xb).norm() / nb;
}

/// LU solve with partial pivoting plus extended-precision iterative
/// refinement; reports the achieved relative residual.
template <typename Scalar>
SolveReport<Scalar> solve_direct(const Mat<std::complex<Scalar>>& a,
                                 const Vec<std::complex<Scalar>>& b) {
  if (a.rows() != a.cols() || a.rows() != b.size())
    throw std::invalid_argument("solve_direct: dimension mismatch");
  SolveReport<Scalar> rep;
  rep.method = "direct";
  detail::Stopwatch sw;

  Eigen::PartialPivLU<Mat<std::complex<Scalar>>> lu(a);
  detail::require_nonsingular(lu, "solve_direct");
  rep.timings_s["factor"] = sw.lap();

  Vec<std::complex<Scalar>> x = lu.solve(b);
  const Scalar bnorm = b.norm();
  if (bnorm > Scalar(0)) {
    Vec<std::complex<Scalar>> r = detail::residual(a, x, b);
    Scalar rnorm = r.norm();
    for (int it = 0; it < 2; ++it) {
      const Vec<std::complex<Scalar>> x2 = x + lu.solve(r).eval();
      Vec<std::complex<Scalar>> r2 = detail::residual(a, x2, b);
      const Scalar rnorm2 = r2.norm();
      if (!(rnorm2 < rnorm)) break;
      x = x2;
      r.swap(r2);
      rnorm = rnorm2;
    }
    rep.residual = rnorm / bnorm;
  } else {
    rep.residual = Scalar(0);
  }
  rep.x = x;
  rep.timings_s["solve"] = sw.lap();
  return rep;
}

namespace detail {

/// One projected block V_i^T A(rows_i, rows_j) V_j. Both reduced-solve paths
/// go through this helper so they factor the same reduced matrix.
template <typename Scalar>
Mat<std::complex<Scalar>> reduced_block(const Mat<std::complex<Scalar>>& a,
                                        const GlobalNullspace<Scalar>& v0, int i, int j) {
  const auto vi = v0.blocks[static_cast<size_t>(i)].basis.template cast<std::complex<Scalar>>().eval();
  const auto vj = v0.blocks[static_cast<size_t>(j)].basis.template cast<std::complex<Scalar>>().eval();
  return vi.transpose() * gather(a, v0.blocks[static_cast<size_t>(i)].rows,
                                 v0.blocks[static_cast<size_t>(j)].rows) * vj;
}

template <typename Scalar>
Vec<std::complex<Scalar>> reduced_rhs_block(const Vec<std::complex<Scalar>>& b,
                                            const GlobalNullspace<Scalar>& v0, int i) {
  const auto vi = v0.blocks[static_cast<size_t>(i)].basis.template cast<std::complex<Scalar>>().eval();
  return vi.transpose() * gather_rows(b, v0.blocks[static_cast<size_t>(i)].rows);
}

}  // namespace detail

/// Projected DC solve x = V0 [V0^T A V0]^-1 V0^T b with one dense
/// factorization of the full reduced matrix.
template <typename Scalar>
SolveReport<Scalar> solve_dc_projected(const Mat<std::complex<Scalar>>& a,
                                       const GlobalNullspace<Scalar>& v0,
                                       const Vec<std::complex<Scalar>>& b) {
  if (a.rows() != v0.n || b.size() != v0.n)
    throw std::invalid_argument("solve_dc_projected: dimension mismatch");
  SolveReport<Scalar> rep;
  rep.method = "dc-projected";
  detail::Stopwatch sw;

  const int m = static_cast<int>(v0.blocks.size());
  const Index kt = v0.cols();
  std::vector<Index> offsets(static_cast<size_t>(m) + 1, 0);
  for (int i = 0; i < m; ++i) offsets[i + 1] = offsets[i] + v0.blocks[static_cast<size_t>(i)].basis.cols();
  Mat<std::complex<Scalar>> reduced = Mat<std::complex<Scalar>>::Zero(kt, kt);
  Vec<std::complex<Scalar>> g(kt);
  for (int i = 0; i < m; ++i) {
    g.segment(offsets[i], offsets[i + 1] - offsets[i]) = detail::reduced_rhs_block(b, v0, i);
    for (int j = 0; j < m; ++j) {
      const auto aij = gather(a, v0.blocks[static_cast<size_t>(i)].rows,
                              v0.blocks[static_cast<size_t>(j)].rows);
      if (aij.cwiseAbs().maxCoeff() == Scalar(0)) continue;  // exact structural zero
      reduced.block(offsets[i], offsets[j], offsets[i + 1] - offsets[i],
                    offsets[j + 1] - offsets[j]) = detail::reduced_block(a, v0, i, j);
    }
  }
  rep.timings_s["project"] = sw.lap();

  Eigen::PartialPivLU<Mat<std::complex<Scalar>>> lu(reduced);
  detail::require_nonsingular(lu, "solve_dc_projected: reduced matrix");
  rep.reduced_ops = static_cast<long long>(kt) * kt * kt / 3;
  Vec<std::complex<Scalar>> y = lu.solve(g);
  detail::refine(reduced, y, g, [&lu](const Vec<std::complex<Scalar>>& r) { return lu.solve(r).eval(); });
  rep.x = v0.dense().template cast<std::complex<Scalar>>() * y;
  rep.timings_s["solve"] = sw.lap();
  return rep;
}

/// Reduced block-tridiagonal system B = V0^T A V0 over the layer blocks.
template <typename Scalar>
struct ReducedSystem {
  std::vector<Mat<std::complex<Scalar>>> diag;   // B_ii
  std::vector<Mat<std::complex<Scalar>>> upper;  // B_{i,i+1}
  std::vector<Mat<std::complex<Scalar>>> lower;  // B_{i+1,i}
  std::vector<Vec<std::complex<Scalar>>> rhs;    // g_i
  Vec<std::complex<Scalar>> y;                   // concatenated coefficients (after solve)
};

/// Builds the reduced blocks and asserts the path-graph structure: every
/// |i-j| > 1 coupling block of A over the owned sets must be exactly zero.
template <typename Scalar>
ReducedSystem<Scalar> build_reduced_system(const Mat<std::complex<Scalar>>& a,
                                           const GlobalNullspace<Scalar>& v0,
                                           const Vec<std::complex<Scalar>>& b) {
  const int m = static_cast<int>(v0.blocks.size());
  for (int i = 0; i < m; ++i)
    for (int j = i + 2; j < m; ++j) {
      const auto far = gather(a, v0.blocks[i].rows, v0.blocks[j].rows);
      if (far.cwiseAbs().maxCoeff() != Scalar(0))
        throw std::logic_error("build_reduced_system: layers " + std::to_string(i) + " and " +
                               std::to_string(j) + " are coupled; expected block-tridiagonal");
    }

  ReducedSystem<Scalar> red;
  red.diag.resize(m);
  red.upper.resize(m > 0 ? m - 1 : 0);
  red.lower.resize(m > 0 ? m - 1 : 0);
  red.rhs.resize(m);
  for (int i = 0; i < m; ++i) {
    red.diag[i] = detail::reduced_block(a, v0, i, i);
    red.rhs[i] = detail::reduced_rhs_block(b, v0, i);
    if (i + 1 < m) {
      red.upper[i] = detail::reduced_block(a, v0, i, i + 1);
      red.lower[i] = detail::reduced_block(a, v0, i + 1, i);
    }
  }
  return red;
}

namespace detail {

/// Forward block elimination factors of a block-tridiagonal system: LU of
/// each eliminated diagonal block plus the coupling solves W_i. Every
/// factorization stays at one layer's block order.
template <typename Scalar>
struct BlockTridiagFactors {
  std::vector<Eigen::PartialPivLU<Mat<std::complex<Scalar>>>> lu;  // of eliminated diagonals
  std::vector<Mat<std::complex<Scalar>>> w;                        // B_ii^-1 B_{i,i+1}
  const ReducedSystem<Scalar>* red = nullptr;
  long long ops = 0;

  void factor(const ReducedSystem<Scalar>& system) {
    red = &system;
    const int m = static_cast<int>(system.diag.size());
    lu.clear();
    lu.reserve(m);
    w.assign(m > 0 ? m - 1 : 0, {});
    auto cube = [](Index k) { return static_cast<long long>(k) * k * k; };
    Mat<std::complex<Scalar>> dtilde = system.diag[0];
    for (int i = 0; i < m; ++i) {
      lu.emplace_back(dtilde);
      try {
        require_nonsingular(lu.back(), "solve_dc_layered");
      } catch (const std::runtime_error&) {
        throw std::runtime_error("solve_dc_layered: singular reduced diagonal block in layer " +
                                 std::to_string(i));
      }
      const Index ki = dtilde.rows();
      ops += cube(ki) / 3;
      if (i + 1 < m) {
        w[i] = lu.back().solve(system.upper[i]);
        ops += ki * ki * system.upper[i].cols();
        dtilde = system.diag[i + 1] - system.lower[i] * w[i];
        ops += system.lower[i].rows() * ki * w[i].cols();
      }
    }
  }

  std::vector<Vec<std::complex<Scalar>>> solve(const std::vector<Vec<std::complex<Scalar>>>& g) {
    const int m = static_cast<int>(lu.size());
    std::vector<Vec<std::complex<Scalar>>> h(m), y(m);
    Vec<std::complex<Scalar>> gtilde = g[0];
    for (int i = 0; i < m; ++i) {
      h[i] = lu[static_cast<size_t>(i)].solve(gtilde);
      ops += static_cast<long long>(h[i].size()) * h[i].size();
      if (i + 1 < m) {
        gtilde = g[i + 1] - red->lower[i] * h[i];
        ops += red->lower[i].rows() * h[i].size();
      }
    }
    for (int i = m - 1; i >= 0; --i) {
      y[i] = h[i];
      if (i + 1 < m) {
        y[i] -= w[i] * y[i + 1];
        ops += w[i].rows() * w[i].cols();
      }
    }
    return y;
  }
};

}  // namespace detail

/// Layer-recursive DC solve: forward block elimination and back substitution
/// on the reduced block-tridiagonal system, then extended-precision
/// refinement of the reduced coefficients. Every factorization is of one
/// layer's nullspace dimension only.
template <typename Scalar>
SolveReport<Scalar> solve_dc_layered(const Mat<std::complex<Scalar>>& a,
                                     const GlobalNullspace<Scalar>& v0,
                                     const Vec<std::complex<Scalar>>& b,
                                     ReducedSystem<Scalar>* reduced_out = nullptr) {
  if (a.rows() != v0.n || b.size() != v0.n)
    throw std::invalid_argument("solve_dc_layered: dimension mismatch");
  SolveReport<Scalar> rep;
  rep.method = "dc-layered";
  detail::Stopwatch sw;

  ReducedSystem<Scalar> red = build_reduced_system(a, v0, b);
  const int m = static_cast<int>(red.diag.size());
  rep.timings_s["project"] = sw.lap();

  detail::BlockTridiagFactors<Scalar> factors;
  factors.factor(red);
  std::vector<Vec<std::complex<Scalar>>> y = factors.solve(red.rhs);

  // Refinement against the assembled reduced matrix; the block sweep itself
  // serves as the solver for the corrections.
  const Index kt = v0.cols();
  std::vector<Index> offsets(static_cast<size_t>(m) + 1, 0);
  for (int i = 0; i < m; ++i) offsets[i + 1] = offsets[i] + red.diag[i].rows();
  Mat<std::complex<Scalar>> bfull = Mat<std::complex<Scalar>>::Zero(kt, kt);
  Vec<std::complex<Scalar>> gfull(kt), yfull(kt);
  for (int i = 0; i < m; ++i) {
    bfull.block(offsets[i], offsets[i], red.diag[i].rows(), red.diag[i].cols()) = red.diag[i];
    if (i + 1 < m) {
      bfull.block(offsets[i], offsets[i + 1], red.upper[i].rows(), red.upper[i].cols()) =
          red.upper[i];
      bfull.block(offsets[i + 1], offsets[i], red.lower[i].rows(), red.lower[i].cols()) =
          red.lower[i];
    }
    gfull.segment(offsets[i], red.rhs[i].size()) = red.rhs[i];
    yfull.segment(offsets[i], y[i].size()) = y[i];
  }
  detail::refine(bfull, yfull, gfull, [&](const Vec<std::complex<Scalar>>& r) {
    std::vector<Vec<std::complex<Scalar>>> rb(m);
    for (int i = 0; i < m; ++i) rb[i] = r.segment(offsets[i], red.diag[i].rows());
    const auto dy = factors.solve(rb);
    Vec<std::complex<Scalar>> d(r.size());
    for (int i = 0; i < m; ++i) d.segment(offsets[i], dy[i].size()) = dy[i];
    return d;
  });
  rep.reduced_ops = factors.ops;

  rep.x = Vec<std::complex<Scalar>>::Zero(v0.n);
  for (int i = 0; i < m; ++i) {
    const auto& blk = v0.blocks[static_cast<size_t>(i)];
    const Vec<std::complex<Scalar>> xi =
        blk.basis.template cast<std::complex<Scalar>>() * yfull.segment(offsets[i], blk.basis.cols());
    for (size_t r = 0; r < blk.rows.size(); ++r) rep.x(blk.rows[r]) = xi(static_cast<Index>(r));
  }
  red.y = yfull;
  rep.timings_s["solve"] = sw.lap();
  if (reduced_out) *reduced_out = std::move(red);
  return rep;
}

/// Literal two-region Schur path: eliminate region 1 exactly, project the
/// Schur complement of region 2 on its nullspace block, return x2.
template <typename Scalar>
Vec<std::complex<Scalar>> solve_dc_schur2(const Mat<std::complex<Scalar>>& a,
                                          const Vec<std::complex<Scalar>>& b,
                                          const std::vector<int>& rows1,
                                          const std::vector<int>& rows2,
                                          const Mat<Scalar>& v02) {
  if (v02.rows() != static_cast<Index>(rows2.size()))
    throw std::invalid_argument("solve_dc_schur2: V0,2 row count mismatch");
  const auto a11 = gather(a, rows1, rows1);
  const auto a12 = gather(a, rows1, rows2);
  const auto a21 = gather(a, rows2, rows1);
  const auto a22 = gather(a, rows2, rows2);
  const auto b1 = gather_rows(b, rows1);
  const auto b2 = gather_rows(b, rows2);

  Eigen::PartialPivLU<Mat<std::complex<Scalar>>> lu11(a11);
  detail::require_nonsingular(lu11, "solve_dc_schur2: A11");
  const Mat<std::complex<Scalar>> schur = a22 - a21 * lu11.solve(a12).eval();
  const Vec<std::complex<Scalar>> b2p = b2 - a21 * lu11.solve(b1).eval();

  const Mat<std::complex<Scalar>> vc = v02.template cast<std::complex<Scalar>>();
  Eigen::PartialPivLU<Mat<std::complex<Scalar>>> lu(vc.transpose() * schur * vc);
  detail::require_nonsingular(lu, "solve_dc_schur2: projected Schur block");
  return vc * lu.solve(vc.transpose() * b2p).eval();
}

}  // namespace dcfem
