#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dcfem/assembly.hpp"
#include "dcfem/spectral.hpp"

#include "test_support.hpp"

#include <Eigen/QR>

#include <cmath>
#include <vector>

using namespace dcfem;
using testsup::parallel_plate_mesh;

TEST_CASE("generalized eigensolve basics") {
  const MatR eye = MatR::Identity(3, 3);
  const auto dec = generalized_eig<Real>(eye, eye);
  for (int i = 0; i < 3; ++i) CHECK(std::abs(dec.eigenvalues(i) - 1.0L) < 1e-18L);
  CHECK((dec.eigenvectors.transpose() * dec.eigenvectors - eye).cwiseAbs().maxCoeff() < 1e-17L);

  MatR not_pd = -eye;
  CHECK_THROWS_AS(generalized_eig<Real>(eye, not_pd), std::runtime_error);
}

TEST_CASE("global generalized eigensolve on the parallel plate") {
  const Mesh m = parallel_plate_mesh();
  const auto sys = assemble<Real>(m);
  const auto dec = generalized_eig(sys.S, sys.T);

  // T-orthonormality and diagonalization within 1e-10 relative.
  const MatR vtv = dec.eigenvectors.transpose() * sys.T * dec.eigenvectors;
  CHECK((vtv - MatR::Identity(sys.n, sys.n)).cwiseAbs().maxCoeff() < 1e-10L);
  const MatR vsv = dec.eigenvectors.transpose() * sys.S * dec.eigenvectors;
  const Real lmax = dec.eigenvalues.maxCoeff();
  CHECK((vsv - MatR(dec.eigenvalues.asDiagonal())).cwiseAbs().maxCoeff() < 1e-10L * lmax);
  CHECK(dec.eigenvalues.minCoeff() >= -1e-10L * lmax);

  // Exactly 61 eigenvalues below the gap.
  GapReport rep;
  std::vector<int> perm;
  CHECK(detail::zero_count(dec.eigenvalues, rep, perm) == 61);
  CHECK(rep.ratio >= 1e6);
}

TEST_CASE("single natural brick has a 7-dimensional nullspace") {
  const Mesh m = build_mesh(GridSpec::uniform(1, 1, 1, 1e-6L, 1e-6L, 1e-6L), {});
  const auto sys = assemble<Real>(m);
  const auto dec = generalized_eig(sys.S, sys.T);
  GapReport rep;
  std::vector<int> perm;
  CHECK(detail::zero_count(dec.eigenvalues, rep, perm) == 7);
}

TEST_CASE("gap detection") {
  SUBCASE("table of one plate layer: 21 zeros, then the physical branch") {
    std::vector<double> mags{1.44e-20, 1.01e-20, 1.4e-20,  6.59e-21, 4.63e-21, 3.53e-21, 2.62e-21,
                             1.62e-21, 1.43e-21, 4.60e-22, 8.96e-22, 1.23e-21, 1.96e-21, 2.13e-21,
                             3.68e-21, 4.20e-21, 5.28e-21, 7.9e-21,  1.04e-20, 1.17e-20, 1.29e-20,
                             1.59e-07, 5.1e-07,  1.91e-06, 2.41e-06, 4.45e-06, 6.10e-06, 6.91e-06,
                             7.46e-06, 9.09e-06, 1.11e-05, 1.28e-05, 1.31e-05, 1.81e-05, 2.07e-05,
                             2.17e-05, 2.17e-05, 2.19e-05, 2.24e-05, 2.44e-05, 2.61e-05, 2.69e-05,
                             3.31e-05, 3.81e-05, 3.97e-05, 4.05e-05, 4.12e-05, 4.36e-05, 4.59e-05,
                             6.19e-05, 6.69e-05, 7.26e-05, 8.31e-05, 8.81e-05, 9.47e-05, 1.13e-04};
    std::sort(mags.begin(), mags.end());
    const GapReport rep = detect_gap(mags);
    CHECK(rep.gap_found);
    CHECK(rep.split == 21);
    CHECK(rep.ratio >= 1e10);
  }
  SUBCASE("well-separated positive sequence has no zero block") {
    const GapReport rep = detect_gap({1.0, 2.0, 3.0});
    CHECK(!rep.gap_found);
    CHECK(rep.split == 0);
  }
  SUBCASE("ratio rule forces a split of two") {
    const GapReport rep = detect_gap({1e-18, 1e-17, 1.0});
    CHECK(rep.gap_found);
    CHECK(rep.split == 2);
  }
  SUBCASE("empty input is rejected") { CHECK_THROWS_AS(detect_gap({}), std::invalid_argument); }
  SUBCASE("all-zero spectrum is all nullspace") {
    const GapReport rep = detect_gap({0.0, 0.0});
    CHECK(rep.split == 2);
  }
}

TEST_CASE("standalone layer nullspace of the parallel plate") {
  const Mesh m = parallel_plate_mesh();
  const LayerPartition part = partition_layers(m, 5);
  const MatR s0 = assemble_standalone_layer<Real>(m, part, 2);
  const auto basis = nullspace_of_standalone(s0, 2);

  CHECK(basis.k == 21);
  CHECK(basis.gap.ratio >= 1e6);  // observed far larger, ~1e13 and up
  CHECK(basis.standalone.rows() == 56);
  CHECK(basis.standalone.cols() == 21);

  // Annihilation and orthonormality.
  CHECK((s0 * basis.standalone).cwiseAbs().maxCoeff() <= 1e-9L * s0.cwiseAbs().maxCoeff());
  const MatR qtq = basis.standalone.transpose() * basis.standalone;
  CHECK((qtq - MatR::Identity(21, 21)).cwiseAbs().maxCoeff() < 1e-15L);

  // Dimension oracle: free nodes of the slab + touching conductors - 1.
  const Mesh slab = extract_slab_mesh(m, part.layers[2].z_begin, part.layers[2].z_end);
  int free_nodes = 0;
  for (int n = 0; n < slab.num_nodes(); ++n)
    if (slab.node_component[n] < 0) ++free_nodes;
  CHECK(basis.k == free_nodes + slab.conductor_count - 1);

  // Span equals the slab's discrete-gradient span: principal angles <= 1e-8.
  const MatR g = discrete_gradient(slab);
  REQUIRE(g.rows() == 56);
  const MatR qg = orthonormal_columns<Real>(g, 1e-10L);
  REQUIRE(qg.cols() == 21);
  const VecR angles = principal_angles<Real>(qg, basis.standalone);
  CHECK(angles.maxCoeff() <= 1e-8L);
}

TEST_CASE("identity matrix has no nullspace") {
  const auto basis = nullspace_of_standalone<Real>(MatR::Identity(6, 6));
  CHECK(basis.k == 0);
  CHECK(basis.standalone.cols() == 0);
}

TEST_CASE("muddy spectrum raises NoGapError with the report attached") {
  // Geometric decay, no 1e6 jump anywhere, smallest value near zero.
  MatR d = MatR::Zero(12, 12);
  for (int i = 0; i < 12; ++i) d(i, i) = std::pow(10.0L, -i);
  try {
    nullspace_of_standalone(d);
    FAIL("expected NoGapError");
  } catch (const NoGapError& e) {
    CHECK(!e.report.gap_found);
    CHECK(e.report.ratio == doctest::Approx(10.0));
  }
}

TEST_CASE("row restriction of layer bases") {
  const Mesh m = parallel_plate_mesh();
  const LayerPartition part = partition_layers(m, 5);

  SUBCASE("middle layer restricts to 33 x 21 with full rank") {
    auto basis = nullspace_of_standalone(assemble_standalone_layer<Real>(m, part, 2), 2);
    const MatR r = restrict_rows(basis, part, 2);
    CHECK(r.rows() == 33);
    CHECK(r.cols() == 21);
    CHECK((r.transpose() * r - MatR::Identity(21, 21)).cwiseAbs().maxCoeff() < 1e-15L);
  }
  SUBCASE("first layer keeps all 56 rows") {
    auto basis = nullspace_of_standalone(assemble_standalone_layer<Real>(m, part, 0), 0);
    const MatR r = restrict_rows(basis, part, 0);
    CHECK(r.rows() == 56);
    CHECK(r.cols() == 21);
    // Identity selection: same span as the standalone block.
    const VecR angles = principal_angles<Real>(r, basis.standalone);
    CHECK(angles.maxCoeff() < 1e-12L);
  }
  SUBCASE("one-layer partition restriction is the identity selection") {
    const LayerPartition whole = partition_layers(m, 1);
    auto basis = nullspace_of_standalone(assemble_standalone_layer<Real>(m, whole, 0), 0);
    const MatR r = restrict_rows(basis, whole, 0);
    CHECK(r.rows() == m.num_unknowns());
    const VecR angles = principal_angles<Real>(r, basis.standalone);
    CHECK(angles.maxCoeff() < 1e-12L);
  }
  SUBCASE("rank drop is reported") {
    LayerPartition part1;
    part1.n_unknowns = 3;
    LayerPartition::Layer lay;
    lay.owned = {0, 1};
    lay.standalone = {0, 1, 2};
    part1.layers.push_back(lay);
    NullspaceBasis<Real> basis;
    basis.k = 1;
    basis.standalone = MatR::Zero(3, 1);
    basis.standalone(2, 0) = 1.0L;  // supported only on the dropped row
    CHECK_THROWS_AS(restrict_rows(basis, part1, 0), std::runtime_error);
  }
}

TEST_CASE("modal solution") {
  const Mesh m = build_mesh(GridSpec::uniform(1, 1, 1, 1e-6L, 1e-6L, 1e-6L), {});
  const auto sys = assemble<Real>(m);
  const auto dec = generalized_eig(sys.S, sys.T);

  SUBCASE("zero right-hand side gives zero") {
    const VecC x = modal_solution(dec, VecC::Zero(12).eval(), 2 * pi * 1e9L);
    CHECK(x.norm() == 0.0L);
  }
  SUBCASE("omega = 0 with b in range(S) matches the pseudo-inverse oracle") {
    VecR w = VecR::LinSpaced(12, -1.0L, 1.0L);
    const VecR br = sys.S * w;  // guaranteed in range(S)
    VecC b = br.cast<Complex>();
    const VecC x = modal_solution(dec, b, 0.0L);

    Eigen::CompleteOrthogonalDecomposition<MatR> cod(sys.S);
    const VecR x_oracle = cod.pseudoInverse() * br;
    CHECK((x.real() - x_oracle).norm() <= 1e-10L * x_oracle.norm());
    CHECK(x.imag().norm() == 0.0L);
  }
  SUBCASE("resonance proximity is rejected") {
    const Real lam = dec.eigenvalues(dec.eigenvalues.size() - 1);
    CHECK_THROWS_AS(modal_solution(dec, VecC::Ones(12).eval(), std::sqrt(lam)),
                    std::runtime_error);
  }
}

TEST_CASE("sub-domain property: restricted global nullspace lies in the layer span") {
  const Mesh m = parallel_plate_mesh();
  const auto sys = assemble<Real>(m);
  const auto dec = generalized_eig(sys.S, sys.T);
  GapReport rep;
  std::vector<int> perm;
  const int k_global = detail::zero_count(dec.eigenvalues, rep, perm);
  REQUIRE(k_global == 61);
  MatR v0g(sys.n, k_global);
  for (int i = 0; i < k_global; ++i) v0g.col(i) = dec.eigenvectors.col(perm[i]);

  const LayerPartition part = partition_layers(m, 5);
  for (int l = 0; l < 5; ++l) {
    auto basis = nullspace_of_standalone(assemble_standalone_layer<Real>(m, part, l), l);
    MatR restricted(part.layers[l].standalone.size(), k_global);
    for (size_t r = 0; r < part.layers[l].standalone.size(); ++r)
      restricted.row(static_cast<Index>(r)) = v0g.row(part.layers[l].standalone[r]);
    const MatR q = orthonormal_columns<Real>(restricted, 1e-10L);
    CHECK(q.cols() == basis.k);  // the restriction spans exactly the layer nullspace
    const VecR angles = principal_angles<Real>(q, basis.standalone);
    CHECK(angles.maxCoeff() <= 1e-8L);
  }
}

TEST_CASE("principal angles of known subspaces") {
  MatR q1 = MatR::Zero(4, 2);
  q1(0, 0) = 1;
  q1(1, 1) = 1;
  MatR q2 = MatR::Zero(4, 2);
  q2(0, 0) = 1;
  const Real c = std::cos(0.3L), s = std::sin(0.3L);
  q2(1, 1) = c;
  q2(2, 1) = s;
  const VecR angles = principal_angles(q1, q2);
  CHECK(std::abs(angles.minCoeff()) < 1e-18L);
  CHECK(std::abs(angles.maxCoeff() - 0.3L) < 1e-18L);
}
