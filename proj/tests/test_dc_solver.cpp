#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dcfem/assembly.hpp"
#include "dcfem/dc_solver.hpp"
#include "dcfem/spectral.hpp"

#include "test_support.hpp"

using namespace dcfem;
using testsup::parallel_plate_mesh;

namespace {

struct PlateSystem {
  Mesh mesh;
  LayerPartition part;
  SystemMatrices<Real> sys;
  Real omega = 0;
  MatC a;
  VecC b;
  GlobalNullspace<Real> v0;
};

PlateSystem make_plate(Real freq_hz, int n_layers = 5, int nz = 5) {
  PlateSystem p;
  p.mesh = parallel_plate_mesh(nz, 100.0L / nz);
  p.part = partition_layers(p.mesh, n_layers);
  p.sys = assemble<Real>(p.mesh);
  p.omega = 2 * pi * freq_hz;
  p.a = system_matrix(p.sys, p.omega);
  SourceSpec src;
  src.current = 1.0L;
  src.omega = p.omega;
  for (int i = 0; i < 3; ++i) src.path.emplace_back(p.mesh.x_edge_index(i, 2, 0), 1);
  p.b = assemble_rhs(p.mesh, src).b;

  std::vector<NullspaceBasis<Real>> bases;
  for (int l = 0; l < p.part.num_layers(); ++l) {
    auto basis = nullspace_of_standalone(assemble_standalone_layer<Real>(p.mesh, p.part, l), l);
    restrict_rows(basis, p.part, l);
    bases.push_back(std::move(basis));
  }
  p.v0 = build_global_V0(bases, p.part);
  return p;
}

}  // namespace

TEST_CASE("relative error") {
  VecC a = VecC::Ones(4);
  CHECK(relative_error<Real>(a, a) == 0.0L);
  CHECK(relative_error<Real>((2.0L * a).eval(), a) == doctest::Approx(1.0));
  CHECK_THROWS_AS(relative_error<Real>(a, VecC::Zero(4).eval()), std::invalid_argument);
  CHECK_THROWS_AS(relative_error<Real>(a, VecC::Zero(3).eval()), std::invalid_argument);
}

TEST_CASE("direct solve") {
  SUBCASE("identity system returns the right-hand side") {
    const MatC eye = MatC::Identity(5, 5);
    VecC b(5);
    for (int i = 0; i < 5; ++i) b(i) = Complex(i, -i);
    const auto rep = solve_direct<Real>(eye, b);
    CHECK((rep.x - b).norm() == 0.0L);
    CHECK(rep.residual == 0.0L);
  }
  SUBCASE("parallel plate at 2 GHz meets the residual bound") {
    const PlateSystem p = make_plate(2e9L);
    const auto rep = solve_direct(p.a, p.b);
    CHECK(rep.residual <= 1e-10L);
  }
  SUBCASE("singular matrix is rejected") {
    CHECK_THROWS_AS(solve_direct<Real>(MatC::Zero(3, 3), VecC::Ones(3).eval()),
                    std::runtime_error);
    MatC rank1 = MatC::Zero(3, 3);
    rank1(0, 0) = Complex(1, 0);
    CHECK_THROWS_AS(solve_direct<Real>(rank1, VecC::Ones(3).eval()), std::runtime_error);
  }
}

TEST_CASE("modal and direct solutions agree on the lossless plate") {
  const PlateSystem p = make_plate(2e9L);
  const auto dir = solve_direct(p.a, p.b);
  const auto dec = generalized_eig(p.sys.S, p.sys.T);
  const VecC xm = modal_solution(dec, p.b, p.omega);
  CHECK(relative_error(xm, dir.x) <= 1e-10L);
}

TEST_CASE("global nullspace assembly") {
  const PlateSystem p = make_plate(2e9L);
  CHECK(p.v0.n == 188);
  CHECK(p.v0.cols() == 105);  // 5 layers x 21
  const MatR vd = p.v0.dense();
  CHECK(vd.rows() == 188);
  CHECK(vd.cols() == 105);

  // The block-diagonal nullspace does not annihilate the coupled stiffness.
  const MatR vsv = vd.transpose() * p.sys.S * vd;
  CHECK(vsv.cwiseAbs().maxCoeff() > 1e-6L * p.sys.S.cwiseAbs().maxCoeff());

  SUBCASE("overlapping row sets are rejected") {
    LayerPartition bad = p.part;
    bad.layers[1].owned[0] = bad.layers[0].owned[0];
    std::vector<NullspaceBasis<Real>> bases;
    for (int l = 0; l < 5; ++l) {
      NullspaceBasis<Real> nb;
      nb.k = 0;
      nb.standalone.resize(bad.layers[l].standalone.size(), 0);
      nb.restricted.resize(bad.layers[l].owned.size(), 0);
      bases.push_back(std::move(nb));
    }
    CHECK_THROWS_AS(build_global_V0(bases, bad), std::invalid_argument);
  }
  SUBCASE("basis count must match the layer count") {
    std::vector<NullspaceBasis<Real>> none;
    CHECK_THROWS_AS(build_global_V0(none, p.part), std::invalid_argument);
  }
}

TEST_CASE("projected DC solve") {
  const PlateSystem p = make_plate(2e9L);
  const auto dir = solve_direct(p.a, p.b);
  const auto proj = solve_dc_projected(p.a, p.v0, p.b);
  CHECK(relative_error(proj.x, dir.x) <= 1e-3L);  // observed ~1.2e-6

  SUBCASE("square orthogonal projection reproduces the direct solve") {
    GlobalNullspace<Real> full;
    full.n = p.v0.n;
    GlobalNullspace<Real>::Block blk;
    blk.rows.resize(static_cast<size_t>(p.v0.n));
    std::iota(blk.rows.begin(), blk.rows.end(), 0);
    blk.basis = MatR::Identity(p.v0.n, p.v0.n);
    full.blocks.push_back(std::move(blk));
    const auto rep = solve_dc_projected(p.a, full, p.b);
    CHECK(relative_error(rep.x, dir.x) <= 1e-10L);
  }
  SUBCASE("reduced matrix is singular at omega = 0") {
    const MatC a0 = system_matrix(p.sys, 0.0L);
    CHECK_THROWS_AS(solve_dc_projected(a0, p.v0, p.b), std::runtime_error);
  }
}

TEST_CASE("layered DC solve matches the projected solve") {
  for (Real f : {0.5e9L, 2e9L}) {
    const PlateSystem p = make_plate(f);
    const auto proj = solve_dc_projected(p.a, p.v0, p.b);
    ReducedSystem<Real> red;
    const auto lay = solve_dc_layered(p.a, p.v0, p.b, &red);
    CHECK(relative_error(lay.x, proj.x) <= 1e-12L);  // observed bit-identical

    // Reduced diagonal blocks are one layer's nullspace dimension: 21 x 21.
    REQUIRE(red.diag.size() == 5);
    for (const auto& d : red.diag) {
      CHECK(d.rows() == 21);
      CHECK(d.cols() == 21);
    }
  }
}

TEST_CASE("one-layer partition degenerates to the projected solve") {
  const PlateSystem p = make_plate(2e9L, 1);
  const auto proj = solve_dc_projected(p.a, p.v0, p.b);
  const auto lay = solve_dc_layered(p.a, p.v0, p.b);
  CHECK(relative_error(lay.x, proj.x) <= 1e-12L);
  // One standalone block covering everything: the basis is the whole
  // standalone nullspace, 61 columns on this mesh.
  CHECK(p.v0.cols() == 61);
}

TEST_CASE("non-tridiagonal coupling is detected") {
  // Three fully coupled blocks: layers 0 and 2 share nonzero entries.
  const Index n = 6;
  MatC a = MatC::Ones(n, n);
  GlobalNullspace<Real> v0;
  v0.n = n;
  for (int l = 0; l < 3; ++l) {
    GlobalNullspace<Real>::Block blk;
    blk.rows = {2 * l, 2 * l + 1};
    blk.basis = MatR::Identity(2, 2);
    v0.blocks.push_back(std::move(blk));
  }
  CHECK_THROWS_AS(build_reduced_system(a, v0, VecC::Ones(n).eval()), std::logic_error);
}

TEST_CASE("reduced factorization cost scales with the layer blocks") {
  const PlateSystem p = make_plate(2e9L, 12, 12);
  REQUIRE(p.part.num_layers() == 12);
  const auto proj = solve_dc_projected(p.a, p.v0, p.b);
  const auto lay = solve_dc_layered(p.a, p.v0, p.b);
  CHECK(relative_error(lay.x, proj.x) <= 1e-12L);

  long long sum_k3 = 0;
  for (const auto& blk : p.v0.blocks) {
    const long long k = blk.basis.cols();
    sum_k3 += k * k * k;
  }
  CHECK(lay.reduced_ops <= 20 * sum_k3);          // layer-cubed scaling
  CHECK(lay.reduced_ops * 4 <= proj.reduced_ops); // far below the dense cost
}

TEST_CASE("two-region Schur path") {
  const PlateSystem p = make_plate(2e9L);
  const auto dir = solve_direct(p.a, p.b);

  std::vector<int> rows1, rows2;
  const MatR v02 = p.v0.dense_for_layers(2, 5, rows2);
  p.v0.dense_for_layers(0, 2, rows1);

  SUBCASE("projected Schur solve tracks the direct solution in region 2") {
    const VecC x2 = solve_dc_schur2(p.a, p.b, rows1, rows2, v02);
    const VecC ref = gather_rows(dir.x, rows2);
    CHECK(relative_error(x2, ref) <= 1e-3L);
  }
  SUBCASE("square orthogonal basis gives the exact Schur solve") {
    const MatR eye = MatR::Identity(static_cast<Index>(rows2.size()), static_cast<Index>(rows2.size()));
    const VecC x2 = solve_dc_schur2(p.a, p.b, rows1, rows2, eye);
    const VecC ref = gather_rows(dir.x, rows2);
    CHECK(relative_error(x2, ref) <= 1e-9L);
  }
  SUBCASE("decoupled regions reduce to the projected solve on region 2") {
    const Index n1 = 4, n2 = 6;
    MatC a = MatC::Zero(n1 + n2, n1 + n2);
    a.topLeftCorner(n1, n1) = MatC::Identity(n1, n1) * Complex(3, 1);
    MatC a22 = MatC::Random(n2, n2);
    a22 = (a22 + a22.transpose()).eval() + Complex(8, 0) * MatC::Identity(n2, n2);
    a.bottomRightCorner(n2, n2) = a22;
    VecC b = VecC::Zero(n1 + n2);
    for (Index i = 0; i < n2; ++i) b(n1 + i) = Complex(1, static_cast<Real>(i));

    std::vector<int> r1(n1), r2(n2);
    std::iota(r1.begin(), r1.end(), 0);
    std::iota(r2.begin(), r2.end(), static_cast<int>(n1));
    MatR basis = MatR::Zero(n2, 2);
    basis(0, 0) = 1;
    basis(3, 1) = 1;
    const VecC x2 = solve_dc_schur2<Real>(a, b, r1, r2, basis);

    GlobalNullspace<Real> v2;
    v2.n = n2;
    GlobalNullspace<Real>::Block blk;
    blk.rows.resize(static_cast<size_t>(n2));
    std::iota(blk.rows.begin(), blk.rows.end(), 0);
    blk.basis = basis;
    v2.blocks.push_back(std::move(blk));
    const auto proj = solve_dc_projected<Real>(a22, v2, b.tail(n2).eval());
    CHECK(relative_error(x2, proj.x) <= 1e-15L);
  }
}

TEST_CASE("two-layer layered solve agrees with the literal two-region path") {
  const PlateSystem p = make_plate(2e9L, 2);
  REQUIRE(p.part.num_layers() == 2);
  const auto lay = solve_dc_layered(p.a, p.v0, p.b);

  std::vector<int> rows1, rows2;
  const MatR v02 = p.v0.dense_for_layers(1, 2, rows2);
  p.v0.dense_for_layers(0, 1, rows1);
  const VecC x2 = solve_dc_schur2(p.a, p.b, rows1, rows2, v02);
  CHECK(relative_error(x2, gather_rows(lay.x, rows2).eval()) <= 1e-3L);
}

TEST_CASE("projection error shrinks as the frequency drops") {
  Real prev = -1.0L;
  for (Real f : {20e9L, 6e9L, 2e9L}) {
    const PlateSystem p = make_plate(f);
    const auto dir = solve_direct(p.a, p.b);
    const auto proj = solve_dc_projected(p.a, p.v0, p.b);
    const Real err = relative_error(proj.x, dir.x);
    if (prev >= 0.0L) CHECK(err < prev);
    prev = err;
  }
}
