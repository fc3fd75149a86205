#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "dcfem/assembly.hpp"
#include "dcfem/dc_solver.hpp"
#include "dcfem/postprocess.hpp"

#include "test_support.hpp"

using namespace dcfem;
using testsup::parallel_plate_mesh;

namespace {

ProbePath cross_gap_path(const Mesh& m, int j, int k, const char* name = "probe") {
  ProbePath p;
  p.name = name;
  for (int i = 0; i < m.grid.nx; ++i) p.edges.emplace_back(m.x_edge_index(i, j, k), 1);
  return p;
}

VecC solve_plate(const Mesh& m, Real freq_hz, int source_j = 2) {
  const auto sys = assemble<Real>(m);
  const Real omega = 2 * pi * freq_hz;
  SourceSpec src;
  src.current = 1.0L;
  src.omega = omega;
  for (int i = 0; i < m.grid.nx; ++i) src.path.emplace_back(m.x_edge_index(i, source_j, 0), 1);
  const VecC b = assemble_rhs(m, src).b;
  return solve_direct(system_matrix(sys, omega), b).x;
}

}  // namespace

TEST_CASE("voltage extraction") {
  const Mesh m = parallel_plate_mesh();

  SUBCASE("zero field gives zero volts") {
    const VecC x = VecC::Zero(m.num_unknowns());
    CHECK(extract_voltage(m, x, cross_gap_path(m, 2, 5)) == Complex(0, 0));
  }
  SUBCASE("uniform unit field across the 1 um gap integrates to 1e-6 V") {
    VecC x = VecC::Zero(m.num_unknowns());
    for (int u = 0; u < m.num_unknowns(); ++u) {
      const Edge& e = m.edges[static_cast<size_t>(m.unknown_edge[u])];
      if (e.axis == 0) x(u) = Complex(e.length, 0);  // E_x = 1 V/m
    }
    const Complex v = extract_voltage(m, x, cross_gap_path(m, 2, 5));
    CHECK(std::abs(std::abs(v) - 1e-6L) < 1e-21L);
  }
  SUBCASE("endpoints on the same conductor are rejected") {
    ProbePath loop;
    for (int i = 0; i < 3; ++i) loop.edges.emplace_back(m.x_edge_index(i, 2, 5), 1);
    loop.edges.emplace_back(m.y_edge_index(3, 2, 5), 1);
    for (int i = 2; i >= 0; --i) loop.edges.emplace_back(m.x_edge_index(i, 3, 5), -1);
    CHECK_THROWS_AS(extract_voltage(m, VecC::Zero(m.num_unknowns()).eval(), loop),
                    std::invalid_argument);
  }
  SUBCASE("disconnected path is rejected") {
    ProbePath bad;
    bad.edges.emplace_back(m.x_edge_index(0, 2, 5), 1);
    bad.edges.emplace_back(m.x_edge_index(2, 2, 5), 1);
    CHECK_THROWS_AS(extract_voltage(m, VecC::Zero(m.num_unknowns()).eval(), bad),
                    std::invalid_argument);
  }
}

TEST_CASE("probe location insensitivity at 2 GHz") {
  const Mesh m = parallel_plate_mesh();
  const VecC x = solve_plate(m, 2e9L);
  const Complex v_far = extract_voltage(m, x, cross_gap_path(m, 2, 5));
  const Complex v_near = extract_voltage(m, x, cross_gap_path(m, 2, 0));
  CHECK(std::abs(v_far - v_near) <= 0.01L * std::abs(v_near));

  // Path independence across the gap at the same z plane.
  const Complex v_side = extract_voltage(m, x, cross_gap_path(m, 0, 5));
  CHECK(std::abs(v_far - v_side) <= 0.001L * std::abs(v_far));
}

TEST_CASE("capacitance formula") {
  const Real omega = 2 * pi * 1e9L;
  const Complex v = Complex(1, 0) / (Complex(0, omega) * Complex(1e-12L, 0));
  const auto c = capacitance(1.0L, v, omega);
  CHECK(std::abs(c.real_part - 1e-12L) < 1e-27L);
  CHECK(std::abs(c.loss_tangent) < 1e-15L);
  CHECK_THROWS_AS(capacitance(1.0L, Complex(0, 0), omega), std::invalid_argument);
  CHECK_THROWS_AS(capacitance(1.0L, Complex(1, 0), 0.0L), std::invalid_argument);
}

TEST_CASE("plate capacitance against the analytic value") {
  const Real c_ref = analytic_parallel_plate(4e-10L, 1e-6L, eps0);
  CHECK(std::abs(c_ref - 3.5417e-15L) < 1e-19L);

  const Mesh m = parallel_plate_mesh();
  const Real omega = 2 * pi * 2e9L;
  const VecC x = solve_plate(m, 2e9L);
  const auto c = capacitance(1.0L, extract_voltage(m, x, cross_gap_path(m, 2, 5)), omega);
  CHECK(std::abs(c.real_part - c_ref) <= 0.01L * c_ref);
  CHECK(c.real_part > 0.0L);

  SUBCASE("doubling the separation halves the capacitance") {
    GridSpec g = GridSpec::uniform(6, 4, 5, 1e-6L / 3.0L, 1e-6L, 20e-6L);  // 2 um gap
    BoundarySpec bc;
    bc.set(Face::XMin, FaceCondition::PEC);
    bc.set(Face::XMax, FaceCondition::PEC);
    const Mesh m2 = build_mesh(g, bc);
    const VecC x2 = solve_plate(m2, 2e9L);
    const auto c2 = capacitance(1.0L, extract_voltage(m2, x2, cross_gap_path(m2, 2, 5)), omega);
    CHECK(std::abs(c2.real_part - 0.5L * c.real_part) <= 0.02L * 0.5L * c.real_part);
  }
}

TEST_CASE("analytic scalings") {
  const Real base = analytic_parallel_plate(4e-10L, 1e-6L, eps0);
  CHECK(analytic_parallel_plate(4e-10L, 2e-6L, eps0) == doctest::Approx(0.5 * (double)base));
  CHECK(analytic_parallel_plate(4e-10L, 1e-6L, 4.1L * eps0) ==
        doctest::Approx(4.1 * (double)base));
  CHECK_THROWS_AS(analytic_parallel_plate(0.0L, 1e-6L, eps0), std::invalid_argument);
}

TEST_CASE("frequency window guidance") {
  const Mesh m = parallel_plate_mesh();
  const auto w = frequency_window(m);
  CHECK(w.first_resonance == doctest::Approx(1.499e12).epsilon(1e-3));
  CHECK(w.f_high == doctest::Approx(1.499e11).epsilon(1e-3));
  CHECK(w.f_low < 2e9L);
  CHECK(2e9L < w.f_high);  // the operating point sits inside the window

  SUBCASE("scaling all dimensions by 10 shifts the window down by 10") {
    GridSpec g = GridSpec::uniform(3, 4, 5, 10e-6L / 3.0L, 10e-6L, 200e-6L);
    const auto w10 = frequency_window(build_mesh(g, {}));
    CHECK(w10.f_high == doctest::Approx((double)(w.f_high / 10)).epsilon(1e-9));
    CHECK(w10.f_low == doctest::Approx((double)(w.f_low / 10)).epsilon(1e-9));
  }
  SUBCASE("dielectric loading shrinks the window") {
    MaterialRegion r;
    r.i_range = {0, 2};
    r.j_range = {0, 3};
    r.k_range = {0, 4};
    r.eps_r = 4.0L;
    const auto w4 = frequency_window(m, {r});
    CHECK(w4.f_high == doctest::Approx((double)(w.f_high / 2)).epsilon(1e-9));
    CHECK(w4.f_low == doctest::Approx((double)(w.f_low / 2)).epsilon(1e-9));
  }
}
