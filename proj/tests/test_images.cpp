#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "pcm/images.hpp"
#include "support.hpp"

using namespace pcm;

TEST_CASE("truncated free green basics") {
  LatticeGeometry g = build_lattice(3, 1);
  int n = g.n();
  TruncatedFreeGreen free_g(g, 4 * n);

  CHECK_THROWS_AS(TruncatedFreeGreen(g, 2), InvalidParameter);

  // G 1 = 1 holds exactly on the whole window under the Neumann closure
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(free_g.window_sites());
  Eigen::VectorXd g1 = free_g.solve(ones);
  CHECK((g1 - ones).cwiseAbs().maxCoeff() < 1e-8);

  // invariance under the 90-degree rotation of the window about its center
  Coord z{n / 2, n / 2};
  auto rot = [&](Coord p) { return Coord{p.x1, n - 1 - p.x0}; };
  for (Coord x : {Coord{z.x0 + 1, z.x1}, Coord{z.x0 + 2, z.x1 + 3}, Coord{0, 0}}) {
    double a = free_g.value(x, z);
    double b = free_g.value(rot(x), rot(z));
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
  }

  // reflection invariance of central entries (the reflections that generate
  // the image sets act about the box edges)
  auto p0 = [&](Coord p) { return Coord{-1 - p.x0, p.x1}; };
  for (Coord x : {Coord{1, 4}, Coord{0, 0}, Coord{2, 7}}) {
    double a = free_g.value(x, z);
    double b = free_g.value(p0(x), p0(z));
    CHECK(a == doctest::Approx(b).epsilon(1e-9));
  }

  // stability probe recorded and small; doubling the radius moves central
  // entries below 1e-8
  CHECK(free_g.stability_delta() < 1e-8);
  TruncatedFreeGreen big(g, 8 * n);
  Coord x{z.x0 + 2, z.x1};
  CHECK(std::abs(big.value(x, z) - free_g.value(x, z)) < 1e-8);
}

TEST_CASE("coarse kernels on the window") {
  LatticeGeometry g = build_lattice(3, 1);
  int n = g.n(), L = g.L();
  TruncatedFreeGreen free_g(g, 4 * n);

  // coarse reflection invariance of the forward and inverse kernels
  Coord y{3, 3}, z{0, 6};
  auto p1 = [&](Coord p) { return Coord{-L - p.x0, p.x1}; };
  CHECK(free_g.coarse_value(p1(y), p1(z)) ==
        doctest::Approx(free_g.coarse_value(y, z)).epsilon(1e-10));
  CHECK(free_g.coarse_inverse_value(p1(y), p1(z)) ==
        doctest::Approx(free_g.coarse_inverse_value(y, z)).epsilon(1e-8));

  // the coarse inverse really inverts Q G Q* on the coarse window: check one
  // row of N N^-1 = 1 through the cached columns, using the symmetry of N
  double entry = 0.0;
  for (int c = 0; c < free_g.coarse_window_sites(); ++c) {
    Coord w = free_g.coarse_window_coord(c);
    entry += free_g.coarse_value(w, y) * free_g.coarse_inverse_value(w, z);
  }
  CHECK(std::abs(entry - 0.0) < 1e-8);  // y != z here
  double diag = 0.0;
  for (int c = 0; c < free_g.coarse_window_sites(); ++c) {
    Coord w = free_g.coarse_window_coord(c);
    diag += free_g.coarse_value(w, y) * free_g.coarse_inverse_value(w, y);
  }
  CHECK(std::abs(diag - 1.0) < 1e-8);
}

TEST_CASE("box relation under coarse reflections") {
  LatticeGeometry g = build_lattice(3, 1);
  int n = g.n(), L = g.L();
  // x in B(P1 y) iff P x in B(y), exhaustively over a window
  auto p = [&](int t) { return -1 - t; };
  auto p1 = [&](int t) { return -L - t; };
  auto box_lo = [&](int t) { return (t >= 0 ? t / L : (t - L + 1) / L) * L; };
  for (int x = -2 * n; x < 2 * n; ++x)
    for (int y = -2 * n; y < 2 * n; y += L) {
      bool lhs = box_lo(x) == p1(y);
      bool rhs = box_lo(p(x)) == y;
      CHECK(lhs == rhs);
    }
}

TEST_CASE("fine image identity") {
  LatticeGeometry g = build_lattice(3, 1);
  int n = g.n();
  OperatorKernel gn = assemble_green(g);

  TruncatedFreeGreen free8(g, 8 * n);
  ImageDeviation dev8 = fine_image_check(g, free8, gn, 0);
  CHECK(dev8.samples == g.num_sites() * g.num_sites());
  CHECK(dev8.max_deviation <= 1e-6);

  // radius doubling: with the image sum cut inside the same window, the
  // truncation tail dominates and halving the cut strictly worsens it
  ImageDeviation dev24 = fine_image_check(g, free8, gn, 0, 0, true, 24);
  ImageDeviation dev12 = fine_image_check(g, free8, gn, 0, 0, true, 12);
  CHECK(dev24.max_deviation < dev12.max_deviation);
  CHECK(dev8.max_deviation <= dev24.max_deviation);

  // dropping all images except the seed is strictly worse near the boundary
  Coord x{0, 0}, z{0, 1};
  double single = std::abs(gn.k(g.site_id(x.x0, x.x1), g.site_id(z.x0, z.x1)) -
                           free8.value(x, z));
  CHECK(single > 10.0 * dev8.max_deviation);
}

TEST_CASE("coarse image identity") {
  LatticeGeometry g = build_lattice(3, 1);
  int n = g.n();
  OperatorKernel gn = assemble_green(g);
  CoarseGreen cg = coarse_green(g, gn);

  TruncatedFreeGreen free8(g, 8 * n);
  ImageDeviation dev8 = coarse_image_check(g, free8, cg.qgq_inv, 0);
  CHECK(dev8.samples == g.num_coarse() * g.num_coarse());
  CHECK(dev8.max_deviation <= 1e-6);

  ImageDeviation dev24 = coarse_image_check(g, free8, cg.qgq_inv, 0, 0, true, 24);
  ImageDeviation dev12 = coarse_image_check(g, free8, cg.qgq_inv, 0, 0, true, 12);
  CHECK(dev24.max_deviation < dev12.max_deviation);
  CHECK(dev8.max_deviation <= dev24.max_deviation);
}

TEST_CASE("neumann subspace check") {
  LatticeGeometry g = build_lattice(3, 1);
  int n = g.n();
  OperatorKernel gn = assemble_green(g);
  TruncatedFreeGreen free_g(g, 8 * n);

  // constants are members and the identities are exact
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(free_g.window_sites());
  SubspaceReport flat = neumann_subspace_check(free_g, gn, ones, 3);
  CHECK(flat.member);
  CHECK(flat.pass);
  for (double d : flat.power_deviation) CHECK(d < 1e-12);
  CHECK(flat.inverse_deviation < 1e-9);

  // symmetrized random fields are members; identities hold for l = 1,2,3
  Rng rng(3);
  Eigen::VectorXd raw(free_g.window_sites());
  for (int i = 0; i < raw.size(); ++i) raw(i) = rng.uniform(-1.0, 1.0);
  Eigen::VectorXd sym = free_g.symmetrize(raw);
  SubspaceReport rep = neumann_subspace_check(free_g, gn, sym, 3);
  CHECK(rep.member);
  for (double d : rep.power_deviation) CHECK(d < 1e-9);
  CHECK(rep.inverse_deviation < 1e-9);
  CHECK(rep.pass);

  // a single boundary violation is caught and named
  Eigen::VectorXd broken = sym;
  broken(free_g.window_id({-1, 4})) += 0.5;
  SubspaceReport bad = neumann_subspace_check(free_g, gn, broken, 2);
  CHECK_FALSE(bad.member);
  CHECK(bad.violation.find("left face") != std::string::npos);
}
