#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>

#include "pcm/randomwalk.hpp"
#include "support.hpp"

using namespace pcm;
using rw::Window;

namespace {

double dense_op_norm(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(0);
}

}  // namespace

TEST_CASE("partition of unity") {
  Window w{2, -20, 20};
  for (int mt : {2, 4, 7}) {
    auto [cover, part] = rw::build_partition(w, mt);

    // cube side and overlap structure
    for (std::size_t c = 0; c < cover.centers.size(); ++c) {
      for (int s : cover.cube_sites[c]) {
        auto [x0, x1] = w.coord(s);
        CHECK(std::abs(x0 - cover.centers[c][0] * mt) <= mt);
        CHECK(std::abs(x1 - cover.centers[c][1] * mt) <= mt);
      }
    }

    // sum_j h_j^2 = 1 at every site, and supp h_j inside cube j
    Eigen::VectorXd total = Eigen::VectorXd::Zero(w.num_sites());
    for (std::size_t c = 0; c < cover.centers.size(); ++c) {
      for (int s = 0; s < w.num_sites(); ++s) {
        double h = part.h[c](s);
        total(s) += h * h;
        if (h != 0.0) {
          auto [x0, x1] = w.coord(s);
          CHECK(std::abs(x0 - cover.centers[c][0] * mt) <= mt);
          CHECK(std::abs(x1 - cover.centers[c][1] * mt) <= mt);
        }
      }
    }
    CHECK((total - Eigen::VectorXd::Ones(w.num_sites())).cwiseAbs().maxCoeff() < 1e-12);
  }

  // profile bounds: plateau, support, |h'| <= 10 on a fine grid
  CHECK(rw::PartitionOfUnity::profile(0.2) == 1.0);
  CHECK(rw::PartitionOfUnity::profile(0.7) == 0.0);
  double worst = 0.0;
  for (int i = 0; i < 200000; ++i) {
    double t = -1.0 + 2e-5 * i;
    double d = (rw::PartitionOfUnity::profile(t + 5e-6) -
                rw::PartitionOfUnity::profile(t - 5e-6)) / 1e-5;
    worst = std::max(worst, std::abs(d));
  }
  CHECK(worst <= 10.0);
}

TEST_CASE("rw inverse of the identity is exact") {
  Window w{2, -10, 10};
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(w.num_sites(), w.num_sites());
  rw::RwExpansion e = rw::rw_inverse(w, id, 4, 0);
  CHECK(e.rest.cwiseAbs().maxCoeff() == 0.0);
  CHECK((e.inverse - id).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(e.m2 == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("rw inverse reconstructs the dense inverse") {
  Window w{2, -12, 12};
  Eigen::MatrixXd a = rw::window_operator(w, 3);
  rw::RwExpansion e = rw::rw_inverse(w, a, 6, 40);

  CHECK(e.norm_r_power < 1.0);
  Eigen::MatrixXd dense = a.fullPivLu().inverse();
  CHECK((e.inverse - dense).cwiseAbs().maxCoeff() < 1e-8);

  // blocks reassemble R exactly
  CHECK(e.block_consistency < 1e-10);  // AC = 1 - R re-derived, not assumed

  // residual decreases geometrically with ratio about ||R||
  rw::RwExpansion h = rw::rw_inverse(w, a, 6, 12);
  REQUIRE(h.residual_history.size() >= 10u);
  for (std::size_t i = 3; i + 1 < h.residual_history.size(); ++i) {
    double ratio = h.residual_history[i + 1] / h.residual_history[i];
    CHECK(ratio < 1.0);
    CHECK(ratio < h.norm_r_power * 2.0 + 0.1);
  }

  // certificate: the block bound dominates the true operator norm
  double true_norm = dense_op_norm(h.rest);
  CHECK(true_norm <= h.norm_r_block_bound);
  CHECK(h.norm_r_power == doctest::Approx(true_norm).epsilon(1e-3));
}

TEST_CASE("reconstructed inverse decays") {
  // with a short-range-localizing profile certified for the operator's range,
  // the reconstructed inverse kernel decays exponentially
  Window w{2, -12, 12};
  Eigen::MatrixXd a = rw::window_operator(w, 3);
  rw::RwExpansion e = rw::rw_inverse(w, a, 6, 40);

  double c1 = 0.7;
  auto prof = [c1](double x0, double x1) { return std::exp(-c1 * std::hypot(x0, x1)); };
  REQUIRE(rw::srl_check(prof, 2, c1, 16).pass());

  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (int i = 0; i < w.num_sites(); ++i)
    for (int j = 0; j < w.num_sites(); ++j) {
      if (i == j) continue;
      double v = std::abs(e.inverse(i, j));
      if (v < 1e-14) continue;
      auto [x0, x1] = w.coord(i);
      auto [y0, y1] = w.coord(j);
      double r = std::hypot(double(x0 - y0), double(x1 - y1));
      sx += r;
      sy += std::log(v);
      sxx += r * r;
      sxy += r * std::log(v);
      ++n;
    }
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(-slope > 0.0);
}

TEST_CASE("schur bound on random small kernels") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    int n = 12;
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) m(i, j) = rng.uniform(-1.0, 1.0);
    double rows = m.cwiseAbs().rowwise().sum().maxCoeff();
    double cols = m.cwiseAbs().colwise().sum().maxCoeff();
    CHECK(dense_op_norm(m) <= std::sqrt(rows) * std::sqrt(cols) + 1e-12);
  }
}

TEST_CASE("block decay improves when the boxes grow") {
  Window w{2, -16, 16};
  Eigen::MatrixXd a = rw::window_operator(w, 3);
  double c1 = 0.7;  // profile rate for the finite-range operator bound
  double delta = c1;

  auto fitted_prefactor = [&](int mt) {
    rw::RwExpansion e = rw::rw_inverse(w, a, mt, 2);
    double worst = 0.0;
    for (std::size_t b = 0; b < e.block_norm.size(); ++b) {
      double di = e.block_index[b][0] - e.block_index[b][2];
      double dj = e.block_index[b][1] - e.block_index[b][3];
      double r = std::hypot(di, dj) * mt / 3.0;
      double bval = std::pow(1.0 + r, 2.0 + delta) * std::exp(-c1 * r);
      worst = std::max(worst, e.block_norm[b] / bval);
    }
    return worst;
  };
  double p4 = fitted_prefactor(4);
  double p8 = fitted_prefactor(8);
  CHECK(p8 <= p4 / (std::pow(2.0, delta / 2.0) * 0.9));
}

TEST_CASE("no-convergence error carries the estimate") {
  // strictly positive but with a global rank-one coupling that the local
  // inverses cannot see, so the series cannot contract
  Window w{1, -12, 12};
  int n = w.num_sites();
  Eigen::MatrixXd bad = 0.05 * Eigen::MatrixXd::Identity(n, n) +
                        Eigen::MatrixXd::Constant(n, n, 1.0);
  try {
    rw::rw_inverse(w, bad, 2, 4);
    FAIL("expected NoConvergence");
  } catch (const NoConvergence& e) {
    CHECK(e.factor >= 1.0);
  }
}

TEST_CASE("srl check on the exponential profile") {
  double c1 = 1.0;
  auto prof = [c1](double x0, double x1) { return std::exp(-c1 * std::hypot(x0, x1)); };

  rw::SrlReport rep = rw::srl_check(prof, 1, c1, 30);
  CHECK(rep.pass());
  CHECK(rep.conv_eps == 0.25);
  CHECK(rep.m0 <= 2.0 / c1 + 2.0);

  rw::SrlReport rep2 = rw::srl_check(prof, 2, c1, 16);
  CHECK(rep2.pass());
}

TEST_CASE("srl check rejects a flat profile") {
  auto flat = [](double, double) { return 1.0; };
  rw::SrlReport rep = rw::srl_check(flat, 1, 1.0, 30);
  CHECK_FALSE(rep.pass_decay);
  CHECK_FALSE(rep.pass());
}

TEST_CASE("b scaling threshold") {
  // b(Mx/3) <= b(x) for sufficiently large M, on the sampled range
  double c1 = 1.0, delta = 1.0;
  int d = 1;
  auto b = [&](double r) { return std::pow(1.0 + r, d + delta) * std::exp(-c1 * r); };
  int mfit = -1;
  for (int mt = 2; mt <= 40; ++mt) {
    bool ok = true;
    for (int x = 1; x <= 60; ++x)
      if (b(double(mt) * x / 3.0) > b(double(x))) {
        ok = false;
        break;
      }
    if (ok) {
      mfit = mt;
      break;
    }
  }
  REQUIRE(mfit > 0);
  for (int x = 1; x <= 60; ++x) CHECK(b(double(mfit) * x / 3.0) <= b(double(x)));
}
