// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Tolerances are pinned in code; runtime caps are asserted where the
// criterion states one.

#include <Eigen/Eigenvalues>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "pcm/calculus.hpp"
#include "pcm/fields.hpp"
#include "pcm/green.hpp"
#include "pcm/images.hpp"
#include "pcm/oracle.hpp"
#include "pcm/randomwalk.hpp"
#include "pcm/solver.hpp"
#include "support.hpp"

using namespace pcm;

namespace {

int failures = 0;

struct Criterion {
  int id;
  const char* label;
  std::chrono::steady_clock::time_point start;
  bool ok = true;
  std::string note;

  Criterion(int id_, const char* label_)
      : id(id_), label(label_), start(std::chrono::steady_clock::now()) {}

  void require(bool cond, const std::string& what) {
    if (!cond) {
      ok = false;
      if (!note.empty()) note += "; ";
      note += what;
    }
  }

  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }

  ~Criterion() {
    std::printf("[criterion %02d] %s  %s (%.2f s)%s%s\n", id, ok ? "PASS" : "FAIL", label,
                seconds(), note.empty() ? "" : " -- ", note.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

double dist_inf(const VectorConfig& a, const VectorConfig& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.a.size(); ++i) d = std::max(d, (a.a[i] - b.a[i]).norm());
  return d;
}

void criterion_1() {
  Criterion c(1, "single-box Neumann spectral gap equals 1");
  int L = 3;
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(L * L, L * L);
  auto id = [&](int i, int j) { return j * L + i; };
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L; ++j) {
      if (i + 1 < L) {
        lap(id(i, j), id(i, j)) += 1;
        lap(id(i + 1, j), id(i + 1, j)) += 1;
        lap(id(i, j), id(i + 1, j)) -= 1;
        lap(id(i + 1, j), id(i, j)) -= 1;
      }
      if (j + 1 < L) {
        lap(id(i, j), id(i, j)) += 1;
        lap(id(i, j + 1), id(i, j + 1)) += 1;
        lap(id(i, j), id(i, j + 1)) -= 1;
        lap(id(i, j + 1), id(i, j)) -= 1;
      }
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
  double gap = es.eigenvalues()(1);
  c.require(std::abs(gap - 4.0 * std::pow(std::sin(M_PI / (2.0 * L)), 2)) < 1e-10,
            "gap != 4 sin^2(pi/2L)");
  c.require(std::abs(gap - 1.0) < 1e-10, "gap != 1");
  c.require(c.seconds() < 1.0, "runtime over 1 s");
}

void criteria_2_3_5(const LatticeGeometry& geom, const GreenPack& pack) {
  SolverConfig cfg;  // eps = 0.05, eps1 = eps^2/2, tolerances pinned
  {
    Criterion c3(3, "criticality verification at every converged point");
    Criterion c2(2, "fixed-point solve over 20 seeds: residual and decay");
    for (int seed = 1; seed <= 20; ++seed) {
      auto t0 = std::chrono::steady_clock::now();
      SampledConfigs s = sample_configs(geom, cfg.effective_eps1(), cfg.eps, seed);
      SolveResult res = solve_critical(s.v, cfg, pack);
      double dt =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

      c2.require(res.report.converged, "seed " + std::to_string(seed) + " not converged");
      c2.require(res.report.final_residual <= 1e-12,
                 "seed " + std::to_string(seed) + " final residual " +
                     std::to_string(res.report.final_residual));
      c2.require(dt < 10.0, "seed " + std::to_string(seed) + " over 10 s");

      // geometric decay: past some index every ratio of successive residuals
      // (above the rounding floor) is < 0.9
      const auto& hist = res.report.history;
      int tail_start = -1;
      for (int k = 0; k + 1 < int(hist.size()); ++k) {
        bool good = true;
        for (int j = k; j + 1 < int(hist.size()); ++j) {
          if (hist[j + 1].residual < 1e-14) break;
          if (hist[j + 1].residual / hist[j].residual >= 0.9) {
            good = false;
            break;
          }
        }
        if (good) {
          tail_start = k;
          break;
        }
      }
      c2.require(tail_start >= 0 && tail_start + 1 < int(hist.size()),
                 "seed " + std::to_string(seed) + " no geometric tail");

      VerificationReport ver = verify_critical(res.a, s.v, cfg);
      c3.require(ver.sup_qa <= 1e-10, "constraint " + std::to_string(ver.sup_qa));
      c3.require(ver.conservation_spread <= 1e-8,
                 "conservation " + std::to_string(ver.conservation_spread));
      c3.require(ver.max_lie <= 1e-8, "lie " + std::to_string(ver.max_lie));
      c3.require(ver.small_field <= cfg.eps,
                 "small field " + std::to_string(ver.small_field));
    }
  }
  {
    Criterion c5(5, "uniqueness: 5 starting points, one fixed point");
    SampledConfigs s = sample_configs(geom, cfg.effective_eps1(), cfg.eps, 71);
    SolveResult base = solve_critical(s.v, cfg, pack);
    c5.require(base.report.converged, "base solve not converged");
    for (int k = 0; k < 4; ++k) {
      SampledConfigs start = sample_configs(geom, cfg.effective_eps1(), cfg.eps / 4, 400 + k);
      SolveResult other = solve_critical(s.v, cfg, pack, start.a);
      c5.require(other.report.converged, "start " + std::to_string(k) + " not converged");
      double d = dist_inf(base.a, other.a);
      c5.require(d <= 1e-10,
                 "start " + std::to_string(k) + " distance " + std::to_string(d));
    }
  }
}

void criterion_4(const LatticeGeometry& geom, const GreenPack& pack) {
  Criterion c(4, "oracle equivalence over 10 seeds (finite differences)");
  SolverConfig cfg;
  for (int seed = 1; seed <= 10; ++seed) {
    auto t0 = std::chrono::steady_clock::now();
    SampledConfigs s = sample_configs(geom, cfg.effective_eps1(), cfg.eps, seed);
    SolveResult solve = solve_critical(s.v, cfg, pack);
    OracleConfig ocfg;  // finite-difference gradients by default
    OracleResult oracle = oracle_minimize(s.v, cfg.eps, ocfg);
    double dt = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    c.require(solve.report.converged && oracle.report.converged,
              "seed " + std::to_string(seed) + " did not converge");
    double d = dist_inf(solve.a, oracle.a);
    c.require(d <= 1e-6, "seed " + std::to_string(seed) + " distance " + std::to_string(d));
    c.require(dt < 120.0, "seed " + std::to_string(seed) + " over 2 min");
  }
}

void criterion_6(const LatticeGeometry& geom) {
  Criterion c(6, "remainder bounds over 1000 random ensembles");
  int violations = 0;
  for (int t = 0; t < 1000; ++t) {
    Rng pick(10000 + t);
    double eps = pick.uniform(0.02, 0.5);
    double eps1 = pick.uniform(0.001, 0.5);
    SampledConfigs s1 = sample_configs(geom, eps1, eps, 20000 + t);
    SampledConfigs s2 = sample_configs(geom, eps1, eps, 30000 + t);
    Vector3Field d1 = d_adjoint(remainder_field(s1.a, s1.v));
    Vector3Field d2 = d_adjoint(remainder_field(s2.a, s1.v));
    double sup = 0.0, diff = 0.0, dist = 0.0;
    for (int x = 0; x < geom.num_sites(); ++x) {
      sup = std::max(sup, d1[x].norm());
      diff = std::max(diff, (d1[x] - d2[x]).norm());
      dist = std::max(dist, (s1.a.a[x] - s2.a.a[x]).norm());
    }
    if (sup > 24.0 * (eps * eps + eps1) + 1e-12) ++violations;
    if (diff > 96.0 * (eps + eps1) * dist + 1e-12) ++violations;
  }
  c.require(violations == 0, std::to_string(violations) + " violations");
}

void criterion_7() {
  Criterion c(7, "kernel decay rates positive and stable across sizes");
  double c1_g[2], c1_inv[2];
  for (int m : {1, 2}) {
    LatticeGeometry g = build_lattice(3, m);
    OperatorKernel green = assemble_green(g);
    CoarseGreen cg = coarse_green(g, green);
    DecayFit fg = decay_fit(green);
    DecayFit fi = decay_fit(cg.qgq_inv);
    c.require(fg.C1 > 0.0, "G decay rate not positive at m=" + std::to_string(m));
    c.require(fi.C1 > 0.0, "coarse inverse rate not positive at m=" + std::to_string(m));
    c1_g[m - 1] = fg.C1;
    c1_inv[m - 1] = fi.C1;
  }
  double rel_g = std::abs(c1_g[0] - c1_g[1]) / std::max(c1_g[0], c1_g[1]);
  double rel_i = std::abs(c1_inv[0] - c1_inv[1]) / std::max(c1_inv[0], c1_inv[1]);
  c.require(rel_g <= 0.25, "G rate drifts " + std::to_string(rel_g));
  c.require(rel_i <= 0.25, "coarse inverse rate drifts " + std::to_string(rel_i));
}

void criterion_8(const LatticeGeometry& geom, const GreenPack& pack) {
  Criterion c(8, "method of images: fine and coarse identities");
  int n = geom.n();
  CoarseGreen cg = coarse_green(geom, pack.g);

  TruncatedFreeGreen free8(geom, 8 * n);
  ImageDeviation fine8 = fine_image_check(geom, free8, pack.g, 0);
  ImageDeviation coarse8 = coarse_image_check(geom, free8, cg.qgq_inv, 0);
  c.require(fine8.samples == geom.num_sites() * geom.num_sites(), "not exhaustive");
  c.require(fine8.max_deviation <= 1e-6,
            "fine deviation " + std::to_string(fine8.max_deviation));
  c.require(coarse8.max_deviation <= 1e-6,
            "coarse deviation " + std::to_string(coarse8.max_deviation));

  // doubling the image radius shrinks the deviation: compared where the
  // truncation tail is above rounding (12 -> 24 sites), inside one window
  ImageDeviation fine24 = fine_image_check(geom, free8, pack.g, 0, 0, true, 24);
  ImageDeviation fine12 = fine_image_check(geom, free8, pack.g, 0, 0, true, 12);
  ImageDeviation coarse24 = coarse_image_check(geom, free8, cg.qgq_inv, 0, 0, true, 24);
  ImageDeviation coarse12 = coarse_image_check(geom, free8, cg.qgq_inv, 0, 0, true, 12);
  c.require(fine24.max_deviation < fine12.max_deviation, "fine deviation did not shrink");
  c.require(coarse24.max_deviation < coarse12.max_deviation,
            "coarse deviation did not shrink");
  c.require(fine8.max_deviation <= fine24.max_deviation + 1e-12, "radius monotonicity");
}

void criterion_9() {
  Criterion c(9, "random-walk expansion on the truncated window");
  rw::Window w{2, -24, 24};
  Eigen::MatrixXd a = rw::window_operator(w, 3);
  rw::RwExpansion e = rw::rw_inverse(w, a, 8, 63);
  c.require(e.norm_r_power < 1.0, "||R|| estimate " + std::to_string(e.norm_r_power));

  Eigen::MatrixXd dense =
      Eigen::MatrixXd(a.llt().solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
  double mismatch = (e.inverse - dense).cwiseAbs().maxCoeff();
  c.require(mismatch <= 1e-8, "inverse mismatch " + std::to_string(mismatch));

  rw::Window ws{2, -10, 10};
  Eigen::MatrixXd id = Eigen::MatrixXd::Identity(ws.num_sites(), ws.num_sites());
  rw::RwExpansion ei = rw::rw_inverse(ws, id, 4, 2);
  c.require(ei.rest.cwiseAbs().maxCoeff() == 0.0, "R != 0 for the identity");
  c.require(c.seconds() < 30.0, "runtime over 30 s");
}

void criterion_10() {
  Criterion c(10, "contraction factor < 1 and n-uniform iteration counts");
  SolverConfig cfg;
  cfg.contraction_samples = 50;
  int iterations[2];
  for (int m : {1, 2}) {
    LatticeGeometry g = build_lattice(3, m);
    GreenPack pack = make_green_pack(g);
    SampledConfigs s = sample_configs(g, cfg.effective_eps1(), cfg.eps, 5);
    ContractionEstimate est = estimate_contraction(s.v, cfg, pack, 123);
    c.require(!est.quotients.empty(), "no contraction samples at m=" + std::to_string(m));
    c.require(est.q < 1.0, "q = " + std::to_string(est.q) + " at m=" + std::to_string(m));
    SolveResult res = solve_critical(s.v, cfg, pack);
    c.require(res.report.converged, "solve at m=" + std::to_string(m) + " not converged");
    iterations[m - 1] = res.report.iterations;
  }
  double ratio = double(std::max(iterations[0], iterations[1])) /
                 double(std::max(1, std::min(iterations[0], iterations[1])));
  c.require(ratio <= 1.5, "iteration ratio " + std::to_string(ratio));
}

void criterion_11(const LatticeGeometry& geom) {
  Criterion c(11, "group and configuration lemma suites");
  Rng rng(2024);

  // weighted-sum closure residual against the matrix realization, 1e4 draws
  double worst = 0.0;
  for (int t = 0; t < 10000; ++t) {
    int terms = 2 + int(rng.raw() % 4);
    std::vector<std::pair<double, Su2>> ts;
    test::Mat2 acc = test::Mat2::Zero();
    for (int k = 0; k < terms; ++k) {
      double w = rng.uniform(0.0, 2.0);
      Su2 u = test::random_su2(rng);
      ts.push_back({w, u});
      acc += w * test::to_matrix(u);
    }
    WeightedSum ws = su2_weighted_sum(ts);
    worst = std::max(worst, test::op_norm(acc - ws.c * test::to_matrix(ws.u)));
  }
  c.require(worst <= 1e-12, "closure residual " + std::to_string(worst));

  // square-root bound with the computed constant over 1e3 Hermitian draws
  double chalf = c_half();
  int sqrt_viol = 0;
  for (int t = 0; t < 1000; ++t) {
    int dim = (t % 2) ? 2 : 5;
    Eigen::MatrixXcd mm(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int q = 0; q < dim; ++q)
        mm(r, q) = std::complex<double>(rng.uniform(-1, 1), rng.uniform(-1, 1));
    Eigen::MatrixXcd h = 0.5 * (mm + mm.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h);
    double scale = es.eigenvalues().cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    h *= rng.uniform(0.05, 0.999) * 0.5 / scale;
    es.compute(h);
    double lhs = 0.0, mn = 0.0;
    for (int k = 0; k < dim; ++k) {
      lhs = std::max(lhs, std::abs(std::sqrt(1.0 + es.eigenvalues()(k)) - 1.0));
      mn = std::max(mn, std::abs(es.eigenvalues()(k)));
    }
    if (lhs > chalf * mn + 1e-12) ++sqrt_viol;
  }
  c.require(sqrt_viol == 0, std::to_string(sqrt_viol) + " sqrt-bound violations");

  // pauli bounds with constants 2 and 6
  int pauli_viol = 0;
  const std::complex<double> im(0.0, 1.0);
  for (int t = 0; t < 5000; ++t) {
    Eigen::Vector3d v = rng.ball3(1.0);
    double v0 = rng.uniform(-1.0, 1.0);
    test::Mat2 m1 = v0 * test::Mat2::Identity();
    for (int j = 0; j < 3; ++j) m1 += im * v(j) * test::pauli(j + 1);
    if (std::pow(test::op_norm(m1), 2) > 2.0 * (v0 * v0 + v.squaredNorm()) + 1e-12)
      ++pauli_viol;
    Eigen::Vector3d w1 = rng.ball3(1.0), w2 = rng.ball3(1.0);
    double d0 = std::sqrt(1 - w1.squaredNorm()) - std::sqrt(1 - w2.squaredNorm());
    test::Mat2 m2 = d0 * test::Mat2::Identity();
    for (int j = 0; j < 3; ++j) m2 += im * (w1(j) - w2(j)) * test::pauli(j + 1);
    if (std::pow(test::op_norm(m2), 2) > 6.0 * (w1.squaredNorm() + w2.squaredNorm()) + 1e-12)
      ++pauli_viol;
  }
  c.require(pauli_viol == 0, std::to_string(pauli_viol) + " pauli-bound violations");

  // chain bound and block-average positivity over sampled ensembles
  int chain_viol = 0, pos_viol = 0;
  int L = geom.L();
  for (int t = 0; t < 50; ++t) {
    SampledConfigs s = sample_configs(geom, 0.0005, 0.03, 40000 + t);
    FineConfig u = assemble_fine(s.a, s.v);
    double eps = small_field_sup(u);
    if (eps <= 0.0 || eps > 1.0 / (4.0 * L)) continue;
    for (int y = 0; y < geom.num_coarse(); ++y) {
      const auto& sites = geom.box_sites(y);
      for (std::size_t i = 0; i < sites.size(); ++i)
        for (std::size_t j = i + 1; j < sites.size(); ++j)
          if (dist_to_identity(su2_mul(u.u[sites[i]], u.u[sites[j]].conj())) >
              2.0 * L * eps + 1e-12)
            ++chain_viol;
    }
    for (const WeightedSum& ws : block_average(u).raw)
      if (!(ws.c > 0.0)) ++pos_viol;
  }
  c.require(chain_viol == 0, std::to_string(chain_viol) + " chain violations");
  c.require(pos_viol == 0, std::to_string(pos_viol) + " positivity violations");
}

void criterion_12(const LatticeGeometry& geom) {
  Criterion c(12, "adjointness and algebraic identities");
  Rng rng(77);
  double w = double(geom.L() * geom.L());

  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    Vector3Field f(geom.num_sites());
    for (auto& v : f) v = rng.ball3(1.0);
    BondVectorField gbond;
    gbond.geom = &geom;
    gbond.v.resize(geom.num_bonds());
    for (auto& v : gbond.v) v = rng.ball3(1.0);
    Vector3Field gc(geom.num_coarse());
    for (auto& v : gc) v = rng.ball3(1.0);

    // <df, g> = <f, d*g>
    double lhs = 0.0;
    BondVectorField df = d_forward(geom, f);
    for (int b = 0; b < geom.num_bonds(); ++b) lhs += df.v[b].dot(gbond.v[b]);
    double rhs = 0.0;
    Vector3Field dg = d_adjoint(gbond);
    for (int s = 0; s < geom.num_sites(); ++s) rhs += f[s].dot(dg[s]);
    worst = std::max(worst, std::abs(lhs - rhs));

    // <Qf, g>_1 = <f, Q*g> with the coarse weight
    Vector3Field qf = q_average(geom, f);
    double lhs2 = 0.0;
    for (int y = 0; y < geom.num_coarse(); ++y) lhs2 += w * qf[y].dot(gc[y]);
    Vector3Field qg = q_adjoint(geom, gc);
    double rhs2 = 0.0;
    for (int s = 0; s < geom.num_sites(); ++s) rhs2 += f[s].dot(qg[s]);
    worst = std::max(worst, std::abs(lhs2 - rhs2));

    // QQ* = 1
    Vector3Field qq = q_average(geom, q_adjoint(geom, gc));
    for (int y = 0; y < geom.num_coarse(); ++y)
      worst = std::max(worst, (qq[y] - gc[y]).norm());
  }
  c.require(worst <= 1e-12, "adjointness residual " + std::to_string(worst));

  // -d*d matches the Neumann stencil entrywise
  double stencil_worst = 0.0;
  Eigen::MatrixXd m = green_operator_matrix(geom);
  for (int s = 0; s < geom.num_sites(); ++s) {
    Vector3Field delta(geom.num_sites(), Eigen::Vector3d::Zero());
    delta[s] = Eigen::Vector3d(1, 0, 0);
    Vector3Field col = d_adjoint(d_forward(geom, delta));
    for (int r = 0; r < geom.num_sites(); ++r) {
      double qq = geom.box_of(r) == geom.box_of(s) ? 1.0 / w : 0.0;
      stencil_worst = std::max(stencil_worst, std::abs(col[r](0) - (m(r, s) - qq)));
    }
  }
  c.require(stencil_worst <= 1e-12, "stencil mismatch " + std::to_string(stencil_worst));

  // w = dA + r against the group-multiplication route
  double id_worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    SampledConfigs s = sample_configs(geom, 0.05, 0.45, 50000 + t);
    BondW bw = bond_w_field(s.a, s.v);
    BondVectorField r = remainder_field(s.a, s.v);
    BondVectorField da = d_forward(geom, s.a.a);
    for (int b = 0; b < geom.num_bonds(); ++b)
      id_worst = std::max(id_worst, (bw.w.v[b] - da.v[b] - r.v[b]).norm());
  }
  c.require(id_worst <= 1e-12, "decomposition residual " + std::to_string(id_worst));
}

}  // namespace

int main() {
  std::printf("acceptance suite: L = 3 geometries, tolerances pinned in code\n");
  LatticeGeometry geom = build_lattice(3, 1);
  GreenPack pack = make_green_pack(geom);

  criterion_1();
  criteria_2_3_5(geom, pack);
  criterion_4(geom, pack);
  criterion_6(geom);
  criterion_7();
  criterion_8(geom, pack);
  criterion_9();
  criterion_10();
  criterion_11(geom);
  criterion_12(geom);

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
