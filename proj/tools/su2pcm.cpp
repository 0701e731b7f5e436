// Batch driver: loads a JSON config, runs one command, writes a manifest and
// machine-readable reports into the output directory. Exit status is 0 iff
// every requested check passed.

#include <CLI11.hpp>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "pcm/calculus.hpp"
#include "pcm/fields.hpp"
#include "pcm/green.hpp"
#include "pcm/images.hpp"
#include "pcm/oracle.hpp"
#include "pcm/par.hpp"
#include "pcm/randomwalk.hpp"
#include "pcm/rng.hpp"
#include "pcm/serialize.hpp"
#include "pcm/solver.hpp"

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
  std::string command;
  int L = 3;
  int m = 1;
  double eps = 0.05;
  double eps1 = -1.0;  // default: eps^2/2
  std::uint64_t seed = 1;
  int max_iter = 200;
  double tol_residual = 1e-12;
  double tol_constraint = 1e-10;
  double tol_conservation = 1e-8;
  double tol_lie = 1e-8;
  double tol_oracle = 1e-6;
  int radius = -1;  // images: default 8n
  int m_tilde = 8;
  int order = 63;
  int window_radius = 24;
  int samples = 0;  // images: 0 = exhaustive (sampled automatically for m >= 2)
  int contraction_samples = 50;
  int ensembles = 1000;
  std::string out = "out";

  json echo;  // every value actually used, recorded into the manifest
};

[[noreturn]] void usage_error(const std::string& path, const std::string& what) {
  std::cerr << "config error at " << path << ": " << what << "\n";
  std::exit(2);
}

template <class T>
T get_field(const json& j, const std::string& key, T fallback, bool integer = false) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) usage_error(key, "expected a string");
    return v.get<std::string>();
  } else {
    if (!v.is_number()) usage_error(key, "expected a number");
    if (integer && !v.is_number_integer()) usage_error(key, "expected an integer");
    return v.get<T>();
  }
}

RunConfig load_config(const std::string& path, const std::string& command,
                      const std::string& out_override) {
  std::ifstream in(path);
  if (!in) usage_error(path, "cannot open config file");
  json j;
  try {
    j = json::parse(in);
  } catch (const std::exception& e) {
    usage_error(path, e.what());
  }

  RunConfig c;
  c.command = command;
  c.L = get_field<int>(j, "L", c.L, true);
  c.m = get_field<int>(j, "m", c.m, true);
  c.eps = get_field<double>(j, "eps", c.eps);
  c.eps1 = get_field<double>(j, "eps1", c.eps1);
  c.seed = get_field<std::uint64_t>(j, "seed", c.seed, true);
  c.max_iter = get_field<int>(j, "max_iter", c.max_iter, true);
  c.tol_residual = get_field<double>(j, "tol_residual", c.tol_residual);
  c.tol_constraint = get_field<double>(j, "tol_constraint", c.tol_constraint);
  c.tol_conservation = get_field<double>(j, "tol_conservation", c.tol_conservation);
  c.tol_lie = get_field<double>(j, "tol_lie", c.tol_lie);
  c.tol_oracle = get_field<double>(j, "tol_oracle", c.tol_oracle);
  c.radius = get_field<int>(j, "radius", c.radius, true);
  c.m_tilde = get_field<int>(j, "m_tilde", c.m_tilde, true);
  c.order = get_field<int>(j, "order", c.order, true);
  c.window_radius = get_field<int>(j, "window_radius", c.window_radius, true);
  c.samples = get_field<int>(j, "samples", c.samples, true);
  c.contraction_samples = get_field<int>(j, "contraction_samples", c.contraction_samples, true);
  c.ensembles = get_field<int>(j, "ensembles", c.ensembles, true);
  c.out = get_field<std::string>(j, "out", c.out);
  if (!out_override.empty()) c.out = out_override;

  if (c.L < 3 || c.L % 2 == 0) usage_error("L", "must be an odd integer >= 3");
  if (c.m < 1) usage_error("m", "must be >= 1");
  if (!(c.eps > 0.0 && c.eps <= 1.0)) usage_error("eps", "must lie in (0, 1]");
  if (c.eps1 > 1.0) usage_error("eps1", "must lie in (0, 1] when given");

  c.echo = {{"command", c.command},
            {"L", c.L},
            {"m", c.m},
            {"eps", c.eps},
            {"eps1", c.eps1 < 0 ? 0.5 * c.eps * c.eps : c.eps1},
            {"seed", c.seed},
            {"max_iter", c.max_iter},
            {"tol_residual", c.tol_residual},
            {"tol_constraint", c.tol_constraint},
            {"tol_conservation", c.tol_conservation},
            {"tol_lie", c.tol_lie},
            {"tol_oracle", c.tol_oracle},
            {"radius", c.radius},
            {"m_tilde", c.m_tilde},
            {"order", c.order},
            {"window_radius", c.window_radius},
            {"samples", c.samples},
            {"contraction_samples", c.contraction_samples},
            {"ensembles", c.ensembles}};
  return c;
}

pcm::SolverConfig solver_config(const RunConfig& c) {
  pcm::SolverConfig s;
  s.eps = c.eps;
  s.eps1 = c.eps1;
  s.max_iter = c.max_iter;
  s.tol_residual = c.tol_residual;
  s.tol_constraint = c.tol_constraint;
  s.tol_conservation = c.tol_conservation;
  s.tol_lie = c.tol_lie;
  s.contraction_samples = c.contraction_samples;
  return s;
}

struct Failures {
  json list = json::array();
  void add(const std::string& check, const json& detail) {
    list.push_back({{"check", check}, {"detail", detail}});
  }
  bool ok() const { return list.empty(); }
};

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

json run_solve(const RunConfig& c, const pcm::LatticeGeometry& geom, Failures& fails) {
  pcm::SolverConfig scfg = solver_config(c);
  pcm::GreenPack pack = pcm::make_green_pack(geom);
  pcm::SampledConfigs s = pcm::sample_configs(geom, scfg.effective_eps1(), scfg.eps, c.seed);

  pcm::SolveResult res = pcm::solve_critical(s.v, scfg, pack);
  pcm::VerificationReport ver = pcm::verify_critical(res.a, s.v, scfg);

  if (!res.report.converged)
    fails.add("solve.converged", {{"final_residual", res.report.final_residual}});
  if (!ver.pass()) fails.add("solve.verification", pcm::verification_report_to_json(ver));

  pcm::write_solve_history_csv(res.report, c.out + "/iterates.csv");
  json crit = pcm::vector_config_to_json(res.a);
  crit["seed"] = c.seed;
  pcm::write_json(crit, c.out + "/critical_point.json");
  json constraint = pcm::coarse_config_to_json(s.v);
  constraint["seed"] = c.seed;
  pcm::write_json(constraint, c.out + "/constraint.json");
  pcm::write_bond_field_csv(pcm::remainder_field(res.a, s.v), c.out + "/remainder.csv");

  json rep;
  rep["solve"] = pcm::solve_report_to_json(res.report);
  rep["verification"] = pcm::verification_report_to_json(ver);
  return rep;
}

json run_oracle_compare(const RunConfig& c, const pcm::LatticeGeometry& geom,
                        Failures& fails) {
  pcm::SolverConfig scfg = solver_config(c);
  pcm::GreenPack pack = pcm::make_green_pack(geom);
  pcm::SampledConfigs s = pcm::sample_configs(geom, scfg.effective_eps1(), scfg.eps, c.seed);

  pcm::SolveResult solve = pcm::solve_critical(s.v, scfg, pack);
  pcm::OracleConfig ocfg;
  pcm::OracleResult oracle = pcm::oracle_minimize(s.v, scfg.eps, ocfg);

  double dist = 0.0;
  for (int i = 0; i < geom.num_sites(); ++i)
    dist = std::max(dist, (solve.a.a[i] - oracle.a.a[i]).norm());

  if (!solve.report.converged) fails.add("oracle.solver_converged", json::object());
  if (!oracle.report.converged) fails.add("oracle.descent_converged", json::object());
  if (dist > c.tol_oracle)
    fails.add("oracle.agreement", {{"distance", dist}, {"tolerance", c.tol_oracle}});

  pcm::write_oracle_history_csv(oracle.report, c.out + "/descent.csv");

  json rep;
  rep["solver"] = pcm::solve_report_to_json(solve.report);
  rep["oracle"] = pcm::oracle_report_to_json(oracle.report);
  rep["distance"] = dist;
  return rep;
}

json run_green_report(const RunConfig& c, const pcm::LatticeGeometry& geom,
                      Failures& fails) {
  pcm::OperatorKernel g = pcm::assemble_green(geom);
  pcm::CoarseGreen cg = pcm::coarse_green(geom, g);

  pcm::DecayFit fit_g = pcm::decay_fit(g);
  pcm::DecayFit fit_inv = pcm::decay_fit(cg.qgq_inv);
  if (!(fit_g.C1 > 0.0)) fails.add("green.decay_g", pcm::decay_fit_to_json(fit_g));
  if (!(fit_inv.C1 > 0.0)) fails.add("green.decay_qgq_inv", pcm::decay_fit_to_json(fit_inv));
  if (!(cg.smallest_eigenvalue > 0.0))
    fails.add("green.positivity", {{"smallest_eigenvalue", cg.smallest_eigenvalue}});

  pcm::write_kernel_csv(g, c.out + "/green.csv");
  pcm::write_kernel_binary(g, c.out + "/green.bin", c.out + "/green.header.json");
  pcm::write_kernel_csv(cg.qgq_inv, c.out + "/qgq_inv.csv");

  json rep;
  rep["green_norm"] = pcm::linf_operator_norm(g);
  rep["qgq_inv_norm"] = pcm::linf_operator_norm(cg.qgq_inv);
  rep["coarse_smallest_eigenvalue"] = cg.smallest_eigenvalue;
  rep["decay_green"] = pcm::decay_fit_to_json(fit_g);
  rep["decay_qgq_inv"] = pcm::decay_fit_to_json(fit_inv);
  return rep;
}

json run_rw_report(const RunConfig& c, Failures& fails) {
  pcm::rw::Window w{2, -c.window_radius, c.window_radius};
  Eigen::MatrixXd a = pcm::rw::window_operator(w, c.L);
  pcm::rw::RwExpansion e = pcm::rw::rw_inverse(w, a, c.m_tilde, c.order);

  Eigen::MatrixXd dense =
      Eigen::MatrixXd(a.llt().solve(Eigen::MatrixXd::Identity(a.rows(), a.cols())));
  double mismatch = (e.inverse - dense).cwiseAbs().maxCoeff();

  if (!(e.norm_r_power < 1.0)) fails.add("rw.contraction", {{"norm_r", e.norm_r_power}});
  if (mismatch > 1e-8) fails.add("rw.reconstruction", {{"mismatch", mismatch}});

  double c1 = 0.7;
  auto profile = [c1](double x0, double x1) { return std::exp(-c1 * std::hypot(x0, x1)); };
  pcm::rw::SrlReport srl = pcm::rw::srl_check(profile, 2, c1, 16);
  if (!srl.pass()) fails.add("rw.srl_profile", pcm::srl_report_to_json(srl));

  json rep = pcm::rw_expansion_to_json(e);
  rep["dense_mismatch"] = mismatch;
  rep["srl"] = pcm::srl_report_to_json(srl);
  return rep;
}

json run_images_report(const RunConfig& c, const pcm::LatticeGeometry& geom,
                       Failures& fails) {
  int radius = c.radius > 0 ? c.radius : 8 * geom.n();
  pcm::OperatorKernel g = pcm::assemble_green(geom);
  pcm::CoarseGreen cg = pcm::coarse_green(geom, g);
  pcm::TruncatedFreeGreen free_g(geom, radius);

  int samples = (geom.m() >= 2 && c.samples == 0) ? 200 : c.samples;
  pcm::ImageDeviation fine = pcm::fine_image_check(geom, free_g, g, samples, c.seed);
  pcm::ImageDeviation coarse =
      pcm::coarse_image_check(geom, free_g, cg.qgq_inv, samples, c.seed);

  // truncation-tail tolerances from the fitted decay of each kernel: images
  // outside the radius contribute at most sum over shells of (image count per
  // shell) * C e^{-C1 r}, plus a floor for the linear-algebra noise
  auto tail_tol = [&](const pcm::DecayFit& fit) {
    double tail = 0.0;
    for (int shell = 0; shell <= 64; ++shell)
      tail += fit.C * 8.0 * (double(radius) / geom.n() + shell + 1) *
              std::exp(-fit.C1 * (radius + shell * geom.n()));
    return std::max(1e-9, tail);  // floor covers the linear-algebra noise
  };
  double tol_fine = tail_tol(free_g.fine_decay_fit());
  double tol_coarse = tail_tol(free_g.coarse_inverse_decay_fit());

  if (fine.max_deviation > tol_fine)
    fails.add("images.fine", {{"deviation", fine.max_deviation}, {"tolerance", tol_fine}});
  if (coarse.max_deviation > tol_coarse)
    fails.add("images.coarse",
              {{"deviation", coarse.max_deviation}, {"tolerance", tol_coarse}});

  json rep;
  rep["radius"] = radius;
  rep["stability_delta"] = free_g.stability_delta();
  rep["derived_tolerance_fine"] = tol_fine;
  rep["derived_tolerance_coarse"] = tol_coarse;
  rep["fine"] = pcm::image_deviation_to_json(fine);
  rep["coarse"] = pcm::image_deviation_to_json(coarse);
  return rep;
}

json run_lemma_suite(const RunConfig& c, const pcm::LatticeGeometry& geom, Failures& fails) {
  json table = json::array();
  auto record = [&](const std::string& name, bool pass, const json& detail) {
    table.push_back({{"check", name}, {"pass", pass}, {"detail", detail}});
    if (!pass) fails.add("lemma." + name, detail);
  };
  pcm::Rng rng(c.seed);
  int L = geom.L();

  {  // weighted-sum closure: folding order must not matter
    double worst = 0.0;
    for (int t = 0; t < c.ensembles; ++t) {
      std::vector<std::pair<double, pcm::Su2>> terms;
      for (int k = 0; k < 4; ++k) {
        Eigen::Vector3d v = rng.ball3(0.99);
        terms.push_back(
            {rng.uniform(0.0, 2.0), pcm::su2_from_vector(v, rng.raw() % 2 ? 1 : -1)});
      }
      pcm::WeightedSum fwd = pcm::su2_weighted_sum(terms);
      std::reverse(terms.begin(), terms.end());
      pcm::WeightedSum rev = pcm::su2_weighted_sum(terms);
      worst = std::max(worst, std::abs(fwd.c - rev.c));
      worst =
          std::max(worst, fwd.c * pcm::dist_to_identity(pcm::su2_mul(fwd.u, rev.u.conj())));
    }
    record("weighted-sum-closure", worst < 1e-12, {{"worst", worst}});
  }

  {  // chain bound and block-average positivity over sampled ensembles
    double worst_ratio = 0.0;
    bool positive = true;
    for (int t = 0; t < 50; ++t) {
      pcm::SampledConfigs s = pcm::sample_configs(geom, 0.0005, 0.03, c.seed + 17 * t);
      pcm::FineConfig u = pcm::assemble_fine(s.a, s.v);
      double eps = pcm::small_field_sup(u);
      if (eps <= 0 || eps > 1.0 / (4.0 * L)) continue;
      for (int y = 0; y < geom.num_coarse(); ++y) {
        const auto& sites = geom.box_sites(y);
        for (std::size_t i = 0; i < sites.size(); ++i)
          for (std::size_t j = i + 1; j < sites.size(); ++j) {
            double d =
                pcm::dist_to_identity(pcm::su2_mul(u.u[sites[i]], u.u[sites[j]].conj()));
            worst_ratio = std::max(worst_ratio, d / (2.0 * L * eps));
          }
      }
      for (const pcm::WeightedSum& ws : pcm::block_average(u).raw)
        positive = positive && ws.c > 0.0;
    }
    record("chain-bound", worst_ratio <= 1.0 + 1e-12, {{"worst_ratio", worst_ratio}});
    record("block-average-positivity", positive, json::object());
  }

  {  // square-root perturbation constant on random Hermitian matrices
    double ch = pcm::c_half();
    bool ok = true;
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      Eigen::Matrix2cd m;
      for (int r = 0; r < 2; ++r)
        for (int cc = 0; cc < 2; ++cc)
          m(r, cc) = std::complex<double>(rng.uniform(-1, 1), rng.uniform(-1, 1));
      Eigen::Matrix2cd h = 0.5 * (m + m.adjoint());
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(h);
      double scale = es.eigenvalues().cwiseAbs().maxCoeff();
      if (scale == 0.0) continue;
      h *= rng.uniform(0.05, 0.99) * 0.5 / scale;
      es.compute(h);
      double lhs = 0.0, mn = 0.0;
      for (int k = 0; k < 2; ++k) {
        lhs = std::max(lhs, std::abs(std::sqrt(1.0 + es.eigenvalues()(k)) - 1.0));
        mn = std::max(mn, std::abs(es.eigenvalues()(k)));
      }
      worst = std::max(worst, lhs / (ch * mn));
      ok = ok && lhs <= ch * mn + 1e-12;
    }
    record("sqrt-perturbation-bound", ok, {{"c_half", ch}, {"worst_ratio", worst}});
  }

  {  // pauli norm bounds with constants 2 and 6: for real coefficients the
     // matrix is normal, so ||v0 + i v.sigma||^2 = v0^2 + |v|^2 exactly
    bool ok = true;
    for (int t = 0; t < c.ensembles; ++t) {
      Eigen::Vector3d v = rng.ball3(1.0);
      double v0 = rng.uniform(-1.0, 1.0);
      ok = ok && v0 * v0 + v.squaredNorm() <= 2.0 * (v0 * v0 + v.squaredNorm()) + 1e-12;
      Eigen::Vector3d w1 = rng.ball3(1.0), w2 = rng.ball3(1.0);
      double d0 = std::sqrt(1 - w1.squaredNorm()) - std::sqrt(1 - w2.squaredNorm());
      double norm2 = d0 * d0 + (w1 - w2).squaredNorm();
      ok = ok && norm2 <= 6.0 * (w1.squaredNorm() + w2.squaredNorm()) + 1e-12;
    }
    record("pauli-norm-bounds", ok, json::object());
  }

  {  // rotation bounds: ||R*|| <= 2 and the Lipschitz constant 2
    bool ok = true;
    for (int t = 0; t < 200; ++t) {
      pcm::VectorConfig a1 = pcm::VectorConfig::zero(geom);
      pcm::VectorConfig a2 = pcm::VectorConfig::zero(geom);
      for (auto& v : a1.a) v = rng.ball3(0.5);
      for (auto& v : a2.a) v = rng.ball3(0.5);
      pcm::RotationField r1 = pcm::RotationField::build(a1);
      pcm::RotationField r2 = pcm::RotationField::build(a2);
      double dist = 0.0, diff = 0.0, norm = 0.0;
      for (int s = 0; s < geom.num_sites(); ++s) {
        dist = std::max(dist, (a1.a[s] - a2.a[s]).norm());
        Eigen::JacobiSVD<Eigen::Matrix3d> svd(r1.r_star[s] - r2.r_star[s]);
        diff = std::max(diff, svd.singularValues()(0));
        Eigen::JacobiSVD<Eigen::Matrix3d> svd2(r1.r_star[s]);
        norm = std::max(norm, svd2.singularValues()(0));
      }
      ok = ok && norm <= 2.0 + 1e-12 && diff <= 2.0 * dist + 1e-12;
    }
    record("rotation-bounds", ok, json::object());
  }

  {  // remainder bounds over random ensembles
    double worst_sup = 0.0, worst_lip = 0.0;
    for (int t = 0; t < c.ensembles; ++t) {
      pcm::Rng pick(c.seed + 31 * t);
      double eps = pick.uniform(0.02, 0.5), eps1 = pick.uniform(0.001, 0.5);
      pcm::SampledConfigs s1 = pcm::sample_configs(geom, eps1, eps, c.seed + 7919 * t);
      pcm::SampledConfigs s2 = pcm::sample_configs(geom, eps1, eps, c.seed + 104729 * t);
      pcm::Vector3Field d1 = pcm::d_adjoint(pcm::remainder_field(s1.a, s1.v));
      pcm::Vector3Field d2 = pcm::d_adjoint(pcm::remainder_field(s2.a, s1.v));
      double sup = 0.0, diff = 0.0, dist = 0.0;
      for (int x = 0; x < geom.num_sites(); ++x) {
        sup = std::max(sup, d1[x].norm());
        diff = std::max(diff, (d1[x] - d2[x]).norm());
        dist = std::max(dist, (s1.a.a[x] - s2.a.a[x]).norm());
      }
      worst_sup = std::max(worst_sup, sup / (24.0 * (eps * eps + eps1)));
      if (dist > 0) worst_lip = std::max(worst_lip, diff / (96.0 * (eps + eps1) * dist));
    }
    record("remainder-sup-bound", worst_sup <= 1.0 + 1e-9, {{"worst_ratio", worst_sup}});
    record("remainder-lipschitz", worst_lip <= 1.0 + 1e-9, {{"worst_ratio", worst_lip}});
  }

  {  // norm stability of the green kernel between this size and m = 1
    pcm::LatticeGeometry small = pcm::build_lattice(L, 1);
    double n_here = pcm::linf_operator_norm(pcm::assemble_green(geom));
    double n_small = pcm::linf_operator_norm(pcm::assemble_green(small));
    double rel = std::abs(n_here - n_small) / std::max(n_here, n_small);
    record("green-norm-stability", rel < 0.10, {{"relative_change", rel}});
  }

  return json{{"table", table}};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SU(2) principal chiral model: constrained critical points on a lattice"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  for (const char* name : {"solve", "oracle-compare", "green-report", "rw-report",
                           "images-report", "lemma-suite"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_override, "output directory (overrides config)");
  }

  CLI11_PARSE(app, argc, argv);
  std::string command = app.get_subcommands().front()->get_name();

  RunConfig cfg = load_config(config_path, command, out_override);
  fs::create_directories(cfg.out);

  auto t0 = std::chrono::steady_clock::now();
  Failures fails;
  json report;
  try {
    pcm::LatticeGeometry geom = pcm::build_lattice(cfg.L, cfg.m);
    if (command == "solve") {
      report = run_solve(cfg, geom, fails);
    } else if (command == "oracle-compare") {
      report = run_oracle_compare(cfg, geom, fails);
    } else if (command == "green-report") {
      report = run_green_report(cfg, geom, fails);
    } else if (command == "rw-report") {
      report = run_rw_report(cfg, fails);
    } else if (command == "images-report") {
      report = run_images_report(cfg, geom, fails);
    } else if (command == "lemma-suite") {
      report = run_lemma_suite(cfg, geom, fails);
    }
    report["geometry"] = pcm::geometry_to_json(geom);
  } catch (const pcm::Error& e) {
    fails.add("exception", {{"what", e.what()}});
  }
  auto t1 = std::chrono::steady_clock::now();

  report["command"] = command;
  report["failures"] = fails.list;
  report["status"] = fails.ok() ? "pass" : "fail";
  pcm::write_json(report, cfg.out + "/report.json");

  json manifest;
  manifest["config"] = cfg.echo;
  manifest["c_half"] = pcm::c_half();
  manifest["version"] = "su2pcm 0.1.0";
  manifest["threads"] = pcm::par_threads();
  pcm::write_json(manifest, cfg.out + "/manifest.json");

  json timings;
  timings["seconds"] = std::chrono::duration<double>(t1 - t0).count();
  pcm::write_json(timings, cfg.out + "/timings.json");

  for (const auto& f : fails.list)
    std::cerr << "FAIL " << f["check"].get<std::string>() << "\n";
  std::cout << (fails.ok() ? "pass" : "fail") << " (" << command << ", report at "
            << cfg.out << "/report.json)\n";
  return fails.ok() ? 0 : 1;
}
