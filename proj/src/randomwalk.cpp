#include "pcm/randomwalk.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <map>

#include "pcm/par.hpp"

namespace pcm::rw {

Eigen::MatrixXd window_operator(const Window& w, int L) {
  int ns = w.num_sites();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(ns, ns);
  auto add_bond = [&](int s, int t) {
    m(s, s) += 1.0;
    m(t, t) += 1.0;
    m(s, t) -= 1.0;
    m(t, s) -= 1.0;
  };
  for (int id = 0; id < ns; ++id) {
    auto [x0, x1] = w.coord(id);
    if (w.contains(x0 + 1, x1)) add_bond(id, w.id(x0 + 1, x1));
    if (w.d == 2 && w.contains(x0, x1 + 1)) add_bond(id, w.id(x0, x1 + 1));
  }
  // box-average projection, boxes aligned to multiples of L
  auto box_lo = [&](int t) { return (t >= 0 ? t / L : (t - L + 1) / L) * L; };
  std::map<std::array<int, 2>, std::vector<int>> boxes;
  for (int id = 0; id < ns; ++id) {
    auto [x0, x1] = w.coord(id);
    boxes[{box_lo(x0), w.d == 2 ? box_lo(x1) : 0}].push_back(id);
  }
  double wgt = 1.0 / (w.d == 1 ? L : L * L);
  for (const auto& [lbl, sites] : boxes)
    for (int s : sites)
      for (int t : sites) m(s, t) += wgt;
  return m;
}

double PartitionOfUnity::profile(double t) {
  double u = 3.0 * (2.0 / 3.0 - std::abs(t));
  u = std::clamp(u, 0.0, 1.0);
  return std::sqrt(u * u * (3.0 - 2.0 * u));  // smoothstep: S(u) + S(1-u) = 1
}

std::pair<BoxCover, PartitionOfUnity> build_partition(const Window& w, int m_tilde) {
  if (m_tilde < 2) throw InvalidParameter("M tilde must be >= 2");
  if (w.d != 1 && w.d != 2) throw InvalidParameter("dimension must be 1 or 2");
  BoxCover cover;
  cover.m_tilde = m_tilde;
  cover.d = w.d;
  int jlo = static_cast<int>(std::floor(double(w.lo - m_tilde) / m_tilde));
  int jhi = static_cast<int>(std::ceil(double(w.hi + m_tilde) / m_tilde));
  auto cube_range = [&](int j) {
    return std::pair<int, int>{j * m_tilde - m_tilde, j * m_tilde + m_tilde};
  };
  for (int j1 = (w.d == 2 ? jlo : 0); j1 <= (w.d == 2 ? jhi : 0); ++j1) {
    for (int j0 = jlo; j0 <= jhi; ++j0) {
      auto [a0, b0] = cube_range(j0);
      auto [a1, b1] = cube_range(j1);
      std::vector<int> sites;
      for (int id = 0; id < w.num_sites(); ++id) {
        auto [x0, x1] = w.coord(id);
        if (x0 >= a0 && x0 <= b0 && (w.d == 1 || (x1 >= a1 && x1 <= b1)))
          sites.push_back(id);
      }
      if (sites.empty()) continue;
      cover.centers.push_back({j0, j1});
      cover.cube_sites.push_back(std::move(sites));
    }
  }

  PartitionOfUnity part;
  part.h.resize(cover.centers.size());
  for (std::size_t c = 0; c < cover.centers.size(); ++c) {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(w.num_sites());
    for (int id = 0; id < w.num_sites(); ++id) {
      auto [x0, x1] = w.coord(id);
      double v = PartitionOfUnity::profile(double(x0) / m_tilde - cover.centers[c][0]);
      if (w.d == 2)
        v *= PartitionOfUnity::profile(double(x1) / m_tilde - cover.centers[c][1]);
      h(id) = v;
    }
    part.h[c] = std::move(h);
  }
  return {cover, part};
}

namespace {

double smallest_eigenvalue(const Eigen::MatrixXd& a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success)
    throw InvalidParameter("operator is not strictly positive");
  int n = int(a.rows());
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.3 * std::sin(1.0 + i);
  v.normalize();
  double lam = 0.0;
  for (int it = 0; it < 300; ++it) {
    Eigen::VectorXd y = llt.solve(v);
    double ny = y.norm();
    y /= ny;
    double lam_new = y.dot(a * y);
    if (it > 20 && std::abs(lam_new - lam) < 1e-13 * std::abs(lam_new)) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
    v = y;
  }
  return lam;
}

double op_norm_power(const Eigen::MatrixXd& m) {
  int n = int(m.cols());
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = 1.0 + 0.3 * std::sin(1.0 + 2.0 * i);
  v.normalize();
  double s = 0.0;
  for (int it = 0; it < 600; ++it) {
    Eigen::VectorXd u = m * v;
    Eigen::VectorXd w = m.transpose() * u;
    double nw = w.norm();
    if (nw == 0.0) return 0.0;
    w /= nw;
    double s_new = (m * w).norm();
    if (it > 10 && std::abs(s_new - s) < 1e-11 * std::max(1.0, s_new)) return s_new;
    s = s_new;
    v = w;
  }
  return s;
}

double max_abs_row_sum(const Eigen::MatrixXd& m) {
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace

RwExpansion rw_inverse(const Window& w, const Eigen::MatrixXd& a, int m_tilde, int order,
                       bool parallel) {
  const int ns = w.num_sites();
  if (a.rows() != ns || a.cols() != ns)
    throw InvalidParameter("operator size does not match the window");
  if (order < 0) throw InvalidParameter("order must be >= 0");

  RwExpansion out;
  out.m_tilde = m_tilde;
  out.order = order;
  out.m2 = smallest_eigenvalue(a);

  auto [cover, part] = build_partition(w, m_tilde);
  const int nc = int(cover.centers.size());

  // local inverses C_j, glued as C = sum_j h_j C_j h_j
  std::vector<Eigen::MatrixXd> cj(nc);
  par_for(
      nc,
      [&](std::int64_t c) {
    const auto& sites = cover.cube_sites[c];
    int k = int(sites.size());
    Eigen::MatrixXd sub(k, k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub(i, j) = a(sites[i], sites[j]);
        cj[c] = sub.llt().solve(Eigen::MatrixXd::Identity(k, k));
      },
      parallel);

  out.approx_c = Eigen::MatrixXd::Zero(ns, ns);
  for (int c = 0; c < nc; ++c) {
    const auto& sites = cover.cube_sites[c];
    const Eigen::VectorXd& h = part.h[c];
    for (std::size_t i = 0; i < sites.size(); ++i) {
      if (h(sites[i]) == 0.0) continue;
      for (std::size_t j = 0; j < sites.size(); ++j)
        out.approx_c(sites[i], sites[j]) += h(sites[i]) * cj[c](i, j) * h(sites[j]);
    }
  }

  // R assembled from its defining blocks R_ij (diagonal commutator block,
  // off-diagonal spill block) glued by C_j h_j; the relation A C = 1 - R is
  // then verified rather than used as the definition, so R vanishes exactly
  // when every block does (e.g. for A = identity).
  out.rest = Eigen::MatrixXd::Zero(ns, ns);
  std::map<int, double> row_sums, col_sums;
  for (int ci = 0; ci < nc; ++ci) {
    for (int cjx = 0; cjx < nc; ++cjx) {
      const auto& rows = cover.cube_sites[ci];
      const auto& cols = cover.cube_sites[cjx];
      Eigen::MatrixXd blk = Eigen::MatrixXd::Zero(int(rows.size()), int(cols.size()));
      bool nonzero = false;
      if (ci == cjx) {
        for (std::size_t r = 0; r < rows.size(); ++r)
          for (std::size_t s = 0; s < cols.size(); ++s) {
            double v = (part.h[cjx](rows[r]) - part.h[cjx](cols[s])) * a(rows[r], cols[s]);
            blk(r, s) = v;
            nonzero |= (v != 0.0);
          }
      } else {
        // rows live outside cube j: (box_j - 1) restricted to supp h_i^2
        for (std::size_t r = 0; r < rows.size(); ++r) {
          bool in_j = std::binary_search(cols.begin(), cols.end(), rows[r]);
          if (in_j) continue;
          double hi2 = part.h[ci](rows[r]) * part.h[ci](rows[r]);
          if (hi2 == 0.0) continue;
          for (std::size_t s = 0; s < cols.size(); ++s) {
            double v = -hi2 * a(rows[r], cols[s]) * part.h[cjx](cols[s]);
            blk(r, s) = v;
            nonzero |= (v != 0.0);
          }
        }
      }
      if (!nonzero) continue;
      double bn = op_norm_power(blk);
      out.block_index.push_back({cover.centers[ci][0], cover.centers[ci][1],
                                 cover.centers[cjx][0], cover.centers[cjx][1]});
      out.block_norm.push_back(bn);
      row_sums[ci] += bn;
      col_sums[cjx] += bn;
      Eigen::MatrixXd cjh = cj[cjx];
      for (std::size_t s = 0; s < cols.size(); ++s) cjh.col(s) *= part.h[cjx](cols[s]);
      Eigen::MatrixXd contrib = blk * cjh;
      for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t s = 0; s < cols.size(); ++s)
          out.rest(rows[r], cols[s]) += contrib(r, s);
    }
  }
  out.norm_r_power = op_norm_power(out.rest);
  out.block_consistency =
      (Eigen::MatrixXd::Identity(ns, ns) - a * out.approx_c - out.rest)
          .cwiseAbs()
          .maxCoeff();
  double rs = 0.0, cs = 0.0;
  for (const auto& kv : row_sums) rs = std::max(rs, kv.second);
  for (const auto& kv : col_sums) cs = std::max(cs, kv.second);
  out.norm_r_block_bound =
      std::pow(2.0, w.d) / out.m2 * std::sqrt(rs) * std::sqrt(cs);

  if (out.norm_r_power >= 1.0)
    throw NoConvergence("random-walk series does not converge at M=" +
                            std::to_string(m_tilde) + " (||R|| estimate " +
                            std::to_string(out.norm_r_power) + ")",
                        out.norm_r_power);

  // partial sums of sum_k C R^k; (1-R) P_K = 1 - R^(K+1), so R-powers give the
  // residual for free and the final value is verified against A explicitly
  if (order <= 16) {
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(ns, ns);
    Eigen::MatrixXd rpow = out.rest;
    out.residual_history.push_back(max_abs_row_sum(rpow));
    out.residual_orders.push_back(0);
    for (int k = 1; k <= order; ++k) {
      p += rpow;
      rpow = (rpow * out.rest).eval();
      out.residual_history.push_back(max_abs_row_sum(rpow));
      out.residual_orders.push_back(k);
    }
    out.inverse = out.approx_c * p;
  } else {
    Eigen::MatrixXd p = Eigen::MatrixXd::Identity(ns, ns);
    Eigen::MatrixXd rpow = out.rest;  // R^terms after each doubling
    int terms = 1;                    // p covers orders < terms
    out.residual_history.push_back(max_abs_row_sum(rpow));
    out.residual_orders.push_back(terms - 1);
    while (terms <= order) {
      p += (rpow * p).eval();
      terms *= 2;
      rpow = (rpow * rpow).eval();
      out.residual_history.push_back(max_abs_row_sum(rpow));
      out.residual_orders.push_back(terms - 1);
    }
    out.order = terms - 1;
    out.inverse = out.approx_c * p;
  }
  out.residual = max_abs_row_sum(a * out.inverse - Eigen::MatrixXd::Identity(ns, ns));
  return out;
}

SrlReport srl_check(const std::function<double(double, double)>& a, int d, double delta,
                    int range) {
  SrlReport rep;
  rep.delta = delta;
  rep.d = d;
  rep.range = range;

  std::vector<std::array<int, 2>> pts;
  if (d == 1) {
    for (int x = -range; x <= range; ++x) pts.push_back({x, 0});
  } else {
    for (int x1 = -range; x1 <= range; ++x1)
      for (int x0 = -range; x0 <= range; ++x0) pts.push_back({x0, x1});
  }
  auto len = [](const std::array<int, 2>& p) {
    return std::hypot(double(p[0]), double(p[1]));
  };
  auto b_of = [&](double x0, double x1) {
    double r = std::hypot(x0, x1);
    return std::pow(1.0 + r, d + delta) * a(x0, x1);
  };

  // (i) positivity
  rep.pass_positive = true;
  for (const auto& p : pts)
    if (!(a(p[0], p[1]) > 0.0)) {
      rep.pass_positive = false;
      rep.witness = "a <= 0 at (" + std::to_string(p[0]) + "," + std::to_string(p[1]) + ")";
      break;
    }

  // (ii) polynomial decay: fit c_delta on the inner half, test everywhere
  double cfit = 0.0;
  for (const auto& p : pts)
    if (len(p) <= range / 2.0)
      cfit = std::max(cfit, a(p[0], p[1]) * std::pow(1.0 + len(p), 2.0 * (d + delta)));
  rep.c_delta = cfit;
  rep.pass_decay = true;
  for (const auto& p : pts) {
    double bound = cfit * std::pow(1.0 + len(p), -2.0 * (d + delta));
    if (a(p[0], p[1]) > bound * (1.0 + 1e-9)) {
      rep.pass_decay = false;
      if (rep.witness.empty())
        rep.witness = "decay bound violated at (" + std::to_string(p[0]) + "," +
                      std::to_string(p[1]) + ")";
      break;
    }
  }

  // (iii) ratio bound over |y| <= 2 sqrt(d)
  double kfit = 0.0;
  int yr = static_cast<int>(std::floor(2.0 * std::sqrt(double(d))));
  for (const auto& p : pts) {
    double bx = b_of(p[0], p[1]);
    if (bx <= 0.0) continue;
    for (int y1 = (d == 2 ? -yr : 0); y1 <= (d == 2 ? yr : 0); ++y1)
      for (int y0 = -yr; y0 <= yr; ++y0) {
        if (std::hypot(double(y0), double(y1)) > 2.0 * std::sqrt(double(d))) continue;
        kfit = std::max(kfit, b_of(p[0] + y0, p[1] + y1) / bx);
      }
  }
  rep.ratio_k = kfit;
  rep.pass_ratio = kfit < 1e6;

  // (iv) convolution powers up to 4 against b(eps x), eps = 1/4
  rep.conv_eps = 0.25;
  std::vector<double> b_grid(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) b_grid[i] = b_of(pts[i][0], pts[i][1]);
  std::vector<double> conv = b_grid;
  double conv_c = 0.0;
  auto index_of = [&](int x0, int x1) -> int {
    if (std::abs(x0) > range || (d == 2 && std::abs(x1) > range)) return -1;
    if (d == 1) return x0 + range;
    return (x1 + range) * (2 * range + 1) + (x0 + range);
  };
  for (int n = 2; n <= 4; ++n) {
    std::vector<double> next(pts.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        int dx0 = pts[i][0] - pts[j][0];
        int dx1 = pts[i][1] - pts[j][1];
        int idx = index_of(dx0, dx1);
        if (idx >= 0) s += conv[idx] * b_grid[j];
      }
      next[i] = s;
    }
    conv = std::move(next);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      double denom = b_of(rep.conv_eps * pts[i][0], rep.conv_eps * pts[i][1]);
      if (denom > 0.0)
        conv_c = std::max(conv_c, std::pow(conv[i] / denom, 1.0 / n));
    }
  }
  rep.conv_c = conv_c;
  rep.pass_convolution = conv_c < 1e6;

  // (v) eventual monotonicity of b along increasing radius
  std::map<double, std::pair<double, double>> by_radius;  // r -> (min b, max b)
  for (const auto& p : pts) {
    double r = len(p);
    double v = b_of(p[0], p[1]);
    auto it = by_radius.find(r);
    if (it == by_radius.end())
      by_radius[r] = {v, v};
    else {
      it->second.first = std::min(it->second.first, v);
      it->second.second = std::max(it->second.second, v);
    }
  }
  std::vector<double> radii;
  std::vector<double> minb, maxb;
  for (const auto& [r, mm] : by_radius) {
    radii.push_back(r);
    minb.push_back(mm.first);
    maxb.push_back(mm.second);
  }
  int nr = int(radii.size());
  std::vector<double> suffix_max(nr + 1, 0.0);
  for (int i = nr - 1; i >= 0; --i) suffix_max[i] = std::max(suffix_max[i + 1], maxb[i]);
  rep.pass_monotone = false;
  for (int i = 0; i < nr; ++i) {
    bool ok = true;
    for (int j = i; j < nr; ++j)
      if (suffix_max[j + 1] > minb[j] * (1.0 + 1e-12)) {
        ok = false;
        break;
      }
    if (ok) {
      rep.m0 = radii[i];
      rep.pass_monotone = true;
      break;
    }
  }
  if (!rep.pass_monotone && rep.witness.empty())
    rep.witness = "b not eventually decreasing on the sampled range";
  return rep;
}

}  // namespace pcm::rw
