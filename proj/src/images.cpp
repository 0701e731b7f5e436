#include "pcm/images.hpp"

#include <algorithm>
#include <functional>
#include <cmath>
#include <string>

#include "pcm/par.hpp"
#include "pcm/rng.hpp"

namespace pcm {

namespace {

// per-axis reflection fold: given the seed coordinate t, the image coordinate
// tp, and any other coordinate s, return the preimage of s under the group
// element mapping t to tp. step = 1 on the fine lattice, L on the coarse one.
int fold_axis(int t, int tp, int s, int period, int step) {
  int diff = tp - t;
  if (diff % (2 * period) == 0) {
    return s - diff;  // translation by 2kn
  }
  // reflection t -> -step - t + 2kn
  int num = tp + step + t;
  int k = num / (2 * period);  // exact by construction of the orbit
  return -step - s + 2 * k * period;
}

}  // namespace

TruncatedFreeGreen::TruncatedFreeGreen(const LatticeGeometry& geom, int radius,
                                       double stability_tol)
    : geom_(&geom), L_(geom.L()), n_(geom.n()), radius_(radius) {
  if (radius < 4 * L_)
    throw InvalidParameter("free-kernel window radius must be >= 4L");
  int margin = ((radius + n_ + 2 * L_ + L_ - 1) / L_) * L_;
  build(-margin, n_ - 1 + margin);

  // stability probe: compare central entries against a half-size window
  int half = radius / 2;
  if (stability_tol > 0.0 && half >= 4 * L_) {
    TruncatedFreeGreen smaller(geom, half, -1.0);  // negative tol: no probe
    Coord z{n_ / 2, n_ / 2};
    double delta = 0.0;
    for (int d : {0, 1, 2, L_}) {
      Coord x{z.x0 + d, z.x1};
      delta = std::max(delta, std::abs(value(x, z) - smaller.value(x, z)));
    }
    stability_delta_ = delta;
    if (stability_delta_ > stability_tol)
      throw WindowTooSmall("free-kernel probe moved by " + std::to_string(stability_delta_) +
                           " under window halving; enlarge the radius");
  }
}

void TruncatedFreeGreen::build(int lo, int hi) {
  lo_ = lo;
  hi_ = hi;
  n1w_ = window_side() / L_;
  int ns = window_sites();

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ns) * 14);
  auto add = [&](int r, int c, double v) { trip.emplace_back(r, c, v); };
  for (int id = 0; id < ns; ++id) {
    Coord p = window_coord(id);
    if (p.x0 + 1 <= hi_) {
      int q = window_id({p.x0 + 1, p.x1});
      add(id, id, 1.0);
      add(q, q, 1.0);
      add(id, q, -1.0);
      add(q, id, -1.0);
    }
    if (p.x1 + 1 <= hi_) {
      int q = window_id({p.x0, p.x1 + 1});
      add(id, id, 1.0);
      add(q, q, 1.0);
      add(id, q, -1.0);
      add(q, id, -1.0);
    }
  }
  double w = 1.0 / (L_ * L_);
  for (int by = 0; by < n1w_; ++by) {
    for (int bx = 0; bx < n1w_; ++bx) {
      std::vector<int> sites;
      sites.reserve(L_ * L_);
      for (int dy = 0; dy < L_; ++dy)
        for (int dx = 0; dx < L_; ++dx)
          sites.push_back(window_id({lo_ + bx * L_ + dx, lo_ + by * L_ + dy}));
      for (int s : sites)
        for (int t : sites) add(s, t, w);
    }
  }
  op_.resize(ns, ns);
  op_.setFromTriplets(trip.begin(), trip.end());
  solver_ = std::make_unique<Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>>>();
  solver_->compute(op_);
  if (solver_->info() != Eigen::Success)
    throw SingularOperator("sparse factorization of the window operator failed");
}

int TruncatedFreeGreen::coarse_window_id(const Coord& p) const {
  return ((p.x1 - lo_) / L_) * n1w_ + (p.x0 - lo_) / L_;
}

Coord TruncatedFreeGreen::coarse_window_coord(int id) const {
  return {lo_ + (id % n1w_) * L_, lo_ + (id / n1w_) * L_};
}

double TruncatedFreeGreen::value(const Coord& x, const Coord& z) const {
  if (!contains(x) || !contains(z))
    throw OutOfDomain("free-kernel entry outside the window");
  int zid = window_id(z);
  auto it = fine_columns_.find(zid);
  if (it == fine_columns_.end()) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(window_sites());
    e(zid) = 1.0;
    it = fine_columns_.emplace(zid, solver_->solve(e)).first;
  }
  return it->second(window_id(x));
}

double TruncatedFreeGreen::coarse_value(const Coord& y, const Coord& z) const {
  if (!contains_coarse(y) || !contains_coarse(z))
    throw OutOfDomain("coarse free-kernel entry outside the window");
  int zid = coarse_window_id(z);
  auto it = coarse_fwd_columns_.find(zid);
  if (it == coarse_fwd_columns_.end()) {
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(window_sites());
    for (int dy = 0; dy < L_; ++dy)
      for (int dx = 0; dx < L_; ++dx) rhs(window_id({z.x0 + dx, z.x1 + dy})) = 1.0;
    Eigen::VectorXd col = solver_->solve(rhs);
    Eigen::VectorXd coarse(coarse_window_sites());
    double w = 1.0 / (L_ * L_);
    for (int c = 0; c < coarse_window_sites(); ++c) {
      Coord yc = coarse_window_coord(c);
      double s = 0.0;
      for (int dy = 0; dy < L_; ++dy)
        for (int dx = 0; dx < L_; ++dx) s += col(window_id({yc.x0 + dx, yc.x1 + dy}));
      coarse(c) = w * s;
    }
    it = coarse_fwd_columns_.emplace(zid, std::move(coarse)).first;
  }
  return it->second(coarse_window_id(y));
}

Eigen::VectorXd TruncatedFreeGreen::solve_coarse_inverse_column(const Coord& z) const {
  // conjugate gradients on N = Q G Q* (SPD); each application costs one
  // sparse backsolve with the cached factorization
  int nc = coarse_window_sites();
  double w = 1.0 / (L_ * L_);
  auto apply_n = [&](const Eigen::VectorXd& v) {
    Eigen::VectorXd fine = Eigen::VectorXd::Zero(window_sites());
    for (int c = 0; c < nc; ++c) {
      if (v(c) == 0.0) continue;
      Coord yc = coarse_window_coord(c);
      for (int dy = 0; dy < L_; ++dy)
        for (int dx = 0; dx < L_; ++dx) fine(window_id({yc.x0 + dx, yc.x1 + dy})) += v(c);
    }
    Eigen::VectorXd sol = solver_->solve(fine);
    Eigen::VectorXd out(nc);
    for (int c = 0; c < nc; ++c) {
      Coord yc = coarse_window_coord(c);
      double s = 0.0;
      for (int dy = 0; dy < L_; ++dy)
        for (int dx = 0; dx < L_; ++dx) s += sol(window_id({yc.x0 + dx, yc.x1 + dy}));
      out(c) = w * s;
    }
    return out;
  };

  Eigen::VectorXd b = Eigen::VectorXd::Zero(nc);
  b(coarse_window_id(z)) = 1.0;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(nc);
  Eigen::VectorXd r = b;
  Eigen::VectorXd p = r;
  double rs = r.squaredNorm();
  for (int it = 0; it < 500 && std::sqrt(rs) > 1e-13; ++it) {
    Eigen::VectorXd ap = apply_n(p);
    double alpha = rs / p.dot(ap);
    x += alpha * p;
    r -= alpha * ap;
    double rs_new = r.squaredNorm();
    p = r + (rs_new / rs) * p;
    rs = rs_new;
  }
  return x;
}

double TruncatedFreeGreen::coarse_inverse_value(const Coord& y, const Coord& z) const {
  if (!contains_coarse(y) || !contains_coarse(z))
    throw OutOfDomain("coarse inverse entry outside the window");
  int zid = coarse_window_id(z);
  auto it = coarse_inv_columns_.find(zid);
  if (it == coarse_inv_columns_.end())
    it = coarse_inv_columns_.emplace(zid, solve_coarse_inverse_column(z)).first;
  return it->second(coarse_window_id(y));
}

Eigen::VectorXd TruncatedFreeGreen::apply_operator(const Eigen::VectorXd& f) const {
  return op_ * f;
}

Eigen::VectorXd TruncatedFreeGreen::solve(const Eigen::VectorXd& f) const {
  return solver_->solve(f);
}

Eigen::VectorXd TruncatedFreeGreen::symmetrize(const Eigen::VectorXd& raw) const {
  Eigen::VectorXd out(window_sites());
  auto axis_orbit = [&](int t) {
    std::vector<int> pts;
    for (int k = -(hi_ - lo_) / (2 * n_) - 1; k <= (hi_ - lo_) / (2 * n_) + 1; ++k) {
      int a = t + 2 * k * n_;
      int b = -1 - t + 2 * k * n_;
      if (a >= lo_ && a <= hi_) pts.push_back(a);
      if (b >= lo_ && b <= hi_) pts.push_back(b);
    }
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    return pts;
  };
  for (int id = 0; id < window_sites(); ++id) {
    Coord p = window_coord(id);
    double sum = 0.0;
    int count = 0;
    for (int a : axis_orbit(p.x0))
      for (int b : axis_orbit(p.x1)) {
        sum += raw(window_id({a, b}));
        ++count;
      }
    out(id) = sum / count;
  }
  return out;
}

TruncatedFreeGreen truncated_free_green(const LatticeGeometry& geom, int radius) {
  return TruncatedFreeGreen(geom, radius);
}

namespace {

// least-squares slope for the rate, upper-envelope intercept for the
// prefactor: the tail is dominated by the slowest lattice direction, so the
// returned C majorizes every sampled entry at the fitted rate
DecayFit fit_columns(const std::map<int, Eigen::VectorXd>& columns,
                     const std::function<Coord(int)>& coord_of, double min_dist,
                     double floor) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  double rmax = 0.0;
  for (const auto& [zid, col] : columns) {
    Coord z = coord_of(zid);
    for (int i = 0; i < col.size(); ++i) {
      double v = std::abs(col(i));
      if (v < floor) continue;
      Coord x = coord_of(i);
      double r = std::hypot(double(x.x0 - z.x0), double(x.x1 - z.x1));
      if (r < min_dist) continue;
      double lg = std::log(v);
      sx += r;
      sy += lg;
      sxx += r * r;
      sxy += r * lg;
      ++n;
      rmax = std::max(rmax, r);
    }
  }
  if (n < 2) throw DegenerateFit("not enough cached free-kernel data to fit");
  double denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-30) throw DegenerateFit("degenerate distances in the fit");
  double slope = (n * sxy - sx * sy) / denom;
  DecayFit fit;
  fit.C1 = -slope;
  fit.points = n;
  fit.max_distance = rmax;
  double env = 0.0;
  for (const auto& [zid, col] : columns) {
    Coord z = coord_of(zid);
    for (int i = 0; i < col.size(); ++i) {
      double v = std::abs(col(i));
      if (v < floor) continue;
      Coord x = coord_of(i);
      double r = std::hypot(double(x.x0 - z.x0), double(x.x1 - z.x1));
      if (r < min_dist) continue;
      env = std::max(env, v * std::exp(fit.C1 * r));
    }
  }
  fit.C = env;
  return fit;
}

}  // namespace

DecayFit TruncatedFreeGreen::fine_decay_fit() const {
  if (fine_columns_.empty()) value({0, 0}, {n_ / 2, n_ / 2});
  return fit_columns(fine_columns_, [this](int id) { return window_coord(id); }, 1.0,
                     1e-13);
}

DecayFit TruncatedFreeGreen::coarse_inverse_decay_fit() const {
  if (coarse_inv_columns_.empty()) coarse_inverse_value({0, 0}, {0, 0});
  return fit_columns(coarse_inv_columns_,
                     [this](int id) { return coarse_window_coord(id); }, double(L_),
                     1e-12);
}

namespace {

void record_offender(ImageDeviation& dev, const Coord& x, const Coord& z, double d,
                     double neumann, double sum) {
  dev.worst.push_back({x, z, d, neumann, sum});
  std::sort(dev.worst.begin(), dev.worst.end(),
            [](const auto& a, const auto& b) { return a.deviation > b.deviation; });
  if (dev.worst.size() > 5) dev.worst.resize(5);
}

}  // namespace

ImageDeviation fine_image_check(const LatticeGeometry& geom, const TruncatedFreeGreen& free_g,
                                const OperatorKernel& g_neumann, int samples,
                                std::uint64_t seed, bool parallel, int image_radius) {
  int ns = geom.num_sites();
  std::vector<std::pair<int, int>> pairs;
  if (samples <= 0) {
    pairs.reserve(static_cast<std::size_t>(ns) * ns);
    for (int x = 0; x < ns; ++x)
      for (int z = 0; z < ns; ++z) pairs.push_back({x, z});
  } else {
    Rng rng(seed);
    for (int i = 0; i < samples; ++i)
      pairs.push_back({int(rng.raw() % ns), int(rng.raw() % ns)});
  }

  // warm the column cache serially; the sweep below only reads it
  std::vector<bool> seen(ns, false);
  for (auto& [x, z] : pairs) {
    if (!seen[z]) {
      free_g.value({0, 0}, geom.site_coord(z));
      seen[z] = true;
    }
  }

  int radius = image_radius > 0 ? std::min(image_radius, free_g.radius()) : free_g.radius();
  std::vector<double> devs(pairs.size());
  std::vector<double> sums(pairs.size());
  par_for(std::int64_t(pairs.size()), [&](std::int64_t i) {
    Coord x = geom.site_coord(pairs[i].first);
    Coord z = geom.site_coord(pairs[i].second);
    ImageSet img = geom.image_points(z, radius, ImageLevel::Fine);
    double sum = 0.0;
    for (const Coord& zj : img.points) {
      Coord xf{fold_axis(z.x0, zj.x0, x.x0, geom.n(), 1),
               fold_axis(z.x1, zj.x1, x.x1, geom.n(), 1)};
      sum += free_g.value(xf, z);
    }
    sums[i] = sum;
    devs[i] = std::abs(g_neumann.k(pairs[i].first, pairs[i].second) - sum);
  }, parallel);

  ImageDeviation out;
  out.samples = int(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.max_deviation = std::max(out.max_deviation, devs[i]);
    if (devs[i] >= out.max_deviation * 0.999)
      record_offender(out, geom.site_coord(pairs[i].first), geom.site_coord(pairs[i].second),
                      devs[i], g_neumann.k(pairs[i].first, pairs[i].second), sums[i]);
  }
  return out;
}

ImageDeviation coarse_image_check(const LatticeGeometry& geom,
                                  const TruncatedFreeGreen& free_g,
                                  const OperatorKernel& qgq_inv_neumann, int samples,
                                  std::uint64_t seed, bool parallel, int image_radius) {
  int nc = geom.num_coarse();
  std::vector<std::pair<int, int>> pairs;
  if (samples <= 0) {
    for (int y = 0; y < nc; ++y)
      for (int z = 0; z < nc; ++z) pairs.push_back({y, z});
  } else {
    Rng rng(seed);
    for (int i = 0; i < samples; ++i)
      pairs.push_back({int(rng.raw() % nc), int(rng.raw() % nc)});
  }

  std::vector<bool> seen(nc, false);
  for (auto& [y, z] : pairs) {
    if (!seen[z]) {
      Coord zc = geom.coarse_coord(z);
      free_g.coarse_inverse_value(zc, zc);
      seen[z] = true;
    }
  }

  int radius = image_radius > 0 ? std::min(image_radius, free_g.radius()) : free_g.radius();
  int L = geom.L();
  std::vector<double> devs(pairs.size());
  std::vector<double> sums(pairs.size());
  par_for(std::int64_t(pairs.size()), [&](std::int64_t i) {
    Coord y = geom.coarse_coord(pairs[i].first);
    Coord z = geom.coarse_coord(pairs[i].second);
    ImageSet img = geom.image_points(z, radius, ImageLevel::Coarse);
    double sum = 0.0;
    for (const Coord& zj : img.points) {
      Coord yf{fold_axis(z.x0, zj.x0, y.x0, geom.n(), L),
               fold_axis(z.x1, zj.x1, y.x1, geom.n(), L)};
      sum += free_g.coarse_inverse_value(yf, z);
    }
    sums[i] = sum;
    devs[i] = std::abs(qgq_inv_neumann.k(pairs[i].first, pairs[i].second) - sum);
  }, parallel);

  ImageDeviation out;
  out.samples = int(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    out.max_deviation = std::max(out.max_deviation, devs[i]);
    if (devs[i] >= out.max_deviation * 0.999)
      record_offender(out, geom.coarse_coord(pairs[i].first),
                      geom.coarse_coord(pairs[i].second), devs[i],
                      qgq_inv_neumann.k(pairs[i].first, pairs[i].second), sums[i]);
  }
  return out;
}

SubspaceReport neumann_subspace_check(const TruncatedFreeGreen& free_g,
                                      const OperatorKernel& g_neumann,
                                      const Eigen::VectorXd& f, int powers, double tol) {
  const LatticeGeometry& geom = free_g.geom();
  int n = geom.n();
  SubspaceReport rep;

  double scale = f.cwiseAbs().maxCoeff() + 1e-30;
  auto fval = [&](int x0, int x1) { return f(free_g.window_id({x0, x1})); };
  for (int t = 0; t < n && rep.violation.empty(); ++t) {
    if (std::abs(fval(0, t) - fval(-1, t)) > 1e-10 * scale)
      rep.violation = "d0* f != 0 on the left face at (0," + std::to_string(t) + ")";
    else if (std::abs(fval(n - 1, t) - fval(n, t)) > 1e-10 * scale)
      rep.violation = "d0 f != 0 on the right face at (" + std::to_string(n - 1) + "," +
                      std::to_string(t) + ")";
    else if (std::abs(fval(t, 0) - fval(t, -1)) > 1e-10 * scale)
      rep.violation = "d1* f != 0 on the bottom face at (" + std::to_string(t) + ",0)";
    else if (std::abs(fval(t, n - 1) - fval(t, n)) > 1e-10 * scale)
      rep.violation = "d1 f != 0 on the top face at (" + std::to_string(t) + "," +
                      std::to_string(n - 1) + ")";
  }
  rep.member = rep.violation.empty();
  if (!rep.member) return rep;

  Eigen::MatrixXd m_omega = green_operator_matrix(geom);
  Eigen::VectorXd restricted(geom.num_sites());
  for (int s = 0; s < geom.num_sites(); ++s)
    restricted(s) = f(free_g.window_id(geom.site_coord(s)));

  Eigen::VectorXd win = f;
  Eigen::VectorXd omega = restricted;
  for (int l = 1; l <= powers; ++l) {
    win = free_g.apply_operator(win);
    omega = m_omega * omega;
    double dev = 0.0;
    for (int s = 0; s < geom.num_sites(); ++s)
      dev = std::max(dev, std::abs(omega(s) - win(free_g.window_id(geom.site_coord(s)))));
    rep.power_deviation.push_back(dev);
  }

  Eigen::VectorXd inv_win = free_g.solve(f);
  Eigen::VectorXd inv_omega = g_neumann.k * restricted;
  double dev = 0.0;
  for (int s = 0; s < geom.num_sites(); ++s)
    dev = std::max(dev,
                   std::abs(inv_omega(s) - inv_win(free_g.window_id(geom.site_coord(s)))));
  rep.inverse_deviation = dev;

  rep.pass = rep.member && rep.inverse_deviation <= tol;
  for (double d : rep.power_deviation) rep.pass = rep.pass && d <= tol;
  return rep;
}

}  // namespace pcm
