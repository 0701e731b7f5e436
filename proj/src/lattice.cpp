#include "pcm/lattice.hpp"

#include <algorithm>
#include <set>
#include <string>

namespace pcm {

namespace {

long long ipow(int base, int exp) {
  long long r = 1;
  for (int i = 0; i < exp; ++i) r *= base;
  return r;
}

}  // namespace

LatticeGeometry::LatticeGeometry(int L, int m) : L_(L), m_(m) {
  if (L % 2 == 0) throw InvalidParameter("L must be odd (got L=" + std::to_string(L) + ")");
  if (L < 3) throw InvalidParameter("L must be >= 3 (got L=" + std::to_string(L) + ")");
  if (m < 1) throw InvalidParameter("m must be >= 1 (got m=" + std::to_string(m) + ")");
  long long n1 = ipow(L, m);
  long long n = n1 * L;
  if (n > kMaxSide)
    throw InvalidParameter("size cap exceeded: fine side L^(m+1)=" + std::to_string(n) +
                           " > " + std::to_string(kMaxSide));
  n_ = static_cast<int>(n);
  n1_ = static_cast<int>(n1);

  // Bonds in deterministic order: sites row-major, horizontal before vertical.
  bond_at_.assign(2 * num_sites(), -1);
  site_bonds_.assign(num_sites(), {});
  for (int x1 = 0; x1 < n_; ++x1) {
    for (int x0 = 0; x0 < n_; ++x0) {
      int s = site_id(x0, x1);
      if (x0 + 1 < n_) {
        int b = static_cast<int>(bonds_.size());
        bonds_.push_back({s, site_id(x0 + 1, x1), 0});
        bond_at_[2 * s + 0] = b;
      }
      if (x1 + 1 < n_) {
        int b = static_cast<int>(bonds_.size());
        bonds_.push_back({s, site_id(x0, x1 + 1), 1});
        bond_at_[2 * s + 1] = b;
      }
    }
  }
  for (int b = 0; b < num_bonds(); ++b) {
    site_bonds_[bonds_[b].minus].push_back({b, +1});
    site_bonds_[bonds_[b].plus].push_back({b, -1});
  }

  box_of_site_.resize(num_sites());
  box_sites_.assign(num_coarse(), {});
  for (int s = 0; s < num_sites(); ++s) {
    Coord x = site_coord(s);
    int c = coarse_id((x.x0 / L_) * L_, (x.x1 / L_) * L_);
    box_of_site_[s] = c;
    box_sites_[c].push_back(s);
  }

  for (int y1 = 0; y1 < n1_; ++y1) {
    for (int y0 = 0; y0 < n1_; ++y0) {
      int c = y1 * n1_ + y0;
      if (y0 + 1 < n1_) coarse_bonds_.push_back({c, c + 1, 0});
      if (y1 + 1 < n1_) coarse_bonds_.push_back({c, c + n1_, 1});
    }
  }
}

int LatticeGeometry::site_id(int x0, int x1) const {
  if (!site_in_domain(x0, x1))
    throw OutOfDomain("site (" + std::to_string(x0) + "," + std::to_string(x1) +
                      ") outside the lattice");
  return x1 * n_ + x0;
}

int LatticeGeometry::coarse_id(int y0, int y1) const {
  if (y0 % L_ != 0 || y1 % L_ != 0 || y0 < 0 || y1 < 0 || y0 >= n_ || y1 >= n_)
    throw OutOfDomain("(" + std::to_string(y0) + "," + std::to_string(y1) +
                      ") is not a coarse site");
  return (y1 / L_) * n1_ + (y0 / L_);
}

int LatticeGeometry::box_of(int site) const { return box_of_site_[site]; }

Coord LatticeGeometry::box_of(const Coord& x) const {
  return coarse_coord(box_of_site_[site_id(x.x0, x.x1)]);
}

SpanningTree LatticeGeometry::spanning_tree(int coarse) const {
  if (coarse < 0 || coarse >= num_coarse()) throw OutOfDomain("coarse id out of range");
  Coord y = coarse_coord(coarse);
  SpanningTree tree;
  tree.coarse = coarse;

  // Serpentine traversal: column 0 from the top down, step right along the
  // bottom, column 1 from the bottom up, step right along the top, and so on.
  auto add_step = [&](const Coord& from, const Coord& to) {
    int mu = (to.x0 != from.x0) ? 0 : 1;
    bool forward = (to.x0 > from.x0) || (to.x1 > from.x1);
    const Coord& lo = forward ? from : to;
    int b = bond_at(site_id(lo.x0, lo.x1), mu);
    tree.bonds.push_back({b, forward});
  };

  for (int u = 0; u < L_; ++u) {
    bool down = (u % 2 == 0);
    int x0 = y.x0 + u;
    if (down) {
      for (int v = L_ - 1; v > 0; --v)
        add_step({x0, y.x1 + v}, {x0, y.x1 + v - 1});
      if (u + 1 < L_) add_step({x0, y.x1}, {x0 + 1, y.x1});
    } else {
      for (int v = 0; v + 1 < L_; ++v)
        add_step({x0, y.x1 + v}, {x0, y.x1 + v + 1});
      if (u + 1 < L_) add_step({x0, y.x1 + L_ - 1}, {x0 + 1, y.x1 + L_ - 1});
    }
  }
  return tree;
}

SpanningTree LatticeGeometry::spanning_tree(const Coord& y) const {
  return spanning_tree(coarse_id(y.x0, y.x1));
}

ImageSet LatticeGeometry::image_points(const Coord& z, int radius, ImageLevel level) const {
  if (radius < n_) throw InvalidParameter("image radius must be >= n");
  int step, period;
  if (level == ImageLevel::Fine) {
    (void)site_id(z.x0, z.x1);
    step = 1;
    period = n_;
  } else {
    (void)coarse_id(z.x0, z.x1);
    step = L_;
    period = n_;  // in fine units the coarse period is still 2n
  }

  // Per-axis orbit under t -> -step - t and t -> 2*period - step - t: the
  // translates t + 2kp and the reflected points -step - t + 2kp.
  auto axis_orbit = [&](int t) {
    std::vector<int> out;
    for (int k = -(radius / period) - 2; k <= (radius / period) + 2; ++k) {
      int a = t + 2 * k * period;
      int b = -step - t + 2 * k * period;
      if (std::abs(a - t) <= radius) out.push_back(a);
      if (std::abs(b - t) <= radius) out.push_back(b);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
  };

  ImageSet img;
  img.seed = z;
  img.radius = radius;
  img.level = level;
  for (int a : axis_orbit(z.x0))
    for (int b : axis_orbit(z.x1)) img.points.push_back({a, b});
  return img;
}

LatticeGeometry build_lattice(int L, int m) { return LatticeGeometry(L, m); }

}  // namespace pcm
