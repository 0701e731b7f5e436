#pragma once

#include <array>
#include <utility>
#include <vector>

#include "pcm/errors.hpp"

namespace pcm {

struct Coord {
  int x0 = 0;
  int x1 = 0;
  friend bool operator==(const Coord&, const Coord&) = default;
};

// Oriented bond b = (b_minus, b_plus) with b_plus = b_minus + e_mu. Only the
// positive lattice orientation is stored; reverse traversal is handled by sign
// flags where needed.
struct Bond {
  int minus = -1;  // site id of b_-
  int plus = -1;   // site id of b_+
  int mu = 0;      // direction, 0 or 1
};

// One bond of a serpentine spanning tree, in lattice-canonical orientation.
// `agrees` is true when the tree traverses the bond from b_- to b_+.
struct TreeBond {
  int bond = -1;
  bool agrees = true;
};

struct SpanningTree {
  int coarse = -1;              // box label (coarse site id)
  std::vector<TreeBond> bonds;  // exactly L^2 - 1 of them, in traversal order
};

enum class ImageLevel { Fine, Coarse };

// Orbit of a seed point under the reflection group of the box geometry,
// truncated to |z_j - z|_inf <= radius. Fine level reflects about the
// half-integer axes -0.5 and n-0.5 per direction; coarse level uses the
// conjugated reflections on L*Z^2.
struct ImageSet {
  Coord seed;
  int radius = 0;
  ImageLevel level = ImageLevel::Fine;
  std::vector<Coord> points;
};

// Finite lattice Omega = [0,n)^2 with n = L^(m+1), tiled by L x L boxes whose
// labels form the coarse lattice Omega_1 (L^m boxes per side). Site and bond
// orderings are fixed: sites row-major (id = x1*n + x0), and at each site the
// horizontal bond precedes the vertical one.
class LatticeGeometry {
 public:
  LatticeGeometry(int L, int m);

  int L() const { return L_; }
  int m() const { return m_; }
  int n() const { return n_; }
  int n1() const { return n1_; }

  int num_sites() const { return n_ * n_; }
  int num_coarse() const { return n1_ * n1_; }
  int num_bonds() const { return static_cast<int>(bonds_.size()); }

  int site_id(int x0, int x1) const;
  Coord site_coord(int id) const { return {id % n_, id / n_}; }
  bool site_in_domain(int x0, int x1) const {
    return x0 >= 0 && x0 < n_ && x1 >= 0 && x1 < n_;
  }

  int coarse_id(int y0, int y1) const;  // y given in fine units (multiples of L)
  Coord coarse_coord(int id) const {
    return {(id % n1_) * L_, (id / n1_) * L_};
  }

  const std::vector<Bond>& bonds() const { return bonds_; }
  const std::vector<Bond>& coarse_bonds() const { return coarse_bonds_; }

  // bond id of (site, site+e_mu), or -1 when the bond leaves the lattice
  int bond_at(int site, int mu) const { return bond_at_[2 * site + mu]; }

  // bonds touching a site, as (bond id, sigma) with sigma = +1 when the site
  // is b_-, -1 when it is b_+; this is the sign convention of the adjoint d*.
  const std::vector<std::pair<int, int>>& bonds_of_site(int site) const {
    return site_bonds_[site];
  }

  int box_of(int site) const;                      // coarse id of the box containing the site
  Coord box_of(const Coord& x) const;              // checked variant on coordinates
  const std::vector<int>& box_sites(int coarse) const { return box_sites_[coarse]; }

  SpanningTree spanning_tree(int coarse) const;
  SpanningTree spanning_tree(const Coord& y) const;

  ImageSet image_points(const Coord& z, int radius, ImageLevel level) const;

 private:
  int L_ = 0, m_ = 0, n_ = 0, n1_ = 0;
  std::vector<Bond> bonds_;
  std::vector<Bond> coarse_bonds_;
  std::vector<int> bond_at_;
  std::vector<std::vector<std::pair<int, int>>> site_bonds_;
  std::vector<int> box_of_site_;
  std::vector<std::vector<int>> box_sites_;
};

LatticeGeometry build_lattice(int L, int m);

// Fine sites per side may not exceed this; build_lattice enforces it.
inline constexpr int kMaxSide = 81;

}  // namespace pcm
