// Times the OpenMP kernels against their serial reference implementations and
// checks that both produce identical bits (the parallel loops are map-only, so
// no floating-point reduction is reordered).

#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>

#include "pcm/calculus.hpp"
#include "pcm/fields.hpp"
#include "pcm/green.hpp"
#include "pcm/images.hpp"
#include "pcm/par.hpp"
#include "pcm/randomwalk.hpp"

using namespace pcm;

namespace {

double time_of(const std::function<void()>& fn, int reps) {
  auto t0 = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double>(t1 - t0).count() / reps;
}

void row(const char* name, double serial, double parallel, bool identical) {
  std::printf("%-28s %10.4f s %10.4f s %8.2fx   %s\n", name, serial, parallel,
              serial / parallel, identical ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  bool quick = argc > 1 && std::strcmp(argv[1], "--quick") == 0;
  int reps = quick ? 1 : 5;
  int m = quick ? 1 : 2;

  std::printf("threads: %d\n", par_threads());
  std::printf("%-28s %12s %12s %9s\n", "kernel", "serial", "openmp", "speedup");

  LatticeGeometry geom = build_lattice(3, m);
  SampledConfigs s = sample_configs(geom, 0.01, 0.3, 1);

  {
    BondVectorField a, b;
    double ts = time_of([&] { a = remainder_field_serial(s.a, s.v); }, reps * 20);
    double tp = time_of([&] { b = remainder_field(s.a, s.v); }, reps * 20);
    bool same = true;
    for (int i = 0; i < geom.num_bonds(); ++i) same = same && a.v[i] == b.v[i];
    row("remainder_field", ts, tp, same);
  }
  {
    BondW a, b;
    double ts = time_of([&] { a = bond_w_field_serial(s.a, s.v); }, reps * 20);
    double tp = time_of([&] { b = bond_w_field(s.a, s.v); }, reps * 20);
    bool same = true;
    for (int i = 0; i < geom.num_bonds(); ++i) same = same && a.w.v[i] == b.w.v[i];
    row("bond_w_field", ts, tp, same);
  }
  {
    OperatorKernel a, b;
    double ts = time_of([&] { a = assemble_green_serial(geom); }, reps);
    double tp = time_of([&] { b = assemble_green(geom); }, reps);
    row("assemble_green", ts, tp, (a.k - b.k).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    int radius = quick ? 12 : 24;
    rw::Window w{2, -radius, radius};
    Eigen::MatrixXd op = rw::window_operator(w, 3);
    rw::RwExpansion e1, e2;
    double ts = time_of([&] { e1 = rw::rw_inverse(w, op, 6, 8, false); }, 1);
    double tp = time_of([&] { e2 = rw::rw_inverse(w, op, 6, 8, true); }, 1);
    row("rw_inverse (local blocks)", ts, tp,
        (e1.inverse - e2.inverse).cwiseAbs().maxCoeff() == 0.0);
  }
  {
    LatticeGeometry g1 = build_lattice(3, 1);
    OperatorKernel gn = assemble_green(g1);
    TruncatedFreeGreen free_g(g1, quick ? 18 : 36);
    ImageDeviation d1, d2;
    double ts = time_of([&] { d1 = fine_image_check(g1, free_g, gn, 400, 9, false); }, reps);
    double tp = time_of([&] { d2 = fine_image_check(g1, free_g, gn, 400, 9, true); }, reps);
    row("fine_image_check sweep", ts, tp, d1.max_deviation == d2.max_deviation);
  }

  std::printf("note: with one hardware thread the two columns coincide.\n");
  return 0;
}
