// Timing comparison of the OpenMP kernels against the serial reference
// implementations, plus a consistency check on each pair. Build target only;
// not part of the ctest suite.

#include <cmath>
#include <cstdio>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "coingrade/ann.hpp"
#include "coingrade/features.hpp"
#include "coingrade/imaging.hpp"
#include "coingrade/parallel.hpp"
#include "coingrade/reference.hpp"
#include "coingrade/rng.hpp"

using namespace coingrade;

namespace {

template <typename F>
double time_best_of(int reps, F&& fn) {
  double best = 1e30;
  for (int r = 0; r < reps; ++r) {
    double t0 = wall_time();
    fn();
    double t1 = wall_time();
    best = std::min(best, t1 - t0);
  }
  return best;
}

double max_abs_diff(const RasterF& a, const RasterF& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::fabs(a.data[i] - b.data[i]));
  return worst;
}

void report(const char* name, double serial_s, double parallel_s, double diff) {
  std::printf("%-28s serial %9.2f ms   parallel %9.2f ms   speedup %5.2fx   max|diff| %.3g\n",
              name, serial_s * 1000.0, parallel_s * 1000.0,
              parallel_s > 0 ? serial_s / parallel_s : 0.0, diff);
}

}  // namespace

int main() {
  const int size = 1024;
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled; parallel kernels run serially\n");
#endif

  Rng rng(7);
  RasterF gray(size, size);
  for (double& v : gray.data) v = rng.uniform();
  Mask full(size, size, 1);

  PreprocessConfig cfg;

  RasterF blur_ref, blur_opt;
  double t_blur_ref = time_best_of(2, [&] { blur_ref = reference::gaussian_blur(gray, cfg); });
  double t_blur_opt = time_best_of(5, [&] { blur_opt = gaussian_blur(gray, cfg); });
  report("gaussian_blur", t_blur_ref, t_blur_opt, max_abs_diff(blur_ref, blur_opt));

  GradientField sob_ref, sob_opt;
  double t_sob_ref = time_best_of(3, [&] { sob_ref = reference::sobel(gray, full); });
  double t_sob_opt = time_best_of(5, [&] { sob_opt = sobel(gray, full); });
  report("sobel", t_sob_ref, t_sob_opt, max_abs_diff(sob_ref.g, sob_opt.g));

  // Disk mask for the wedge statistics and the opening.
  Mask disk(size, size, 0);
  const double c = size / 2.0, R = 0.45 * size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      if ((x - c) * (x - c) + (y - c) * (y - c) <= R * R) disk.at(x, y) = 1;

  Mask open_ref, open_opt;
  double t_open_ref = time_best_of(1, [&] { open_ref = reference::morphological_open(disk, 5); });
  double t_open_opt = time_best_of(3, [&] { open_opt = morphological_open(disk, 5); });
  std::size_t open_diff = 0;
  for (std::size_t i = 0; i < open_ref.data.size(); ++i)
    open_diff += open_ref.data[i] != open_opt.data[i];
  report("morphological_open", t_open_ref, t_open_opt, double(open_diff));

  GradientField field = sobel(gray, disk);
  WedgeSpec spec{8, c, c, R, 0.0};
  std::vector<Mask> wedges = wedge_masks(spec, disk);
  std::vector<double> ws_ref;
  WedgeStatsResult ws_opt;
  double t_ws_ref = time_best_of(2, [&] { ws_ref = reference::wedge_stats(field, wedges); });
  double t_ws_opt = time_best_of(5, [&] { ws_opt = wedge_gradient_stats(field, wedges); });
  double ws_diff = 0.0;
  for (int i = 0; i < 96; ++i)
    ws_diff = std::max(ws_diff, std::fabs(ws_ref[i] - ws_opt.values[i]));
  report("wedge_gradient_stats", t_ws_ref, t_ws_opt, ws_diff);

  // Batch forward/backward of the production-sized net.
  Dataset data;
  Rng drng(11);
  for (int i = 0; i < 256; ++i) {
    Sample s;
    s.x.resize(kFeatureDim);
    for (double& v : s.x) v = drng.normal();
    s.label = 50 + (i % 13);
    data.push_back(std::move(s));
  }
  TrainConfig tc;
  tc.epochs = 3;
  tc.seed = 5;
  double t_train = time_best_of(1, [&] { train(data, tc); });
  std::printf("%-28s 3 epochs x 256 rows: %9.2f ms\n", "ann train (parallel)", t_train * 1000.0);

  return 0;
}
