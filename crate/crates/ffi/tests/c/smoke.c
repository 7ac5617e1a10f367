#include <math.h>
#include <stdio.h>
#include "clfstab.h"

#define CHECK(call)                                                        \
  do {                                                                     \
    ClfstabStatus st_ = (call);                                            \
    if (st_ != CLFSTAB_STATUS_OK) {                                        \
      fprintf(stderr, "%s -> %d: %s\n", #call, (int)st_, clfstab_last_error()); \
      return 1;                                                            \
    }                                                                      \
  } while (0)

int main(void) {
  ClfstabSystem *sys = NULL;
  CHECK(clfstab_system_from_catalog("cubic-damped", &sys));
  double x = 2.0, u = 3.0, f = 0.0, w0 = 0.0, w = 0.0;
  CHECK(clfstab_eval_dynamics(sys, &x, 1, &u, 1, &f, 1));
  CHECK(clfstab_control_to_extended(sys, &u, 1, &w0, &w, 1));
  clfstab_system_free(sys);
  if (f != -22.0 || w0 != 0.25 || w != 0.75) {
    fprintf(stderr, "unexpected values %g %g %g\n", f, w0, w);
    return 1;
  }

  const char *cfg =
      "{\"system\": \"cubic-damped\", \"feedback\": {\"u\": [\"2/x1^2\"]},"
      " \"partition\": {\"delta\": \"ln(phi)\", \"horizon\": 10}, \"simulate\": {\"z\": [1.0]}}";
  ClfstabTrajectory *traj = NULL;
  CHECK(clfstab_simulate(cfg, &traj));
  size_t len = 0, dim = 0;
  CHECK(clfstab_trajectory_shape(traj, &len, &dim));
  double d[64];
  if (len > 64) return 1;
  CHECK(clfstab_trajectory_distances(traj, d, len));
  clfstab_trajectory_free(traj);
  /* node ratio 1/sqrt(phi) on every full step */
  double ratio = d[1] / d[0];
  if (fabs(ratio - 1.0 / sqrt((1.0 + sqrt(5.0)) / 2.0)) > 1e-7) {
    fprintf(stderr, "ratio %.9f\n", ratio);
    return 1;
  }

  if (clfstab_system_from_catalog("nope", &sys) != CLFSTAB_STATUS_CONFIG) return 1;
  printf("ok %zu samples, ratio %.6f\n", len, ratio);
  return 0;
}
