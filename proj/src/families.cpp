#include "gandens/families.hpp"

#include <cmath>

#include "gandens/gan.hpp"

namespace gandens {

namespace {

// One perturbed pinned axis written into the given block of the net.
// Units carry shifts near {0, 0, -1/2, -1/2, -1, -1}; after perturbing
// everything, the output weights of units 1 and 3 are re-solved so that
// g(0) = 0 and g(1) = 1 hold exactly.
bool fill_pinned_axis(RequNet& net, int axis, Rng& rng, double noise) {
  const double base_v[6] = {0.0, 0.0, -0.5, -0.5, -1.0, -1.0};
  const double base_u[6] = {-0.75, -0.75, 1.0, 1.0, -0.25, -0.25};
  double a[6], v[6], u[6];
  for (int i = 0; i < 6; ++i) {
    a[i] = 1.0 + rng.uniform(-noise, 0.0);  // one-sided: keeps a in (0, 1]
    v[i] = std::max(-1.0, std::min(0.0, base_v[i] + rng.uniform(-noise, noise)));
    u[i] = base_u[i] + (base_u[i] > 0.5 ? rng.uniform(-noise, 0.0) : rng.uniform(-noise, noise));
  }
  // re-solve the output weights of units 0 (shift near 0) and 4 (shift near -1)
  double r1 = 0.0, r2 = 1.0;
  for (int i = 1; i < 6; ++i) {
    if (i == 4) continue;
    r1 -= u[i] * v[i] * v[i];
    r2 -= u[i] * (a[i] - v[i]) * (a[i] - v[i]);
  }
  double a11 = v[0] * v[0], a12 = v[4] * v[4];
  double a21 = (a[0] - v[0]) * (a[0] - v[0]), a22 = (a[4] - v[4]) * (a[4] - v[4]);
  double det = a11 * a22 - a12 * a21;
  if (std::abs(det) < 0.1) return false;
  u[0] = (r1 * a22 - a12 * r2) / det;
  u[4] = (a11 * r2 - r1 * a21) / det;
  for (int i = 0; i < 6; ++i) {
    if (std::abs(u[i]) > 1.0) return false;
  }
  for (int i = 0; i < 6; ++i) {
    net.weight(0)(6 * axis + i, axis) = a[i];
    net.shift(1)[6 * axis + i] = v[i];
    net.weight(1)(axis, 6 * axis + i) = u[i];
  }
  return true;
}

}  // namespace

RequNet pinned_generator(int d, Rng& rng, double noise, double lambda, int max_attempts) {
  Architecture arch(1, {d, 6 * d, d});
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    RequNet net(arch);
    bool ok = true;
    for (int axis = 0; axis < d && ok; ++axis) ok = fill_pinned_axis(net, axis, rng, noise);
    if (!ok) continue;
    if (!generator_audit_ok(net, lambda, 33)) continue;
    net.validate();
    return net;
  }
  throw std::runtime_error("pinned_generator: no admissible draw, lower the noise");
}

GeneratorDensity pinned_density(int d, Rng& rng, double noise, double lambda) {
  return GeneratorDensity(pinned_generator(d, rng, noise, lambda), lambda);
}

}  // namespace gandens
