#pragma once

#include "gandens/pushforward.hpp"
#include "gandens/requ_net.hpp"
#include "gandens/rng.hpp"

namespace gandens {

// Randomly perturbed width-6 generators per axis, constrained so that each
// coordinate map fixes 0 and 1 (the net is a bijection of the cube) and
// audited for Lambda-regularity.  Axes are decoupled, so the map is a product
// of monotone scalar bijections.  Throws after too many rejected draws.
RequNet pinned_generator(int d, Rng& rng, double noise, double lambda = 1.5,
                         int max_attempts = 64);

// The same construction returned as a density.
GeneratorDensity pinned_density(int d, Rng& rng, double noise, double lambda = 1.5);

}  // namespace gandens
