#pragma once
#include <cstdint>
#include <vector>

#include "dlab/grid.h"

namespace dlab::battery {

// shared deterministic test-state families; all recipes depend only on the
// grid geometry and the seed

// decay-probe battery: 6 bump-ladder members at fixed carriers plus
// band-limited random spread states (count total)
std::vector<WaveFunction> decay_battery(const GridPtr& g, int count, std::uint64_t seed);

// origin-localized, frequency-floored members for the time-integrated
// weighted-decay probe
std::vector<WaveFunction> microlocal_battery(const GridPtr& g, int count, std::uint64_t seed);

// generic normalized states with randomized band and envelope, kept away
// from the box edge
std::vector<WaveFunction> contraction_battery(const GridPtr& g, int count, std::uint64_t seed);

// latest probe time before box artifacts can reach the measurement region.
// Periodic (cartesian) boxes wrap the far field into the opposite sector
// where it counts as outgoing again; Dirichlet (radial) walls reflect it
// into incoming waves that the outgoing projection rejects, which buys a
// longer usable horizon.
double safe_horizon(const Grid& g);

} // namespace dlab::battery
