#pragma once

#include "thinflow/bump.hpp"

namespace thinflow {

/// Counter-rotating pair above the plate, zero net vorticity. Shared by the
/// tests, the CLI defaults for studies, and the acceptance suite.
inline BumpVorticity<double> reference_bump_pair() {
  return BumpVorticity<double>({{{-0.6, 0.6}, 0.3, 2.0}, {{0.6, 0.6}, 0.3, -2.0}});
}

inline FlowData<double> reference_flow() {
  FlowData<double> flow;
  flow.gamma = 1;
  flow.nu = 0.01;
  flow.omega0 = reference_bump_pair();
  return flow;
}

}  // namespace thinflow
