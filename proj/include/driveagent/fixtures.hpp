#pragma once

#include "driveagent/scene.hpp"

namespace driveagent::fixtures {

/// Canonical test scene: three objects, two trajectories, symmetric road
/// (shoulders +-6, dividers +-2), one crossing at (0,20), eight MCQ items
/// covering the sub-question catalog.
Scene scene_s0();

/// Variant with an asymmetric road (shoulders -4/+8), a truck, and a nearer
/// crossing behind the ego vehicle.
Scene scene_s1();

/// Fills each QA item's reference trace by replaying the oracle policy.
void attach_reference_traces(Scene& scene);

}  // namespace driveagent::fixtures
