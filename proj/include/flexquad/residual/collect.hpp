#pragma once

#include "flexquad/residual/dataset.hpp"
#include "flexquad/robot/world.hpp"

namespace flexquad::residual {

// Passive system-identification data: i.i.d. uniform inputs held at 250 Hz,
// states recorded at 1 kHz, body clamped, contacts off. Full-model runs drive
// voltages in [-1, 1]; simple-model runs drive torques in +-torque_limit.
// Recorded accelerations are evaluated at the record instant with the
// currently held input.
TrajectoryDataset collect_white_noise_full(const robot::RobotParams& params, double duration_s,
                                           uint64_t seed);
TrajectoryDataset collect_white_noise_simple(const robot::RobotParams& params, double duration_s,
                                             uint64_t seed);

// End-to-end baseline data: the full model walking free on flat ground with
// contacts, white-noise voltages. Accelerations are not physically meaningful
// at impacts; the Delta-state learner does not use them.
TrajectoryDataset collect_white_noise_contacts(const robot::RobotParams& params,
                                               double duration_s, uint64_t seed);

}  // namespace flexquad::residual
