#include "flexquad/residual/collect.hpp"

#include "flexquad/robot/transmission.hpp"

namespace flexquad::residual {

using robot::FullWorld;
using robot::kActuatedDof;
using robot::kNumLegs;
using robot::kSubstepDt;
using robot::LumpedVariant;
using robot::LumpedWorld;
using robot::RobotParams;
using robot::WorldOptions;

namespace {

constexpr int kSubstepsPerRecord = 20;  // 1 kHz records at 20 kHz stepping
constexpr int kSubstepsPerHold = 80;    // 250 Hz input hold

struct Recorder {
  TrajectoryDataset dataset;

  explicit Recorder(Provenance prov, uint64_t seed) {
    dataset.provenance = prov;
    dataset.seed = seed;
    dataset.record_rate = 1.0 / (kSubstepsPerRecord * kSubstepDt);
    dataset.hold_rate = 1.0 / (kSubstepsPerHold * kSubstepDt);
    for (int leg = 0; leg < kNumLegs; ++leg) {
      LegSequence s;
      s.leg_id = leg;
      s.mirrored = robot::kLegSide[leg] < 0;
      dataset.legs.push_back(std::move(s));
    }
  }

  void push(double t, const Vec& q_s8, const Vec& qdot_s8, const Vec& qddot_s8, const Vec& u8) {
    for (int leg = 0; leg < kNumLegs; ++leg) {
      TrajectoryRecord r;
      r.t = t;
      r.q_s = q_s8.segment(2 * leg, 2);
      r.qdot_s = qdot_s8.segment(2 * leg, 2);
      r.qddot_s = qddot_s8.segment(2 * leg, 2);
      r.u = u8.segment(2 * leg, 2);
      dataset.legs[leg].records.push_back(std::move(r));
    }
  }
};

Vec sample_inputs(Rng& rng, const Vec2& scale) {
  Vec u(kActuatedDof);
  for (int i = 0; i < kActuatedDof; ++i) {
    const double s = scale[i % 2];
    u[i] = rng.uniform(-s, s);
  }
  return u;
}

}  // namespace

TrajectoryDataset collect_white_noise_full(const RobotParams& params, double duration_s,
                                           uint64_t seed) {
  check<Error>(duration_s > 0.0, "collect: duration must be positive");
  FullWorld world(params, WorldOptions{.contacts = false, .body_fixed = true});
  Rng rng(seed, /*stream=*/1);
  Recorder rec(Provenance::kFullModel, seed);

  const long substeps = std::lround(duration_s / kSubstepDt);
  Vec u = Vec::Zero(kActuatedDof);
  for (long i = 0; i < substeps; ++i) {
    if (i % kSubstepsPerHold == 0) u = sample_inputs(rng, Vec2(1.0, 1.0));
    if (i % kSubstepsPerRecord == 0) {
      // Instantaneous accelerations at the record state under the held input.
      Vec qddot(kActuatedDof);
      for (int leg = 0; leg < kNumLegs; ++leg) {
        const auto acc = full_transmission_dynamics(params, world.legs()[leg],
                                                    u.segment(2 * leg, 2), Vec2::Zero(),
                                                    world.options().baumgarte);
        qddot.segment(2 * leg, 2) = robot::project_accelerations(acc.qddot);
      }
      rec.push(world.time(), world.hip_positions(), world.hip_velocities(), qddot, u);
    }
    world.substep_raw(u);
  }
  return std::move(rec.dataset);
}

TrajectoryDataset collect_white_noise_simple(const RobotParams& params, double duration_s,
                                             uint64_t seed) {
  check<Error>(duration_s > 0.0, "collect: duration must be positive");
  LumpedWorld world(params, WorldOptions{.contacts = false, .body_fixed = true},
                    LumpedVariant::kSimple);
  Rng rng(seed, /*stream=*/2);
  Recorder rec(Provenance::kSimpleModel, seed);

  const long substeps = std::lround(duration_s / kSubstepDt);
  Vec u_s = Vec::Zero(kActuatedDof);
  for (long i = 0; i < substeps; ++i) {
    if (i % kSubstepsPerHold == 0) u_s = sample_inputs(rng, params.pd.torque_limits());
    if (i % kSubstepsPerRecord == 0) {
      Vec qddot(kActuatedDof);
      for (int leg = 0; leg < kNumLegs; ++leg) {
        qddot.segment(2 * leg, 2) =
            robot::simple_hip_dynamics(params.simple, world.hip_q()[leg], world.hip_qdot()[leg],
                                       u_s.segment(2 * leg, 2));
      }
      rec.push(world.time(), world.hip_positions(), world.hip_velocities(), qddot, u_s);
    }
    world.substep_torques(u_s);
  }
  return std::move(rec.dataset);
}

TrajectoryDataset collect_white_noise_contacts(const RobotParams& params, double duration_s,
                                               uint64_t seed) {
  check<Error>(duration_s > 0.0, "collect: duration must be positive");
  FullWorld world(params, WorldOptions{});
  Rng rng(seed, /*stream=*/3);
  Recorder rec(Provenance::kFullModelContacts, seed);

  const long substeps = std::lround(duration_s / kSubstepDt);
  Vec u = Vec::Zero(kActuatedDof);
  Vec prev_qdot = world.hip_velocities();
  for (long i = 0; i < substeps; ++i) {
    if (i % kSubstepsPerHold == 0) u = sample_inputs(rng, Vec2(1.0, 1.0));
    if (i % kSubstepsPerRecord == 0) {
      // Accelerations by backward difference; the Delta-state learner only
      // consumes states and inputs.
      const Vec qdot = world.hip_velocities();
      const Vec qddot = (qdot - prev_qdot) * rec.dataset.record_rate;
      rec.push(world.time(), world.hip_positions(), qdot, qddot, u);
      prev_qdot = qdot;
    }
    world.substep_raw(u);
  }
  return std::move(rec.dataset);
}

}  // namespace flexquad::residual
