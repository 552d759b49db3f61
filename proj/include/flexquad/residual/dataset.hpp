#pragma once

#include <cstdint>
#include <vector>

#include "flexquad/numerics.hpp"

namespace flexquad::residual {

enum class Provenance : uint8_t { kFullModel = 0, kSimpleModel = 1, kFullModelContacts = 2 };

// One recorded sample of a single transmission. u is the drive held over the
// surrounding interval: volts for full-model data, hip torques for
// simple-model data.
struct TrajectoryRecord {
  double t;
  Vec2 q_s;
  Vec2 qdot_s;
  Vec2 qddot_s;
  Vec2 u;
};

struct LegSequence {
  int leg_id = 0;
  bool mirrored = false;  // right-side legs (side-folded kinematics)
  std::vector<TrajectoryRecord> records;
};

// Uniformly sampled per-transmission trajectories with input zero-order hold.
struct TrajectoryDataset {
  static constexpr uint32_t kSchemaVersion = 1;

  Provenance provenance = Provenance::kFullModel;
  uint64_t seed = 0;
  double record_rate = 1000.0;  // Hz
  double hold_rate = 250.0;     // Hz, input refresh
  std::vector<LegSequence> legs;

  std::size_t total_records() const;
  int records_per_hold() const { return static_cast<int>(record_rate / hold_rate); }

  // RMS relative error between recorded accelerations and central differences
  // of the recorded velocities, skipping samples whose difference window
  // straddles an input-hold switch (the acceleration jumps there).
  double acceleration_consistency_error() const;

  // Chronological split: the first (1 - val_fraction) of every leg sequence.
  TrajectoryDataset train_split(double val_fraction) const;
  TrajectoryDataset validation_split(double val_fraction) const;

  void save(const std::string& path) const;
  // Applies the 5% acceleration-consistency gate to free-space datasets
  // (contact data has impulsive accelerations and is exempt).
  static TrajectoryDataset load(const std::string& path);

  // Flat matrices over all legs: [q_s qdot_s u] (n x 6) and qddot (n x 2).
  Mat stack_inputs() const;
  Mat stack_accelerations() const;
};

inline constexpr double kAccelGateRms = 0.05;

}  // namespace flexquad::residual
