#pragma once

#include "flexquad/residual/dataset.hpp"
#include "flexquad/residual/models.hpp"
#include "flexquad/robot/params.hpp"

namespace flexquad::residual {

struct TrainConfig {
  double horizon_s = 8e-3;  // unroll horizon
  int batch = 8;            // windows per gradient step
  int epochs = 40;
  double lr = 1e-3;
  double val_fraction = 0.25;
  // Euler substeps between supervision records; the integrator bias of a full
  // 1 ms step is the same size as the baseline's model error.
  int substeps_per_record = 5;
  uint64_t seed = 0;

  // Steps per unroll window at the dataset's recording rate.
  int horizon_steps(double record_rate) const;
  void validate(double record_rate) const;
};

struct TrainReport {
  std::vector<double> train_loss;  // per epoch
  std::vector<double> val_loss;    // per epoch
  double final_val_metric = 0.0;   // normalized-MSE over variance
};

// Single-step regression (q_s, qdot_s, u_s) -> qddot_s on simple-model data.
// Throws DivergedTraining when validation loss exceeds 10x its initial value
// after half the epochs.
SurrogateModel train_surrogate(const TrajectoryDataset& simple_data, const TrainConfig& cfg,
                               TrainReport* report = nullptr);

// ---------------------------------------------------------------------------
// Multi-step unrolled residual training.

// A batch of unroll windows (rows are windows).
struct WindowBatch {
  Mat init;                    // B x 4: (q_s, qdot_s) at the window start
  std::vector<Mat> u;          // H entries of B x 2 (held drive voltages)
  std::vector<Mat> target_p;   // H entries of B x 2 (positions at steps 1..H)
  std::vector<Mat> target_v;   // H entries
  std::vector<Mat> target_a;   // H entries (accelerations at steps 0..H-1)
  Eigen::Index rows() const { return init.rows(); }
  int steps() const { return static_cast<int>(u.size()); }
};

// Non-overlapping windows of H+1 consecutive records from every leg.
std::vector<WindowBatch> make_windows(const TrajectoryDataset& data, int horizon_steps);
// Gathers a batch of windows by index from single-window batches.
WindowBatch gather(const std::vector<WindowBatch>& windows, const std::vector<std::size_t>& idx);

// Inverse-variance loss weights fitted on a dataset split.
struct UnrollWeights {
  Vec2 pos, vel, acc;
};
UnrollWeights fit_unroll_weights(const TrajectoryDataset& train_data);

struct UnrollResult {
  std::vector<Mat> p;  // H+1 entries of B x 2 (includes the initial state)
  std::vector<Mat> v;
  std::vector<Mat> a;  // H entries
};

// The exact forward pass used in training: semi-implicit Euler through the
// surrogate with the residual network in the loop,
//   u_s = clamp(tau * knet(norm(q, v, u)), +-tau).
// When clamp_states is true, predicted states are clamped to a large finite
// box instead of throwing ExplodingUnroll (evaluation of bad models).
// States/accelerations are reported at the supervision records; integration
// runs at dt / substeps internally.
UnrollResult unroll_forward(const SurrogateModel& surrogate, const nn::Mlp& knet,
                            const nn::Normalizer& k_in, const Vec2& torque_limit,
                            const WindowBatch& batch, double dt, int substeps,
                            bool clamp_states);

// Loss (and gradients w.r.t. the residual network when kgrads is non-null) of
// the unrolled trajectory error. Gradients flow through the Euler chain and
// the frozen surrogate into the residual network only.
double unroll_loss(const SurrogateModel& surrogate, const nn::Mlp& knet,
                   const nn::Normalizer& k_in, const Vec2& torque_limit,
                   const WindowBatch& batch, const UnrollWeights& weights, double dt,
                   int substeps, nn::MlpGrads* kgrads, bool explode_check);

// Trains the residual feedback network with the surrogate frozen.
ResidualModel train_residual(const SurrogateModel& surrogate,
                             const TrajectoryDataset& full_data, const TrainConfig& cfg,
                             const robot::RobotParams& params, TrainReport* report = nullptr);

// Evaluation-facing unroll: start from (q_s, qdot_s), apply a drive-voltage
// sequence, return predicted positions/velocities/accelerations.
UnrollResult unroll_predict(const SurrogateModel& surrogate, const ResidualModel& residual,
                            const Vec2& q_s0, const Vec2& qdot_s0,
                            const std::vector<Vec2>& u_seq, double dt, int substeps = 1);

// End-to-end baseline: same topology, predicts per-step state differences.
EndToEndModel train_end_to_end(const TrajectoryDataset& contact_data, const TrainConfig& cfg,
                               TrainReport* report = nullptr);

}  // namespace flexquad::residual
