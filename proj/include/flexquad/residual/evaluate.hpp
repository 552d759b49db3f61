#pragma once

#include <map>

#include "flexquad/residual/training.hpp"

namespace flexquad::residual {

enum class CandidateKind {
  kGroundTruth,      // replays the recorded data (MSE identically zero)
  kSimpleStaticMap,  // real f_s driven by the rest-configuration voltage map
  kHybridResidual,   // real f_s driven by the learned residual map
  kSurrogateUnroll,  // training-internal path: surrogate f-hat + residual
  kEndToEnd,         // Delta-state proxy stepped recursively
};

std::string candidate_name(CandidateKind kind);

struct EvalArtifacts {
  const SurrogateModel* surrogate = nullptr;
  const ResidualModel* residual = nullptr;
  const EndToEndModel* end_to_end = nullptr;
};

// Per-horizon mean squared error in position, velocity, acceleration.
struct MseTable {
  std::vector<double> horizons_s;
  std::vector<double> pos, vel, acc;
};

// Unrolls the candidate from the start of every non-overlapping validation
// window under the recorded drive voltages and reports per-horizon MSE.
// substeps: Euler substeps per record for the f_s-based candidates (matches
// the training discretization so the comparison is about model quality).
MseTable evaluate_model_mse(CandidateKind kind, const EvalArtifacts& artifacts,
                            const TrajectoryDataset& validation_data,
                            const std::vector<double>& horizons_s,
                            const robot::RobotParams& params, int substeps = 5);

// Fixed-header tabular text (plot-ready CSV).
void write_mse_tables(const std::string& path,
                      const std::map<std::string, MseTable>& tables);

// Time traces of one validation window for every candidate (plot artifact).
void write_unroll_trace(const std::string& path, const TrajectoryDataset& validation_data,
                        const EvalArtifacts& artifacts, const robot::RobotParams& params,
                        int window_steps, int substeps = 5);

}  // namespace flexquad::residual
