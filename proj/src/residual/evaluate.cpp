#include "flexquad/residual/evaluate.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "flexquad/robot/fitting.hpp"
#include "flexquad/robot/simple_hip.hpp"

namespace flexquad::residual {

std::string candidate_name(CandidateKind kind) {
  switch (kind) {
    case CandidateKind::kGroundTruth: return "ground_truth";
    case CandidateKind::kSimpleStaticMap: return "simple_static_map";
    case CandidateKind::kHybridResidual: return "hybrid_residual";
    case CandidateKind::kSurrogateUnroll: return "surrogate_unroll";
    case CandidateKind::kEndToEnd: return "end_to_end";
  }
  throw Error("candidate_name: unknown kind");
}

namespace {

struct Rollout {
  std::vector<Vec2> p, v, a;
};

// One candidate trajectory from a window's initial state under recorded u.
Rollout roll_candidate(CandidateKind kind, const EvalArtifacts& art,
                       const std::vector<TrajectoryRecord>& records, std::size_t start, int steps,
                       double dt, const robot::RobotParams& params, int substeps) {
  Rollout out;
  Vec2 p = records[start].q_s;
  Vec2 v = records[start].qdot_s;
  out.p.push_back(p);
  out.v.push_back(v);

  if (kind == CandidateKind::kSurrogateUnroll) {
    check<MissingArtifact>(art.surrogate && art.residual, "surrogate unroll needs models");
    std::vector<Vec2> u_seq;
    for (int t = 0; t < steps; ++t) u_seq.push_back(records[start + t].u);
    const UnrollResult r = unroll_predict(*art.surrogate, *art.residual, p, v, u_seq, dt, substeps);
    for (int t = 0; t < steps; ++t) {
      out.p.push_back(Vec2(r.p[t + 1].row(0)));
      out.v.push_back(Vec2(r.v[t + 1].row(0)));
      out.a.push_back(Vec2(r.a[t].row(0)));
    }
    return out;
  }

  for (int t = 0; t < steps; ++t) {
    const Vec2& u = records[start + static_cast<std::size_t>(t)].u;
    Vec2 accel;
    if (kind == CandidateKind::kGroundTruth) {
      const auto& r = records[start + static_cast<std::size_t>(t)];
      accel = r.qddot_s;
      const auto& rn = records[start + static_cast<std::size_t>(t) + 1];
      p = rn.q_s;
      v = rn.qdot_s;
    } else if (kind == CandidateKind::kEndToEnd) {
      check<MissingArtifact>(art.end_to_end != nullptr, "end-to-end candidate needs its model");
      const Vec4 d = art.end_to_end->predict_delta(p, v, u);
      accel = Vec2(d[2], d[3]) / dt;
      p += Vec2(d[0], d[1]);
      v += Vec2(d[2], d[3]);
    } else {
      const double delta = dt / substeps;
      accel = Vec2::Zero();
      for (int m = 0; m < substeps; ++m) {
        Vec2 u_s;
        if (kind == CandidateKind::kSimpleStaticMap) {
          u_s = robot::static_map_torque(params, u);
        } else {
          check<MissingArtifact>(art.residual != nullptr, "hybrid candidate needs the residual");
          u_s = art.residual->predict(p, v, u);
        }
        const Vec2 a = robot::simple_hip_dynamics(params.simple, p, v, u_s);
        if (m == 0) accel = a;  // instantaneous acceleration at the record
        v += delta * a;
        p += delta * v;
      }
    }
    p = p.cwiseMax(-1e6).cwiseMin(1e6);
    v = v.cwiseMax(-1e6).cwiseMin(1e6);
    out.p.push_back(p);
    out.v.push_back(v);
    out.a.push_back(accel);
  }
  return out;
}

}  // namespace

MseTable evaluate_model_mse(CandidateKind kind, const EvalArtifacts& artifacts,
                            const TrajectoryDataset& data,
                            const std::vector<double>& horizons_s,
                            const robot::RobotParams& params, int substeps) {
  check<Error>(!horizons_s.empty(), "evaluate_model_mse: no horizons");
  const double dt = 1.0 / data.record_rate;
  int max_steps = 0;
  std::vector<int> horizon_steps;
  for (double h : horizons_s) {
    const int s = static_cast<int>(std::lround(h * data.record_rate));
    check<Error>(s >= 1, "evaluate_model_mse: horizon below the recording period");
    horizon_steps.push_back(s);
    max_steps = std::max(max_steps, s);
  }

  MseTable table;
  table.horizons_s = horizons_s;
  table.pos.assign(horizons_s.size(), 0.0);
  table.vel.assign(horizons_s.size(), 0.0);
  table.acc.assign(horizons_s.size(), 0.0);
  std::size_t windows = 0;

  for (const auto& leg : data.legs) {
    const auto& rec = leg.records;
    const std::size_t len = static_cast<std::size_t>(max_steps) + 1;
    for (std::size_t start = 0; start + len <= rec.size(); start += len) {
      const Rollout roll =
          roll_candidate(kind, artifacts, rec, start, max_steps, dt, params, substeps);
      ++windows;
      for (std::size_t hi = 0; hi < horizon_steps.size(); ++hi) {
        const int s = horizon_steps[hi];
        table.pos[hi] += (roll.p[s] - rec[start + s].q_s).squaredNorm() / 2.0;
        table.vel[hi] += (roll.v[s] - rec[start + s].qdot_s).squaredNorm() / 2.0;
        table.acc[hi] +=
            (roll.a[s - 1] - rec[start + s - 1].qddot_s).squaredNorm() / 2.0;
      }
    }
  }
  check<EmptyDataset>(windows > 0, "evaluate_model_mse: no evaluation windows");
  for (std::size_t hi = 0; hi < horizons_s.size(); ++hi) {
    table.pos[hi] /= static_cast<double>(windows);
    table.vel[hi] /= static_cast<double>(windows);
    table.acc[hi] /= static_cast<double>(windows);
  }
  return table;
}

void write_mse_tables(const std::string& path, const std::map<std::string, MseTable>& tables) {
  std::ofstream out(path);
  if (!out) throw IoError("write_mse_tables: cannot write " + path);
  out << "candidate,horizon_ms,pos_mse,vel_mse,acc_mse\n";
  char line[256];
  for (const auto& [name, t] : tables) {
    for (std::size_t i = 0; i < t.horizons_s.size(); ++i) {
      std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%.17g\n", name.c_str(),
                    t.horizons_s[i] * 1e3, t.pos[i], t.vel[i], t.acc[i]);
      out << line;
    }
  }
}

void write_unroll_trace(const std::string& path, const TrajectoryDataset& data,
                        const EvalArtifacts& artifacts, const robot::RobotParams& params,
                        int window_steps, int substeps) {
  check<Error>(!data.legs.empty() && !data.legs[0].records.empty(),
               "write_unroll_trace: empty dataset");
  const auto& rec = data.legs[0].records;
  const int steps = std::min<int>(window_steps, static_cast<int>(rec.size()) - 1);
  const double dt = 1.0 / data.record_rate;

  std::vector<CandidateKind> kinds = {CandidateKind::kGroundTruth,
                                      CandidateKind::kSimpleStaticMap};
  if (artifacts.residual) kinds.push_back(CandidateKind::kHybridResidual);
  if (artifacts.end_to_end) kinds.push_back(CandidateKind::kEndToEnd);

  std::ofstream out(path);
  if (!out) throw IoError("write_unroll_trace: cannot write " + path);
  out << "candidate,t_ms,lift_pos,swing_pos,lift_vel,swing_vel\n";
  char line[256];
  for (const CandidateKind kind : kinds) {
    const Rollout roll = roll_candidate(kind, artifacts, rec, 0, steps, dt, params, substeps);
    for (int t = 0; t <= steps; ++t) {
      std::snprintf(line, sizeof(line), "%s,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                    candidate_name(kind).c_str(), t * dt * 1e3, roll.p[t][0], roll.p[t][1],
                    roll.v[t][0], roll.v[t][1]);
      out << line;
    }
  }
}

}  // namespace flexquad::residual
