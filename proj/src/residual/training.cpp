#include "flexquad/residual/training.hpp"

#include <numeric>

namespace flexquad::residual {

using nn::ForwardCache;
using nn::Mlp;
using nn::MlpGrads;
using nn::Normalizer;

int TrainConfig::horizon_steps(double record_rate) const {
  return static_cast<int>(std::lround(horizon_s * record_rate));
}

void TrainConfig::validate(double record_rate) const {
  const double period = 1.0 / record_rate;
  const double ratio = horizon_s / period;
  check<Error>(horizon_s > 0 && std::abs(ratio - std::lround(ratio)) < 1e-9,
               "TrainConfig: horizon must be a positive multiple of the recording period");
  check<Error>(val_fraction > 0.0 && val_fraction <= 0.5,
               "TrainConfig: validation fraction must be in (0, 0.5]");
  check<Error>(batch > 0 && epochs > 0 && lr > 0, "TrainConfig: invalid optimizer settings");
}

namespace {

std::vector<std::size_t> shuffled_indices(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = n; i > 1; --i) {
    std::swap(idx[i - 1], idx[rng.uniform_index(i)]);
  }
  return idx;
}

}  // namespace

// ---------------------------------------------------------------------------

SurrogateModel train_surrogate(const TrajectoryDataset& simple_data, const TrainConfig& cfg,
                               TrainReport* report) {
  check<Error>(simple_data.provenance == Provenance::kSimpleModel,
               "train_surrogate: dataset provenance must be simple-model");
  cfg.validate(simple_data.record_rate);

  const TrajectoryDataset train = simple_data.train_split(cfg.val_fraction);
  const TrajectoryDataset val = simple_data.validation_split(cfg.val_fraction);
  if (train.total_records() < 2) throw EmptyDataset("train_surrogate: no training data");

  SurrogateModel model;
  model.in_norm = nn::normalizer_fit(train.stack_inputs());
  model.out_norm = nn::normalizer_fit(train.stack_accelerations());

  Rng rng(cfg.seed, /*stream=*/10);
  model.net = nn::make_mlp({6, 100, 100, 2}, rng);

  const Mat Xtr = model.in_norm.apply_rows(train.stack_inputs());
  const Mat Ytr = model.out_norm.apply_rows(train.stack_accelerations());
  const Mat Xva = model.in_norm.apply_rows(val.stack_inputs());
  const Mat Yva = model.out_norm.apply_rows(val.stack_accelerations());

  nn::AdamState adam;
  adam.init_like(model.net);
  adam.alpha = cfg.lr;
  MlpGrads grads;
  grads.init_like(model.net);

  const int batch = 128;
  const auto val_mse = [&]() {
    const Mat pred = nn::mlp_forward(model.net, Xva);
    return (pred - Yva).squaredNorm() / static_cast<double>(Yva.size());
  };

  double initial_val = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto idx = shuffled_indices(static_cast<std::size_t>(Xtr.rows()), rng);
    double epoch_loss = 0.0;
    std::size_t at = 0, batches = 0;
    while (at < idx.size()) {
      const std::size_t n = std::min<std::size_t>(batch, idx.size() - at);
      Mat Xb(n, 6), Yb(n, 2);
      for (std::size_t r = 0; r < n; ++r) {
        Xb.row(r) = Xtr.row(idx[at + r]);
        Yb.row(r) = Ytr.row(idx[at + r]);
      }
      at += n;
      ForwardCache cache;
      const Mat pred = nn::mlp_forward(model.net, Xb, &cache);
      const Mat diff = pred - Yb;
      const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
      if (!std::isfinite(loss)) throw DivergedTraining("train_surrogate: non-finite loss");
      grads.zero();
      nn::mlp_backward(model.net, cache, Mat(2.0 * diff / static_cast<double>(diff.size())),
                       &grads);
      nn::adam_step(model.net, grads, adam);
      epoch_loss += loss;
      ++batches;
    }
    const double v = val_mse();
    if (initial_val < 0) initial_val = v;
    if (epoch >= cfg.epochs / 2 && v > 10.0 * initial_val) {
      throw DivergedTraining("train_surrogate: validation loss diverged");
    }
    if (report) {
      report->train_loss.push_back(epoch_loss / static_cast<double>(batches));
      report->val_loss.push_back(v);
    }
  }
  if (report) {
    const double var = (Yva.rowwise() - Yva.colwise().mean()).squaredNorm() /
                       static_cast<double>(Yva.size());
    report->final_val_metric = val_mse() / std::max(var, 1e-300);
  }
  return model;
}

// ---------------------------------------------------------------------------

std::vector<WindowBatch> make_windows(const TrajectoryDataset& data, int horizon_steps) {
  check<Error>(horizon_steps >= 1, "make_windows: horizon must be at least one step");
  std::vector<WindowBatch> out;
  const std::size_t len = static_cast<std::size_t>(horizon_steps) + 1;
  for (const auto& leg : data.legs) {
    for (std::size_t start = 0; start + len <= leg.records.size(); start += len) {
      WindowBatch w;
      w.init = Mat(1, 4);
      const auto& r0 = leg.records[start];
      w.init << r0.q_s[0], r0.q_s[1], r0.qdot_s[0], r0.qdot_s[1];
      for (int t = 0; t < horizon_steps; ++t) {
        const auto& rt = leg.records[start + static_cast<std::size_t>(t)];
        const auto& rn = leg.records[start + static_cast<std::size_t>(t) + 1];
        w.u.push_back(Mat(rt.u.transpose()));
        w.target_p.push_back(Mat(rn.q_s.transpose()));
        w.target_v.push_back(Mat(rn.qdot_s.transpose()));
        w.target_a.push_back(Mat(rt.qddot_s.transpose()));
      }
      out.push_back(std::move(w));
    }
  }
  return out;
}

WindowBatch gather(const std::vector<WindowBatch>& windows, const std::vector<std::size_t>& idx) {
  check<Error>(!idx.empty() && !windows.empty(), "gather: empty selection");
  const int H = windows.front().steps();
  WindowBatch b;
  const Eigen::Index B = static_cast<Eigen::Index>(idx.size());
  b.init = Mat(B, 4);
  for (int t = 0; t < H; ++t) {
    b.u.push_back(Mat(B, 2));
    b.target_p.push_back(Mat(B, 2));
    b.target_v.push_back(Mat(B, 2));
    b.target_a.push_back(Mat(B, 2));
  }
  for (Eigen::Index r = 0; r < B; ++r) {
    const WindowBatch& w = windows[idx[static_cast<std::size_t>(r)]];
    b.init.row(r) = w.init.row(0);
    for (int t = 0; t < H; ++t) {
      b.u[t].row(r) = w.u[t].row(0);
      b.target_p[t].row(r) = w.target_p[t].row(0);
      b.target_v[t].row(r) = w.target_v[t].row(0);
      b.target_a[t].row(r) = w.target_a[t].row(0);
    }
  }
  return b;
}

UnrollWeights fit_unroll_weights(const TrajectoryDataset& train_data) {
  Mat P(train_data.total_records(), 2), V(train_data.total_records(), 2),
      A(train_data.total_records(), 2);
  Eigen::Index at = 0;
  for (const auto& leg : train_data.legs) {
    for (const auto& r : leg.records) {
      P.row(at) = r.q_s.transpose();
      V.row(at) = r.qdot_s.transpose();
      A.row(at) = r.qddot_s.transpose();
      ++at;
    }
  }
  const auto inv_var = [](const Mat& M) {
    const Vec mean = M.colwise().mean().transpose();
    Vec2 w;
    for (int j = 0; j < 2; ++j) {
      const double var = (M.col(j).array() - mean[j]).square().mean();
      w[j] = 1.0 / std::max(var, 1e-300);
    }
    return w;
  };
  return UnrollWeights{inv_var(P), inv_var(V), inv_var(A)};
}

namespace {

struct UnrollTape {
  std::vector<Mat> P, V, A;  // per-substep states and accelerations
  std::vector<ForwardCache> k_cache, f_cache;
  std::vector<Mat> clamp_mask;  // 1 where the torque clamp is inactive
};

// Shared forward pass: H supervision records, M Euler substeps per record,
// drive held over each record. Throws ExplodingUnroll when explode_check is
// set and a normalized state leaves 5x the data range; clamps to a large box
// otherwise.
UnrollTape run_forward(const SurrogateModel& sur, const Mlp& knet, const Normalizer& k_in,
                       const Vec2& tau, const WindowBatch& batch, double dt, int substeps,
                       bool explode_check, bool keep_caches) {
  check<Error>(substeps >= 1, "run_forward: substeps must be >= 1");
  const int H = batch.steps();
  const Eigen::Index B = batch.rows();
  const int S = H * substeps;
  const double delta = dt / substeps;
  UnrollTape tape;
  tape.P.push_back(batch.init.leftCols(2));
  tape.V.push_back(batch.init.rightCols(2));

  for (int s = 0; s < S; ++s) {
    const int record = s / substeps;
    Mat Xk_raw(B, 6);
    Xk_raw << tape.P[s], tape.V[s], batch.u[record];
    const Mat Xk = k_in.apply_rows(Xk_raw);
    tape.k_cache.emplace_back();
    const Mat Yk = nn::mlp_forward(knet, Xk, keep_caches ? &tape.k_cache.back() : nullptr);

    Mat mask = Mat::Ones(B, 2);
    Mat Us(B, 2);
    for (Eigen::Index r = 0; r < B; ++r) {
      for (int j = 0; j < 2; ++j) {
        const double raw = tau[j] * Yk(r, j);
        if (raw > tau[j]) {
          Us(r, j) = tau[j];
          mask(r, j) = 0.0;
        } else if (raw < -tau[j]) {
          Us(r, j) = -tau[j];
          mask(r, j) = 0.0;
        } else {
          Us(r, j) = raw;
        }
      }
    }
    tape.clamp_mask.push_back(std::move(mask));

    Mat Xf_raw(B, 6);
    Xf_raw << tape.P[s], tape.V[s], Us;
    const Mat Xf = sur.in_norm.apply_rows(Xf_raw);
    tape.f_cache.emplace_back();
    const Mat Yf = nn::mlp_forward(sur.net, Xf, keep_caches ? &tape.f_cache.back() : nullptr);
    tape.A.push_back(sur.out_norm.unapply_rows(Yf));

    Mat Vn = tape.V[s] + delta * tape.A[s];
    Mat Pn = tape.P[s] + delta * Vn;
    if (explode_check) {
      Mat state_raw(B, 6);
      state_raw << Pn, Vn, Mat::Zero(B, 2);
      const Mat normed = k_in.apply_rows(state_raw);
      if (normed.leftCols(4).array().abs().maxCoeff() > 5.0) {
        throw ExplodingUnroll("unroll left 5x the normalized data range at substep " +
                              std::to_string(s));
      }
    } else {
      Pn = Pn.array().min(1e6).max(-1e6);
      Vn = Vn.array().min(1e6).max(-1e6);
    }
    tape.V.push_back(std::move(Vn));
    tape.P.push_back(std::move(Pn));
  }
  return tape;
}

}  // namespace

UnrollResult unroll_forward(const SurrogateModel& surrogate, const Mlp& knet,
                            const Normalizer& k_in, const Vec2& torque_limit,
                            const WindowBatch& batch, double dt, int substeps,
                            bool clamp_states) {
  UnrollTape tape = run_forward(surrogate, knet, k_in, torque_limit, batch, dt, substeps,
                                !clamp_states, /*keep_caches=*/false);
  UnrollResult out;
  for (int r = 0; r <= batch.steps(); ++r) {
    out.p.push_back(tape.P[static_cast<std::size_t>(r) * substeps]);
    out.v.push_back(tape.V[static_cast<std::size_t>(r) * substeps]);
    if (r < batch.steps()) out.a.push_back(tape.A[static_cast<std::size_t>(r) * substeps]);
  }
  return out;
}

double unroll_loss(const SurrogateModel& sur, const Mlp& knet, const Normalizer& k_in,
                   const Vec2& tau, const WindowBatch& batch, const UnrollWeights& w, double dt,
                   int substeps, MlpGrads* kgrads, bool explode_check) {
  const int H = batch.steps();
  const Eigen::Index B = batch.rows();
  const int M = substeps;
  const int S = H * M;
  const double delta = dt / M;
  UnrollTape tape = run_forward(sur, knet, k_in, tau, batch, dt, M, explode_check,
                                /*keep_caches=*/kgrads != nullptr);
  const double norm = 1.0 / static_cast<double>(B * H);

  double loss = 0.0;
  for (int r = 0; r < H; ++r) {
    const std::size_t end = static_cast<std::size_t>(r + 1) * M;
    const std::size_t start = static_cast<std::size_t>(r) * M;
    loss += norm * ((tape.P[end] - batch.target_p[r]).array().square().rowwise() *
                    w.pos.transpose().array())
                       .sum();
    loss += norm * ((tape.V[end] - batch.target_v[r]).array().square().rowwise() *
                    w.vel.transpose().array())
                       .sum();
    loss += norm * ((tape.A[start] - batch.target_a[r]).array().square().rowwise() *
                    w.acc.transpose().array())
                       .sum();
  }
  if (!std::isfinite(loss)) throw DivergedTraining("unroll_loss: non-finite loss");
  if (!kgrads) return loss;

  // Reverse pass over substeps; loss terms inject at record boundaries.
  Mat dP = Mat::Zero(B, 2), dV = Mat::Zero(B, 2);
  for (int step = S - 1; step >= 0; --step) {
    if ((step + 1) % M == 0) {
      const int r = (step + 1) / M - 1;
      dP += Mat(2.0 * norm *
                ((tape.P[static_cast<std::size_t>(step) + 1] - batch.target_p[r]).array().rowwise() *
                 w.pos.transpose().array())
                    .matrix());
      dV += Mat(2.0 * norm *
                ((tape.V[static_cast<std::size_t>(step) + 1] - batch.target_v[r]).array().rowwise() *
                 w.vel.transpose().array())
                    .matrix());
    }
    Mat dA = Mat::Zero(B, 2);
    if (step % M == 0) {
      const int r = step / M;
      dA = 2.0 * norm *
           ((tape.A[static_cast<std::size_t>(step)] - batch.target_a[r]).array().rowwise() *
            w.acc.transpose().array())
               .matrix();
    }

    // P[s+1] = P[s] + delta V[s+1]; V[s+1] = V[s] + delta A[s]
    Mat dPt = dP;
    dV += delta * dP;
    Mat dVt = dV;
    dA += delta * dV;

    // A = out_norm.unapply(Yf)
    const Mat dYf = dA.array().rowwise() * sur.out_norm.scale.transpose().array();
    const Mat dXf = nn::mlp_backward(sur.net, tape.f_cache[static_cast<std::size_t>(step)], dYf,
                                     nullptr);  // surrogate frozen
    const Mat dXf_raw = dXf.array().rowwise() / sur.in_norm.scale.transpose().array();
    dPt += dXf_raw.leftCols(2);
    dVt += dXf_raw.middleCols(2, 2);
    const Mat dUs = dXf_raw.rightCols(2);

    // Us = clamp(tau * Yk)
    const Mat dYk = (dUs.array() * tape.clamp_mask[static_cast<std::size_t>(step)].array())
                        .rowwise() *
                    Eigen::Array<double, 1, 2>(tau[0], tau[1]);
    const Mat dXk =
        nn::mlp_backward(knet, tape.k_cache[static_cast<std::size_t>(step)], Mat(dYk), kgrads);
    const Mat dXk_raw = dXk.array().rowwise() / k_in.scale.transpose().array();
    dPt += dXk_raw.leftCols(2);
    dVt += dXk_raw.middleCols(2, 2);

    dP = std::move(dPt);
    dV = std::move(dVt);
  }
  return loss;
}

ResidualModel train_residual(const SurrogateModel& surrogate, const TrajectoryDataset& full_data,
                             const TrainConfig& cfg, const robot::RobotParams& params,
                             TrainReport* report) {
  check<Error>(full_data.provenance == Provenance::kFullModel,
               "train_residual: dataset provenance must be full-model");
  cfg.validate(full_data.record_rate);
  const int H = cfg.horizon_steps(full_data.record_rate);
  const double dt = 1.0 / full_data.record_rate;

  const TrajectoryDataset train = full_data.train_split(cfg.val_fraction);
  const TrajectoryDataset val = full_data.validation_split(cfg.val_fraction);
  const std::vector<WindowBatch> train_windows = make_windows(train, H);
  const std::vector<WindowBatch> val_windows = make_windows(val, H);
  if (train_windows.empty()) throw EmptyDataset("train_residual: no training windows");
  const UnrollWeights weights = fit_unroll_weights(train);

  ResidualModel model;
  model.torque_limit = params.pd.torque_limits();
  model.in_norm = nn::normalizer_fit(train.stack_inputs());
  Rng rng(cfg.seed, /*stream=*/11);
  model.net = nn::make_mlp({6, 100, 100, 2}, rng);
  // Zero-output start: the initial unroll is the passive simple dynamics.
  model.net.layers.back().W.setZero();
  model.net.layers.back().b.setZero();

  nn::AdamState adam;
  adam.init_like(model.net);
  adam.alpha = cfg.lr;
  MlpGrads grads;
  grads.init_like(model.net);

  std::vector<std::size_t> all_val(val_windows.size());
  std::iota(all_val.begin(), all_val.end(), std::size_t{0});
  const WindowBatch val_batch =
      val_windows.empty() ? WindowBatch{} : gather(val_windows, all_val);
  const auto val_loss_fn = [&]() {
    if (val_windows.empty()) return 0.0;
    return unroll_loss(surrogate, model.net, model.in_norm, model.torque_limit, val_batch,
                       weights, dt, cfg.substeps_per_record, nullptr, false);
  };

  double initial_val = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto order = shuffled_indices(train_windows.size(), rng);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(cfg.batch)) {
      const std::size_t n = std::min<std::size_t>(cfg.batch, order.size() - at);
      const std::vector<std::size_t> idx(order.begin() + static_cast<long>(at),
                                         order.begin() + static_cast<long>(at + n));
      const WindowBatch b = gather(train_windows, idx);
      grads.zero();
      epoch_loss += unroll_loss(surrogate, model.net, model.in_norm, model.torque_limit, b,
                                weights, dt, cfg.substeps_per_record, &grads, true);
      nn::adam_step(model.net, grads, adam);
      ++batches;
    }
    const double v = val_loss_fn();
    if (initial_val < 0) initial_val = v;
    if (epoch >= cfg.epochs / 2 && v > 10.0 * initial_val) {
      throw DivergedTraining("train_residual: validation loss diverged");
    }
    if (report) {
      report->train_loss.push_back(epoch_loss / static_cast<double>(batches));
      report->val_loss.push_back(v);
    }
  }
  if (report && !report->val_loss.empty()) {
    report->final_val_metric = report->val_loss.back();
  }
  return model;
}

UnrollResult unroll_predict(const SurrogateModel& surrogate, const ResidualModel& residual,
                            const Vec2& q_s0, const Vec2& qdot_s0,
                            const std::vector<Vec2>& u_seq, double dt, int substeps) {
  check<Error>(!u_seq.empty(), "unroll_predict: empty input sequence");
  WindowBatch b;
  b.init = Mat(1, 4);
  b.init << q_s0[0], q_s0[1], qdot_s0[0], qdot_s0[1];
  for (const auto& u : u_seq) {
    b.u.push_back(Mat(u.transpose()));
    b.target_p.push_back(Mat::Zero(1, 2));
    b.target_v.push_back(Mat::Zero(1, 2));
    b.target_a.push_back(Mat::Zero(1, 2));
  }
  return unroll_forward(surrogate, residual.net, residual.in_norm, residual.torque_limit, b, dt,
                        substeps, /*clamp_states=*/true);
}

EndToEndModel train_end_to_end(const TrajectoryDataset& contact_data, const TrainConfig& cfg,
                               TrainReport* report) {
  check<Error>(contact_data.provenance == Provenance::kFullModelContacts,
               "train_end_to_end: dataset provenance must be full-model-with-contacts");
  cfg.validate(contact_data.record_rate);

  const TrajectoryDataset train = contact_data.train_split(cfg.val_fraction);
  const TrajectoryDataset val = contact_data.validation_split(cfg.val_fraction);

  // Delta-state targets from consecutive records.
  const auto deltas = [](const TrajectoryDataset& d) {
    std::size_t n = 0;
    for (const auto& leg : d.legs) n += leg.records.size() > 0 ? leg.records.size() - 1 : 0;
    Mat X(n, 6), Y(n, 4);
    Eigen::Index at = 0;
    for (const auto& leg : d.legs) {
      for (std::size_t k = 0; k + 1 < leg.records.size(); ++k) {
        const auto& r = leg.records[k];
        const auto& rn = leg.records[k + 1];
        X.row(at) << r.q_s[0], r.q_s[1], r.qdot_s[0], r.qdot_s[1], r.u[0], r.u[1];
        Y.row(at) << rn.q_s[0] - r.q_s[0], rn.q_s[1] - r.q_s[1], rn.qdot_s[0] - r.qdot_s[0],
            rn.qdot_s[1] - r.qdot_s[1];
        ++at;
      }
    }
    return std::make_pair(X, Y);
  };
  const auto [Xtr_raw, Ytr_raw] = deltas(train);
  const auto [Xva_raw, Yva_raw] = deltas(val);
  if (Xtr_raw.rows() < 2) throw EmptyDataset("train_end_to_end: no training data");

  EndToEndModel model;
  model.step_dt = 1.0 / contact_data.record_rate;
  model.in_norm = nn::normalizer_fit(Xtr_raw);
  model.out_norm = nn::normalizer_fit(Ytr_raw);
  Rng rng(cfg.seed, /*stream=*/12);
  model.net = nn::make_mlp({6, 100, 100, 4}, rng);

  const Mat Xtr = model.in_norm.apply_rows(Xtr_raw);
  const Mat Ytr = model.out_norm.apply_rows(Ytr_raw);
  const Mat Xva = model.in_norm.apply_rows(Xva_raw);
  const Mat Yva = model.out_norm.apply_rows(Yva_raw);

  nn::AdamState adam;
  adam.init_like(model.net);
  adam.alpha = cfg.lr;
  MlpGrads grads;
  grads.init_like(model.net);

  const int batch = 128;
  double initial_val = -1.0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto idx = shuffled_indices(static_cast<std::size_t>(Xtr.rows()), rng);
    double epoch_loss = 0.0;
    std::size_t at = 0, batches = 0;
    while (at < idx.size()) {
      const std::size_t n = std::min<std::size_t>(batch, idx.size() - at);
      Mat Xb(n, 6), Yb(n, 4);
      for (std::size_t r = 0; r < n; ++r) {
        Xb.row(r) = Xtr.row(idx[at + r]);
        Yb.row(r) = Ytr.row(idx[at + r]);
      }
      at += n;
      ForwardCache cache;
      const Mat pred = nn::mlp_forward(model.net, Xb, &cache);
      const Mat diff = pred - Yb;
      const double loss = diff.squaredNorm() / static_cast<double>(diff.size());
      if (!std::isfinite(loss)) throw DivergedTraining("train_end_to_end: non-finite loss");
      grads.zero();
      nn::mlp_backward(model.net, cache, Mat(2.0 * diff / static_cast<double>(diff.size())),
                       &grads);
      nn::adam_step(model.net, grads, adam);
      epoch_loss += loss;
      ++batches;
    }
    const double v = (nn::mlp_forward(model.net, Xva) - Yva).squaredNorm() /
                     static_cast<double>(Yva.size());
    if (initial_val < 0) initial_val = v;
    if (epoch >= cfg.epochs / 2 && v > 10.0 * initial_val) {
      throw DivergedTraining("train_end_to_end: validation loss diverged");
    }
    if (report) {
      report->train_loss.push_back(epoch_loss / static_cast<double>(batches));
      report->val_loss.push_back(v);
    }
  }
  if (report && !report->val_loss.empty()) report->final_val_metric = report->val_loss.back();
  return model;
}

}  // namespace flexquad::residual
