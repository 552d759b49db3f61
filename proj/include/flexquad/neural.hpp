#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "flexquad/numerics.hpp"

namespace flexquad::nn {

enum class Activation { kTanh, kLinear };

struct Layer {
  Mat W;  // out x in
  Vec b;  // out
  Activation act = Activation::kLinear;
};

// Fully connected network. Regression heads end in a linear activation.
struct Mlp {
  std::vector<Layer> layers;

  int in_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.front().W.cols()); }
  int out_dim() const { return layers.empty() ? 0 : static_cast<int>(layers.back().W.rows()); }
  std::size_t num_params() const;

  // Flat views used by Adam, grad_check, and checkpoints. Order: per layer,
  // W row-major then b.
  Vec flatten() const;
  void unflatten(const Vec& theta);
};

// Hidden layers all tanh, final layer linear.
Mlp make_mlp(const std::vector<int>& dims, Rng& rng, double init_scale = 0.0);

struct ForwardCache {
  std::vector<Mat> inputs;   // inputs[l]: batch x in_l
  std::vector<Mat> preacts;  // preacts[l]: batch x out_l
  Mat output;                // batch x out
};

struct MlpGrads {
  std::vector<Mat> dW;
  std::vector<Vec> db;

  void init_like(const Mlp& net);
  void zero();
  void scale(double s);
  Vec flatten() const;
};

// Rows of X are samples. Returns batch x out_dim; fills cache when given.
Mat mlp_forward(const Mlp& net, const Mat& X, ForwardCache* cache = nullptr);

// Single-sample convenience wrapper.
Vec mlp_forward(const Mlp& net, const Vec& x);

// Reverse-mode gradients of the forward map. dY is batch x out_dim (dL/dY).
// Accumulates parameter gradients into grads (caller zeroes) and returns
// dL/dX. Throws StaleCache when shapes disagree with the cache.
Mat mlp_backward(const Mlp& net, const ForwardCache& cache, const Mat& dY, MlpGrads* grads);

// ---------------------------------------------------------------------------
// Adam

struct AdamState {
  double alpha = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::vector<Mat> mW, vW;
  std::vector<Vec> mb, vb;

  void init_like(const Mlp& net);
};

// Standard bias-corrected Adam update, in place; increments t.
void adam_step(Mlp& net, const MlpGrads& grads, AdamState& state);

// Flat-vector variant for auxiliary parameters (e.g. a policy's log-std).
struct AdamVecState {
  double alpha = 1e-3, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long t = 0;
  Vec m, v;
  void init(Eigen::Index n);
};
void adam_step_vec(Vec& params, const Vec& grad, AdamVecState& state);

// ---------------------------------------------------------------------------
// Gradient checking

// Compares analytic gradients of loss_fn against central finite differences
// on n_probes randomly chosen coordinates; returns the max relative error.
// loss_fn must fill grads (zeroed by the caller) and return the loss.
using LossWithGrad = std::function<double(const Mlp&, MlpGrads*)>;
double grad_check(const Mlp& net, const LossWithGrad& loss_fn, int n_probes, Rng& rng,
                  double fd_step = 1e-5);

// ---------------------------------------------------------------------------
// Normalization

// Per-dimension affine map fitted so data lands in [-1, 1] (min/max scaling).
// apply(x) = (x - shift) / scale, unapply inverts it exactly.
struct Normalizer {
  Vec shift;
  Vec scale;  // > 0 in every dimension

  Vec apply(const Vec& x) const;
  Vec unapply(const Vec& y) const;
  Mat apply_rows(const Mat& X) const;
  Mat unapply_rows(const Mat& Y) const;

  static Normalizer identity(Eigen::Index dim);
  // Symmetric pure-scale map: apply(x) = x / half_range, shift = 0.
  static Normalizer symmetric(const Vec& half_range);
};

// Min/max fit over rows of data. Requires >= 2 samples; a dimension with no
// spread gets scale clamped to 1 and shift equal to the constant.
Normalizer normalizer_fit(const Mat& data);

// ---------------------------------------------------------------------------
// Checkpoints

// Versioned binary container of named arrays plus training metadata. Array
// payloads round-trip bit-exactly.
struct Checkpoint {
  static constexpr uint32_t kVersion = 1;

  std::string kind;  // consumer-defined, verified on load
  uint64_t seed = 0;
  uint32_t epoch = 0;
  double loss = 0.0;
  std::map<std::string, Mat> arrays;
  std::map<std::string, std::string> meta;

  void put_mlp(const std::string& prefix, const Mlp& net);
  Mlp get_mlp(const std::string& prefix) const;
  void put_normalizer(const std::string& prefix, const Normalizer& n);
  Normalizer get_normalizer(const std::string& prefix) const;
  void put_vec(const std::string& name, const Vec& v);
  Vec get_vec(const std::string& name) const;

  void save(const std::string& path) const;
  // Throws IoError on magic/version mismatch, Error on kind mismatch when
  // expected_kind is non-empty.
  static Checkpoint load(const std::string& path, const std::string& expected_kind = "");
};

}  // namespace flexquad::nn
