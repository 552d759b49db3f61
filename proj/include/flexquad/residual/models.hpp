#pragma once

#include "flexquad/neural.hpp"

namespace flexquad::residual {

// Differentiable stand-in for the simple hip dynamics:
// (q_s, qdot_s, u_s) -> qddot_s per transmission.
struct SurrogateModel {
  nn::Mlp net;             // 6 -> 2
  nn::Normalizer in_norm;  // fitted on (q_s, qdot_s, u_s)
  nn::Normalizer out_norm;  // fitted on qddot_s

  Vec2 predict(const Vec2& q_s, const Vec2& qdot_s, const Vec2& u_s) const;

  void save(const std::string& path, uint64_t seed, uint32_t epoch, double loss) const;
  static SurrogateModel load(const std::string& path);
  static constexpr const char* kKind = "surrogate";
};

// Learned feedback map (q_s, qdot_s, u) -> u_s. The output transform is a
// pure scale by the torque limit with a symmetric clamp, so a zero network
// means zero torque.
struct ResidualModel {
  nn::Mlp net;             // 6 -> 2
  nn::Normalizer in_norm;  // fitted on (q_s, qdot_s, u)
  Vec2 torque_limit = Vec2::Zero();  // per-axis output scale and clamp

  Vec2 predict(const Vec2& q_s, const Vec2& qdot_s, const Vec2& u) const;

  void save(const std::string& path, uint64_t seed, uint32_t epoch, double loss) const;
  static ResidualModel load(const std::string& path);
  static constexpr const char* kKind = "residual";
};

// End-to-end baseline: predicts per-record-step state differences
// Delta(q_s, qdot_s) from (q_s, qdot_s, u), trained on contact data.
struct EndToEndModel {
  nn::Mlp net;              // 6 -> 4
  nn::Normalizer in_norm;   // fitted on (q_s, qdot_s, u)
  nn::Normalizer out_norm;  // fitted on state differences
  double step_dt = 1e-3;

  Vec4 predict_delta(const Vec2& q_s, const Vec2& qdot_s, const Vec2& u) const;

  void save(const std::string& path, uint64_t seed, uint32_t epoch, double loss) const;
  static EndToEndModel load(const std::string& path);
  static constexpr const char* kKind = "end_to_end";
};

}  // namespace flexquad::residual
