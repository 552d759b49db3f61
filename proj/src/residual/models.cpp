#include "flexquad/residual/models.hpp"

namespace flexquad::residual {

namespace {

Vec pack6(const Vec2& a, const Vec2& b, const Vec2& c) {
  Vec x(6);
  x << a[0], a[1], b[0], b[1], c[0], c[1];
  return x;
}

}  // namespace

Vec2 SurrogateModel::predict(const Vec2& q_s, const Vec2& qdot_s, const Vec2& u_s) const {
  const Vec y = nn::mlp_forward(net, in_norm.apply(pack6(q_s, qdot_s, u_s)));
  return Vec2(out_norm.unapply(y));
}

void SurrogateModel::save(const std::string& path, uint64_t seed, uint32_t epoch,
                          double loss) const {
  nn::Checkpoint c;
  c.kind = kKind;
  c.seed = seed;
  c.epoch = epoch;
  c.loss = loss;
  c.put_mlp("net", net);
  c.put_normalizer("in", in_norm);
  c.put_normalizer("out", out_norm);
  c.save(path);
}

SurrogateModel SurrogateModel::load(const std::string& path) {
  const nn::Checkpoint c = nn::Checkpoint::load(path, kKind);
  SurrogateModel m;
  m.net = c.get_mlp("net");
  m.in_norm = c.get_normalizer("in");
  m.out_norm = c.get_normalizer("out");
  return m;
}

Vec2 ResidualModel::predict(const Vec2& q_s, const Vec2& qdot_s, const Vec2& u) const {
  const Vec y = nn::mlp_forward(net, in_norm.apply(pack6(q_s, qdot_s, u)));
  return Vec2(std::clamp(torque_limit[0] * y[0], -torque_limit[0], torque_limit[0]),
              std::clamp(torque_limit[1] * y[1], -torque_limit[1], torque_limit[1]));
}

void ResidualModel::save(const std::string& path, uint64_t seed, uint32_t epoch,
                         double loss) const {
  nn::Checkpoint c;
  c.kind = kKind;
  c.seed = seed;
  c.epoch = epoch;
  c.loss = loss;
  c.put_mlp("net", net);
  c.put_normalizer("in", in_norm);
  c.put_vec("torque_limit", Vec(torque_limit));
  c.save(path);
}

ResidualModel ResidualModel::load(const std::string& path) {
  const nn::Checkpoint c = nn::Checkpoint::load(path, kKind);
  ResidualModel m;
  m.net = c.get_mlp("net");
  m.in_norm = c.get_normalizer("in");
  m.torque_limit = Vec2(c.get_vec("torque_limit"));
  return m;
}

Vec4 EndToEndModel::predict_delta(const Vec2& q_s, const Vec2& qdot_s, const Vec2& u) const {
  const Vec y = nn::mlp_forward(net, in_norm.apply(pack6(q_s, qdot_s, u)));
  return Vec4(out_norm.unapply(y));
}

void EndToEndModel::save(const std::string& path, uint64_t seed, uint32_t epoch,
                         double loss) const {
  nn::Checkpoint c;
  c.kind = kKind;
  c.seed = seed;
  c.epoch = epoch;
  c.loss = loss;
  c.put_mlp("net", net);
  c.put_normalizer("in", in_norm);
  c.put_normalizer("out", out_norm);
  c.put_vec("step_dt", Vec::Constant(1, step_dt));
  c.save(path);
}

EndToEndModel EndToEndModel::load(const std::string& path) {
  const nn::Checkpoint c = nn::Checkpoint::load(path, kKind);
  EndToEndModel m;
  m.net = c.get_mlp("net");
  m.in_norm = c.get_normalizer("in");
  m.out_norm = c.get_normalizer("out");
  m.step_dt = c.get_vec("step_dt")[0];
  return m;
}

}  // namespace flexquad::residual
