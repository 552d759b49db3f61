#include "flexquad/neural.hpp"

#include <cstring>
#include <fstream>

namespace flexquad::nn {

std::size_t Mlp::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += static_cast<std::size_t>(l.W.size() + l.b.size());
  return n;
}

Vec Mlp::flatten() const {
  Vec theta(num_params());
  Eigen::Index at = 0;
  for (const auto& l : layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) theta[at++] = l.W(r, c);
    theta.segment(at, l.b.size()) = l.b;
    at += l.b.size();
  }
  return theta;
}

void Mlp::unflatten(const Vec& theta) {
  check_dims(theta.size(), static_cast<Eigen::Index>(num_params()), "Mlp::unflatten");
  Eigen::Index at = 0;
  for (auto& l : layers) {
    for (Eigen::Index r = 0; r < l.W.rows(); ++r)
      for (Eigen::Index c = 0; c < l.W.cols(); ++c) l.W(r, c) = theta[at++];
    l.b = theta.segment(at, l.b.size());
    at += l.b.size();
  }
}

Mlp make_mlp(const std::vector<int>& dims, Rng& rng, double init_scale) {
  check<Error>(dims.size() >= 2, "make_mlp: need at least input and output dims");
  Mlp net;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Layer l;
    const int in = dims[i], out = dims[i + 1];
    l.W.resize(out, in);
    // Xavier-style scale unless overridden.
    const double s = init_scale > 0.0 ? init_scale : std::sqrt(1.0 / in);
    for (Eigen::Index r = 0; r < out; ++r)
      for (Eigen::Index c = 0; c < in; ++c) l.W(r, c) = rng.gaussian(0.0, s);
    l.b = Vec::Zero(out);
    l.act = (i + 2 == dims.size()) ? Activation::kLinear : Activation::kTanh;
    net.layers.push_back(std::move(l));
  }
  return net;
}

void MlpGrads::init_like(const Mlp& net) {
  dW.clear();
  db.clear();
  for (const auto& l : net.layers) {
    dW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
    db.push_back(Vec::Zero(l.b.size()));
  }
}

void MlpGrads::zero() {
  for (auto& m : dW) m.setZero();
  for (auto& v : db) v.setZero();
}

void MlpGrads::scale(double s) {
  for (auto& m : dW) m *= s;
  for (auto& v : db) v *= s;
}

Vec MlpGrads::flatten() const {
  Eigen::Index n = 0;
  for (std::size_t i = 0; i < dW.size(); ++i) n += dW[i].size() + db[i].size();
  Vec g(n);
  Eigen::Index at = 0;
  for (std::size_t i = 0; i < dW.size(); ++i) {
    for (Eigen::Index r = 0; r < dW[i].rows(); ++r)
      for (Eigen::Index c = 0; c < dW[i].cols(); ++c) g[at++] = dW[i](r, c);
    g.segment(at, db[i].size()) = db[i];
    at += db[i].size();
  }
  return g;
}

Mat mlp_forward(const Mlp& net, const Mat& X, ForwardCache* cache) {
  check<Error>(!net.layers.empty(), "mlp_forward: empty network");
  check_dims(X.cols(), net.layers.front().W.cols(), "mlp_forward: input dim");
  if (cache) {
    cache->inputs.clear();
    cache->preacts.clear();
  }
  Mat h = X;
  for (const auto& l : net.layers) {
    if (cache) cache->inputs.push_back(h);
    Mat z = (h * l.W.transpose()).rowwise() + l.b.transpose();
    if (cache) cache->preacts.push_back(z);
    h = (l.act == Activation::kTanh) ? Mat(z.array().tanh()) : std::move(z);
  }
  if (cache) cache->output = h;
  return h;
}

Vec mlp_forward(const Mlp& net, const Vec& x) {
  const Mat y = mlp_forward(net, Mat(x.transpose()), nullptr);
  return y.row(0).transpose();
}

Mat mlp_backward(const Mlp& net, const ForwardCache& cache, const Mat& dY, MlpGrads* grads) {
  const std::size_t L = net.layers.size();
  if (cache.inputs.size() != L || cache.preacts.size() != L) {
    throw StaleCache("mlp_backward: cache does not match network depth");
  }
  if (dY.rows() != cache.output.rows() || dY.cols() != cache.output.cols()) {
    throw StaleCache("mlp_backward: upstream gradient shape mismatch");
  }
  if (grads && grads->dW.size() != L) throw StaleCache("mlp_backward: grads not initialized");

  Mat delta = dY;
  for (std::size_t i = L; i-- > 0;) {
    const Layer& l = net.layers[i];
    if (cache.inputs[i].cols() != l.W.cols() || cache.preacts[i].cols() != l.W.rows()) {
      throw StaleCache("mlp_backward: cache layer shape mismatch");
    }
    if (l.act == Activation::kTanh) {
      // d tanh(z) = 1 - tanh(z)^2
      delta = delta.array() * (1.0 - cache.preacts[i].array().tanh().square());
    }
    if (grads) {
      grads->dW[i].noalias() += delta.transpose() * cache.inputs[i];
      grads->db[i] += delta.colwise().sum().transpose();
    }
    delta = Mat(delta * l.W);  // becomes dL/dX after the first layer
  }
  return delta;
}

// ---------------------------------------------------------------------------

void AdamState::init_like(const Mlp& net) {
  t = 0;
  mW.clear();
  vW.clear();
  mb.clear();
  vb.clear();
  for (const auto& l : net.layers) {
    mW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
    vW.push_back(Mat::Zero(l.W.rows(), l.W.cols()));
    mb.push_back(Vec::Zero(l.b.size()));
    vb.push_back(Vec::Zero(l.b.size()));
  }
}

void adam_step(Mlp& net, const MlpGrads& grads, AdamState& s) {
  check<Error>(s.mW.size() == net.layers.size(), "adam_step: state not initialized");
  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    auto& l = net.layers[i];
    s.mW[i] = s.beta1 * s.mW[i] + (1.0 - s.beta1) * grads.dW[i];
    s.vW[i] = s.beta2 * s.vW[i].array().matrix() +
              (1.0 - s.beta2) * grads.dW[i].array().square().matrix();
    l.W.array() -= s.alpha * (s.mW[i].array() / bc1) /
                   ((s.vW[i].array() / bc2).sqrt() + s.eps);
    s.mb[i] = s.beta1 * s.mb[i] + (1.0 - s.beta1) * grads.db[i];
    s.vb[i] = s.beta2 * s.vb[i].array().matrix() +
              (1.0 - s.beta2) * grads.db[i].array().square().matrix();
    l.b.array() -= s.alpha * (s.mb[i].array() / bc1) /
                   ((s.vb[i].array() / bc2).sqrt() + s.eps);
  }
}

void AdamVecState::init(Eigen::Index n) {
  t = 0;
  m = Vec::Zero(n);
  v = Vec::Zero(n);
}

void adam_step_vec(Vec& params, const Vec& grad, AdamVecState& s) {
  check_dims(grad.size(), params.size(), "adam_step_vec");
  s.t += 1;
  const double bc1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
  const double bc2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
  s.m = s.beta1 * s.m + (1.0 - s.beta1) * grad;
  s.v = s.beta2 * s.v.array().matrix() + (1.0 - s.beta2) * grad.array().square().matrix();
  params.array() -= s.alpha * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + s.eps);
}

// ---------------------------------------------------------------------------

double grad_check(const Mlp& net, const LossWithGrad& loss_fn, int n_probes, Rng& rng,
                  double fd_step) {
  Mlp work = net;
  MlpGrads grads;
  grads.init_like(work);
  loss_fn(work, &grads);
  const Vec analytic = grads.flatten();
  Vec theta = work.flatten();

  double max_rel_err = 0.0;
  const Eigen::Index n = theta.size();
  for (int p = 0; p < n_probes; ++p) {
    const Eigen::Index i = static_cast<Eigen::Index>(rng.uniform_index(static_cast<uint64_t>(n)));
    const double orig = theta[i];
    const double h = fd_step * std::max(1.0, std::abs(orig));

    theta[i] = orig + h;
    work.unflatten(theta);
    const double lp = loss_fn(work, nullptr);
    theta[i] = orig - h;
    work.unflatten(theta);
    const double lm = loss_fn(work, nullptr);
    theta[i] = orig;
    work.unflatten(theta);

    const double fd = (lp - lm) / (2.0 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-8});
    max_rel_err = std::max(max_rel_err, std::abs(fd - analytic[i]) / denom);
  }
  return max_rel_err;
}

// ---------------------------------------------------------------------------

Vec Normalizer::apply(const Vec& x) const {
  check_dims(x.size(), shift.size(), "Normalizer::apply");
  return (x - shift).cwiseQuotient(scale);
}

Vec Normalizer::unapply(const Vec& y) const {
  check_dims(y.size(), shift.size(), "Normalizer::unapply");
  return y.cwiseProduct(scale) + shift;
}

Mat Normalizer::apply_rows(const Mat& X) const {
  check_dims(X.cols(), shift.size(), "Normalizer::apply_rows");
  return (X.rowwise() - shift.transpose()).array().rowwise() / scale.transpose().array();
}

Mat Normalizer::unapply_rows(const Mat& Y) const {
  check_dims(Y.cols(), shift.size(), "Normalizer::unapply_rows");
  return (Y.array().rowwise() * scale.transpose().array()).matrix().rowwise() +
         shift.transpose();
}

Normalizer Normalizer::identity(Eigen::Index dim) {
  return {Vec::Zero(dim), Vec::Ones(dim)};
}

Normalizer Normalizer::symmetric(const Vec& half_range) {
  Normalizer n;
  n.shift = Vec::Zero(half_range.size());
  n.scale = half_range.cwiseMax(1e-12);
  return n;
}

Normalizer normalizer_fit(const Mat& data) {
  if (data.rows() == 0) throw EmptyDataset("normalizer_fit: no samples");
  check<Error>(data.rows() >= 2, "normalizer_fit: need at least 2 samples");
  const Vec lo = data.colwise().minCoeff().transpose();
  const Vec hi = data.colwise().maxCoeff().transpose();
  Normalizer n;
  n.shift = 0.5 * (lo + hi);
  n.scale = 0.5 * (hi - lo);
  for (Eigen::Index i = 0; i < n.scale.size(); ++i) {
    if (n.scale[i] <= 0.0) {
      n.scale[i] = 1.0;  // constant column: shift to it, unit scale
    }
  }
  return n;
}

// ---------------------------------------------------------------------------
// Checkpoint I/O. Little-endian binary: magic, version, kind, metadata,
// named double arrays.

namespace {

constexpr char kMagic[8] = {'F', 'Q', 'C', 'K', 'P', 'T', '0', '\n'};

void write_u32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<char*>(&v), 4); }
void write_u64(std::ostream& out, uint64_t v) { out.write(reinterpret_cast<char*>(&v), 8); }
void write_f64(std::ostream& out, double v) { out.write(reinterpret_cast<char*>(&v), 8); }
void write_str(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

uint32_t read_u32(std::istream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t read_u64(std::istream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
double read_f64(std::istream& in) {
  double v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}
std::string read_str(std::istream& in) {
  const uint64_t n = read_u64(in);
  check<IoError>(n < (1ULL << 32), "checkpoint: corrupt string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace

void Checkpoint::put_mlp(const std::string& prefix, const Mlp& net) {
  meta[prefix + ".layers"] = std::to_string(net.layers.size());
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    arrays[prefix + ".W" + std::to_string(i)] = net.layers[i].W;
    arrays[prefix + ".b" + std::to_string(i)] = net.layers[i].b;
    meta[prefix + ".act" + std::to_string(i)] =
        net.layers[i].act == Activation::kTanh ? "tanh" : "linear";
  }
}

Mlp Checkpoint::get_mlp(const std::string& prefix) const {
  auto it = meta.find(prefix + ".layers");
  check<IoError>(it != meta.end(), "checkpoint: missing mlp '" + prefix + "'");
  const std::size_t L = std::stoul(it->second);
  Mlp net;
  for (std::size_t i = 0; i < L; ++i) {
    Layer l;
    l.W = arrays.at(prefix + ".W" + std::to_string(i));
    l.b = Vec(arrays.at(prefix + ".b" + std::to_string(i)).col(0));
    const std::string& a = meta.at(prefix + ".act" + std::to_string(i));
    l.act = (a == "tanh") ? Activation::kTanh : Activation::kLinear;
    net.layers.push_back(std::move(l));
  }
  return net;
}

void Checkpoint::put_normalizer(const std::string& prefix, const Normalizer& n) {
  arrays[prefix + ".shift"] = n.shift;
  arrays[prefix + ".scale"] = n.scale;
}

Normalizer Checkpoint::get_normalizer(const std::string& prefix) const {
  Normalizer n;
  n.shift = Vec(arrays.at(prefix + ".shift").col(0));
  n.scale = Vec(arrays.at(prefix + ".scale").col(0));
  return n;
}

void Checkpoint::put_vec(const std::string& name, const Vec& v) { arrays[name] = v; }

Vec Checkpoint::get_vec(const std::string& name) const {
  return Vec(arrays.at(name).col(0));
}

void Checkpoint::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("checkpoint: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  write_u32(out, kVersion);
  write_str(out, kind);
  write_u64(out, seed);
  write_u32(out, epoch);
  write_f64(out, loss);
  write_u64(out, meta.size());
  for (const auto& [k, v] : meta) {
    write_str(out, k);
    write_str(out, v);
  }
  write_u64(out, arrays.size());
  for (const auto& [name, m] : arrays) {
    write_str(out, name);
    write_u64(out, static_cast<uint64_t>(m.rows()));
    write_u64(out, static_cast<uint64_t>(m.cols()));
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(m.size())));
  }
  if (!out) throw IoError("checkpoint: write failed for " + path);
}

Checkpoint Checkpoint::load(const std::string& path, const std::string& expected_kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  check<IoError>(in && std::memcmp(magic, kMagic, sizeof(magic)) == 0,
                 "checkpoint: bad magic in " + path);
  const uint32_t version = read_u32(in);
  check<IoError>(version == kVersion,
                 "checkpoint: version " + std::to_string(version) + " unsupported");
  Checkpoint c;
  c.kind = read_str(in);
  c.seed = read_u64(in);
  c.epoch = read_u32(in);
  c.loss = read_f64(in);
  const uint64_t n_meta = read_u64(in);
  for (uint64_t i = 0; i < n_meta; ++i) {
    std::string k = read_str(in);
    c.meta[k] = read_str(in);
  }
  const uint64_t n_arrays = read_u64(in);
  for (uint64_t i = 0; i < n_arrays; ++i) {
    std::string name = read_str(in);
    const uint64_t rows = read_u64(in);
    const uint64_t cols = read_u64(in);
    Mat m(rows, cols);
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * cols));
    c.arrays[name] = std::move(m);
  }
  check<IoError>(static_cast<bool>(in), "checkpoint: truncated file " + path);
  if (!expected_kind.empty() && c.kind != expected_kind) {
    throw Error("checkpoint: kind '" + c.kind + "' does not match expected '" + expected_kind +
                "'");
  }
  return c;
}

}  // namespace flexquad::nn
