#include "flexquad/residual/dataset.hpp"

#include <cstring>
#include <fstream>

namespace flexquad::residual {

std::size_t TrajectoryDataset::total_records() const {
  std::size_t n = 0;
  for (const auto& leg : legs) n += leg.records.size();
  return n;
}

double TrajectoryDataset::acceleration_consistency_error() const {
  const int hold = records_per_hold();
  const double dt = 1.0 / record_rate;
  double num = 0.0, den = 0.0;
  for (const auto& leg : legs) {
    const auto& r = leg.records;
    for (std::size_t k = 1; k + 1 < r.size(); ++k) {
      // The input switches exactly at multiples of the hold period; the
      // centered window (k-1, k+1) then contains an acceleration jump.
      if (hold > 1 && k % static_cast<std::size_t>(hold) == 0) continue;
      const Vec2 fd = (r[k + 1].qdot_s - r[k - 1].qdot_s) / (2.0 * dt);
      num += (fd - r[k].qddot_s).squaredNorm();
      den += r[k].qddot_s.squaredNorm();
    }
  }
  if (den == 0.0) return 0.0;
  return std::sqrt(num / den);
}

namespace {

TrajectoryDataset split(const TrajectoryDataset& d, double val_fraction, bool validation) {
  check<Error>(val_fraction > 0.0 && val_fraction <= 0.5,
               "TrajectoryDataset: validation fraction must be in (0, 0.5]");
  TrajectoryDataset out;
  out.provenance = d.provenance;
  out.seed = d.seed;
  out.record_rate = d.record_rate;
  out.hold_rate = d.hold_rate;
  for (const auto& leg : d.legs) {
    LegSequence s;
    s.leg_id = leg.leg_id;
    s.mirrored = leg.mirrored;
    const std::size_t cut =
        static_cast<std::size_t>(static_cast<double>(leg.records.size()) * (1.0 - val_fraction));
    if (validation) {
      s.records.assign(leg.records.begin() + static_cast<long>(cut), leg.records.end());
    } else {
      s.records.assign(leg.records.begin(), leg.records.begin() + static_cast<long>(cut));
    }
    out.legs.push_back(std::move(s));
  }
  return out;
}

constexpr char kMagic[6] = {'F', 'Q', 'D', 'S', '0', '\n'};

}  // namespace

TrajectoryDataset TrajectoryDataset::train_split(double val_fraction) const {
  return split(*this, val_fraction, false);
}

TrajectoryDataset TrajectoryDataset::validation_split(double val_fraction) const {
  return split(*this, val_fraction, true);
}

void TrajectoryDataset::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("dataset: cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  const uint32_t version = kSchemaVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  const uint8_t prov = static_cast<uint8_t>(provenance);
  out.write(reinterpret_cast<const char*>(&prov), 1);
  out.write(reinterpret_cast<const char*>(&seed), 8);
  out.write(reinterpret_cast<const char*>(&record_rate), 8);
  out.write(reinterpret_cast<const char*>(&hold_rate), 8);
  const uint32_t n_legs = static_cast<uint32_t>(legs.size());
  out.write(reinterpret_cast<const char*>(&n_legs), 4);
  for (const auto& leg : legs) {
    const int32_t id = leg.leg_id;
    const uint8_t mir = leg.mirrored ? 1 : 0;
    const uint64_t count = leg.records.size();
    out.write(reinterpret_cast<const char*>(&id), 4);
    out.write(reinterpret_cast<const char*>(&mir), 1);
    out.write(reinterpret_cast<const char*>(&count), 8);
    for (const auto& r : leg.records) {
      double row[9] = {r.t,         r.q_s[0],    r.q_s[1],  r.qdot_s[0], r.qdot_s[1],
                       r.qddot_s[0], r.qddot_s[1], r.u[0],    r.u[1]};
      out.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
  }
  if (!out) throw IoError("dataset: write failed for " + path);
}

TrajectoryDataset TrajectoryDataset::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("dataset: cannot open " + path);
  char magic[6];
  in.read(magic, sizeof(magic));
  check<IoError>(in && std::memcmp(magic, kMagic, sizeof(magic)) == 0,
                 "dataset: bad magic in " + path);
  uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), 4);
  check<IoError>(version == kSchemaVersion, "dataset: unsupported schema version");
  TrajectoryDataset d;
  uint8_t prov = 0;
  in.read(reinterpret_cast<char*>(&prov), 1);
  d.provenance = static_cast<Provenance>(prov);
  in.read(reinterpret_cast<char*>(&d.seed), 8);
  in.read(reinterpret_cast<char*>(&d.record_rate), 8);
  in.read(reinterpret_cast<char*>(&d.hold_rate), 8);
  uint32_t n_legs = 0;
  in.read(reinterpret_cast<char*>(&n_legs), 4);
  for (uint32_t i = 0; i < n_legs; ++i) {
    LegSequence leg;
    int32_t id = 0;
    uint8_t mir = 0;
    uint64_t count = 0;
    in.read(reinterpret_cast<char*>(&id), 4);
    in.read(reinterpret_cast<char*>(&mir), 1);
    in.read(reinterpret_cast<char*>(&count), 8);
    check<IoError>(count < (1ULL << 32), "dataset: corrupt record count");
    leg.leg_id = id;
    leg.mirrored = mir != 0;
    leg.records.resize(count);
    for (auto& r : leg.records) {
      double row[9];
      in.read(reinterpret_cast<char*>(row), sizeof(row));
      r.t = row[0];
      r.q_s = Vec2(row[1], row[2]);
      r.qdot_s = Vec2(row[3], row[4]);
      r.qddot_s = Vec2(row[5], row[6]);
      r.u = Vec2(row[7], row[8]);
    }
    d.legs.push_back(std::move(leg));
  }
  check<IoError>(static_cast<bool>(in), "dataset: truncated file " + path);

  if (d.provenance != Provenance::kFullModelContacts) {
    const double err = d.acceleration_consistency_error();
    if (err >= kAccelGateRms) {
      throw Error("dataset: acceleration-consistency gate failed (" + std::to_string(err) +
                  " >= " + std::to_string(kAccelGateRms) + ")");
    }
  }
  return d;
}

Mat TrajectoryDataset::stack_inputs() const {
  Mat X(total_records(), 6);
  Eigen::Index at = 0;
  for (const auto& leg : legs) {
    for (const auto& r : leg.records) {
      X.row(at++) << r.q_s[0], r.q_s[1], r.qdot_s[0], r.qdot_s[1], r.u[0], r.u[1];
    }
  }
  return X;
}

Mat TrajectoryDataset::stack_accelerations() const {
  Mat Y(total_records(), 2);
  Eigen::Index at = 0;
  for (const auto& leg : legs) {
    for (const auto& r : leg.records) Y.row(at++) << r.qddot_s[0], r.qddot_s[1];
  }
  return Y;
}

}  // namespace flexquad::residual
