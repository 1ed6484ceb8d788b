#include "paris/workload.hpp"

#include <algorithm>
#include <cmath>

namespace paris {

void WorkloadSpec::validate() const {
  if (reads_per_tx + writes_per_tx == 0) throw ConfigError("workload: transactions need at least one operation");
  if (local_pct > 100) throw ConfigError("workload: local_pct must be within 0..100");
  if (partitions_per_tx == 0) throw ConfigError("workload: partitions_per_tx must be positive");
  if (keys_per_partition == 0) throw ConfigError("workload: keys_per_partition must be positive");
  if (zipf_theta < 0 || zipf_theta == 1.0) throw ConfigError("workload: zipf_theta must be >= 0 and != 1");
  if (sessions_per_dc == 0) throw ConfigError("workload: sessions_per_dc must be positive");
}

ZipfianGenerator::ZipfianGenerator(std::uint64_t n, double theta) : n_(n), theta_(theta) {
  if (n == 0) throw ConfigError("zipfian: empty range");
  zetan_ = 0;
  for (std::uint64_t i = 1; i <= n; ++i) zetan_ += 1.0 / std::pow(static_cast<double>(i), theta);
  double zeta2 = 1.0 + (n >= 2 ? 1.0 / std::pow(2.0, theta) : 0.0);
  alpha_ = 1.0 / (1.0 - theta);
  eta_ = n >= 2 ? (1.0 - std::pow(2.0 / static_cast<double>(n), 1.0 - theta)) / (1.0 - zeta2 / zetan_) : 0.0;
}

std::uint64_t ZipfianGenerator::next(std::mt19937_64& rng) const {
  if (n_ == 1) return 0;
  double u = std::generate_canonical<double, 53>(rng);
  double uz = u * zetan_;
  if (uz < 1.0) return 0;
  if (uz < 1.0 + std::pow(0.5, theta_)) return 1;
  auto rank = static_cast<std::uint64_t>(static_cast<double>(n_) * std::pow(eta_ * u - eta_ + 1.0, alpha_));
  return std::min(rank, n_ - 1);
}

KeyUniverse::KeyUniverse(std::uint32_t partitions, std::uint32_t keys_per_partition)
    : per_partition_(keys_per_partition), keys_(partitions) {
  std::uint32_t filled = 0;
  for (std::uint64_t i = 0; filled < partitions; ++i) {
    Key k = "k" + std::to_string(i);
    auto& bucket = keys_[partition_of(k, partitions)];
    if (bucket.size() < keys_per_partition) {
      bucket.push_back(std::move(k));
      if (bucket.size() == keys_per_partition) ++filled;
    }
  }
  for (auto& bucket : keys_) {
    std::sort(bucket.begin(), bucket.end(), [](const Key& a, const Key& b) {
      return fnv1a64(a) != fnv1a64(b) ? fnv1a64(a) < fnv1a64(b) : a < b;
    });
  }
}

namespace {

std::uint64_t pick(std::mt19937_64& rng, std::uint64_t n) { return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(rng); }

std::vector<PartitionId> choose(std::vector<PartitionId> pool, std::size_t count, std::mt19937_64& rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) std::swap(pool[i], pool[i + pick(rng, pool.size() - i)]);
  pool.resize(count);
  return pool;
}

}  // namespace

TxPlan generate_transaction(const WorkloadSpec& spec, const Topology& topology, const KeyUniverse& universe,
                            const ZipfianGenerator& zipf, DcId dc, std::mt19937_64& rng) {
  TxPlan plan;
  plan.local = pick(rng, 100) < spec.local_pct;
  if (plan.local) {
    plan.partitions = choose(topology.partitions_in(dc), spec.partitions_per_tx, rng);
  } else {
    std::vector<PartitionId> all(topology.partitions());
    for (PartitionId n = 0; n < all.size(); ++n) all[n] = n;
    plan.partitions = choose(all, spec.partitions_per_tx, rng);
    std::vector<PartitionId> remote;
    for (PartitionId n : all) {
      if (!topology.hosts(dc, n)) remote.push_back(n);
    }
    bool any_remote = std::any_of(plan.partitions.begin(), plan.partitions.end(),
                                  [&](PartitionId n) { return !topology.hosts(dc, n); });
    if (!any_remote && !remote.empty()) plan.partitions.back() = remote[pick(rng, remote.size())];
  }
  std::sort(plan.partitions.begin(), plan.partitions.end());
  auto key_in = [&](std::size_t i) {
    PartitionId n = plan.partitions[i % plan.partitions.size()];
    return universe.keys(n)[zipf.next(rng)];
  };
  for (std::uint32_t i = 0; i < spec.reads_per_tx; ++i) plan.reads.push_back(key_in(i));
  for (std::uint32_t i = 0; i < spec.writes_per_tx; ++i) plan.writes.push_back(key_in(i));
  return plan;
}

std::string random_value(std::uint32_t size, std::mt19937_64& rng) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  std::string out(size, ' ');
  for (char& c : out) c = kAlphabet[pick(rng, sizeof kAlphabet - 1)];
  return out;
}

std::uint64_t session_seed(std::uint64_t seed, SessionId session) {
  // splitmix64 finalizer over the combined inputs
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(session) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace paris
