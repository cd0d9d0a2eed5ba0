#pragma once

#include <array>
#include <cstdint>
#include <random>

namespace shotnoise {

/// Seed provenance carried by every sampled object.
struct SeedInfo {
  std::uint64_t master = 0;
  std::uint64_t replication = 0;
  friend bool operator==(const SeedInfo&, const SeedInfo&) = default;
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace detail

// Independent generator per (master, replication, substream). The triple is
// hashed and fed through seed_seq, so no generator state is ever shared and
// results do not depend on how replications are scheduled.
class RngStream {
 public:
  using engine_type = std::mt19937_64;
  using result_type = engine_type::result_type;

  RngStream(SeedInfo info, std::uint64_t substream = 0) : info_(info), engine_(make(info, substream)) {}

  [[nodiscard]] const SeedInfo& seed_info() const noexcept { return info_; }

  /// Child stream for a nested purpose (e.g. conditional draws), still keyed on the replication.
  [[nodiscard]] RngStream child(std::uint64_t substream) const { return RngStream(info_, substream + 1); }

  static constexpr result_type min() { return engine_type::min(); }
  static constexpr result_type max() { return engine_type::max(); }
  result_type operator()() { return engine_(); }

  /// Uniform on [0,1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  static engine_type make(SeedInfo info, std::uint64_t substream) {
    const std::uint64_t a = detail::splitmix64(info.master);
    const std::uint64_t b = detail::splitmix64(a ^ detail::splitmix64(info.replication + 0x632be59bd9b4e019ULL));
    const std::uint64_t c = detail::splitmix64(b ^ detail::splitmix64(substream + 0x2545f4914f6cdd1dULL));
    std::array<std::uint32_t, 6> words{
        static_cast<std::uint32_t>(info.master), static_cast<std::uint32_t>(info.master >> 32),
        static_cast<std::uint32_t>(info.replication), static_cast<std::uint32_t>(info.replication >> 32),
        static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32)};
    std::seed_seq seq(words.begin(), words.end());
    return engine_type(seq);
  }

  SeedInfo info_;
  engine_type engine_;
};

}  // namespace shotnoise
