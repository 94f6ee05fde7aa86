#pragma once

#include <cstdint>
#include <initializer_list>
#include <limits>

namespace blockprior {

/// Counter-based 64-bit random stream.
///
/// Output i of stream (seed, stream_id) is a pure function of
/// (seed, stream_id, i):
///
///     key0 = mix64(seed ^ mix64(stream_id + 0x632BE59BD9B4E019))
///     key1 = mix64(key0 ^ 0xD1B54A32D192ED03)
///     out  = mix64(mix64(key0 + i * 0x9E3779B97F4A7C15) ^ key1)
///
/// where mix64 is the SplitMix64 finalizer (shifts 30/27/31, multipliers
/// 0xBF58476D1CE4E5B9 and 0x94D049BB133111EB). The double round keeps
/// streams that differ only in stream_id from sharing a Weyl sequence.
///
/// Satisfies UniformRandomBitGenerator. Single owner: derive child streams
/// by stream_id instead of sharing one stream across threads.
class RandomStream {
 public:
  using result_type = std::uint64_t;

  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform on the open interval (0, 1).
  double uniform_open();

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }
  std::uint64_t counter() const { return counter_; }

  /// Child stream with the same seed and a stream id derived from this
  /// stream's id and `child`.
  RandomStream derive(std::uint64_t child) const;

  // Spare value of the polar normal method; part of the stream state so
  // that normal draws stay a pure function of the counter history.
  bool has_spare_normal = false;
  double spare_normal = 0.0;

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t key0_;
  std::uint64_t key1_;
  std::uint64_t counter_ = 0;
};

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a list of words, used to derive stream ids from
/// structured identifiers such as (cell, trial).
std::uint64_t hash_words(std::initializer_list<std::uint64_t> words);

/// Bit pattern of a double, for hashing real-valued identifiers.
std::uint64_t double_bits(double x);

}  // namespace blockprior
