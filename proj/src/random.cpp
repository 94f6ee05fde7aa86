#include "blockprior/random.hpp"

#include <bit>

namespace blockprior {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kStreamSalt = 0x632BE59BD9B4E019ULL;
constexpr std::uint64_t kKeySalt = 0xD1B54A32D192ED03ULL;
}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  key0_ = mix64(seed ^ mix64(stream_id + kStreamSalt));
  key1_ = mix64(key0_ ^ kKeySalt);
}

RandomStream::result_type RandomStream::operator()() {
  const std::uint64_t x = key0_ + counter_ * kGolden;
  ++counter_;
  return mix64(mix64(x) ^ key1_);
}

double RandomStream::uniform() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform_open() {
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

RandomStream RandomStream::derive(std::uint64_t child) const {
  return RandomStream(seed_, hash_words({stream_id_, child}));
}

std::uint64_t hash_words(std::initializer_list<std::uint64_t> words) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::uint64_t w : words) {
    h = mix64(h ^ mix64(w + kGolden));
  }
  return h;
}

std::uint64_t double_bits(double x) { return std::bit_cast<std::uint64_t>(x); }

}  // namespace blockprior
