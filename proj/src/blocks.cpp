#include "blockprior/blocks.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace blockprior {

BlockScheme BlockScheme::build(BlockKind kind, int j_max, int block_size) {
  if (j_max < 1) throw std::invalid_argument("BlockScheme: j_max must be >= 1");
  BlockScheme s;
  s.kind_ = kind;
  s.j_max_ = j_max;
  switch (kind) {
    case BlockKind::exponential:
      // [x] read as floor; collapse repeated boundaries should any appear.
      for (int k = 0;; ++k) {
        const double l = std::floor(std::exp(static_cast<double>(k)));
        if (l > j_max) break;
        const int li = static_cast<int>(l);
        if (s.starts_.empty() || li > s.starts_.back()) s.starts_.push_back(li);
      }
      break;
    case BlockKind::dyadic:
      for (long long l = 1; l <= j_max; l *= 2) s.starts_.push_back(static_cast<int>(l));
      break;
    case BlockKind::constant:
      if (block_size < 1) throw std::invalid_argument("BlockScheme: constant block size must be >= 1");
      s.block_size_ = block_size;
      for (long long l = 1; l <= j_max; l += block_size) s.starts_.push_back(static_cast<int>(l));
      break;
  }
  return s;
}

int BlockScheme::block_of(int j) const {
  if (j < 1 || j > j_max_) {
    throw std::out_of_range("BlockScheme::block_of: index " + std::to_string(j) + " outside [1, " +
                            std::to_string(j_max_) + "]");
  }
  const auto it = std::upper_bound(starts_.begin(), starts_.end(), j);
  return static_cast<int>(it - starts_.begin()) - 1;
}

std::string BlockScheme::describe() const {
  switch (kind_) {
    case BlockKind::exponential: return "exponential";
    case BlockKind::dyadic: return "dyadic";
    case BlockKind::constant: return "constant(" + std::to_string(block_size_) + ")";
  }
  return "unknown";
}

}  // namespace blockprior
