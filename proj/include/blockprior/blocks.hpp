#pragma once

#include <string>
#include <vector>

namespace blockprior {

enum class BlockKind { exponential, dyadic, constant };

/// Partition of coordinates 1..j_max into consecutive blocks.
///
/// Block k covers [start(k), end(k)) in 1-based indices. exponential uses
/// l_k = floor(e^k), dyadic uses l_k = 2^k, constant(m) uses l_k = 1 + k m.
/// The last block is cut at j_max.
class BlockScheme {
 public:
  static BlockScheme build(BlockKind kind, int j_max, int block_size = 0);
  static BlockScheme exponential(int j_max) { return build(BlockKind::exponential, j_max); }
  static BlockScheme dyadic(int j_max) { return build(BlockKind::dyadic, j_max); }
  static BlockScheme constant(int block_size, int j_max) { return build(BlockKind::constant, j_max, block_size); }

  BlockKind kind() const { return kind_; }
  int block_size_param() const { return block_size_; }
  int j_max() const { return j_max_; }
  int num_blocks() const { return static_cast<int>(starts_.size()); }
  const std::vector<int>& boundaries() const { return starts_; }

  int start(int k) const { return starts_.at(k); }
  int end(int k) const { return k + 1 < num_blocks() ? starts_[k + 1] : j_max_ + 1; }
  int size(int k) const { return end(k) - start(k); }

  /// Block index containing coordinate j (1-based), binary search.
  int block_of(int j) const;

  std::string describe() const;

 private:
  BlockKind kind_ = BlockKind::exponential;
  int block_size_ = 0;
  int j_max_ = 0;
  std::vector<int> starts_;
};

}  // namespace blockprior
