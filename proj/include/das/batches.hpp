#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "das/rng.hpp"

namespace das {

/// Indices for one training step: into the labeled source pool, the target
/// pool, and the union of all training documents (rows of the ensemble).
struct BatchTriple {
  std::vector<std::size_t> source;
  std::vector<std::size_t> target;
  std::vector<std::size_t> all;
};

/// Epoch-structured minibatch stream.
///
/// An epoch is ⌊N / batch⌋ steps over one shuffled pass of the union. The
/// source and target pools are shuffled independently and cycled, reshuffling
/// when exhausted. With class balancing, source batches are drawn round-robin
/// from per-class pools so class counts differ by at most one.
class BatchStream {
 public:
  BatchStream(std::span<const int> source_labels, std::size_t target_size,
              std::size_t union_size, std::size_t batch, bool balance_source, int num_classes,
              Rng rng);

  std::size_t steps_per_epoch() const { return union_size_ / batch_; }

  std::vector<BatchTriple> next_epoch();

 private:
  class CyclingPool {
   public:
    explicit CyclingPool(std::vector<std::size_t> items) : items_(std::move(items)) {}
    bool empty() const { return items_.empty(); }
    std::size_t draw(Rng& rng);

   private:
    std::vector<std::size_t> items_;
    std::size_t next_ = 0;
    bool shuffled_ = false;
  };

  std::size_t union_size_;
  std::size_t batch_;
  bool balance_;
  std::vector<CyclingPool> source_pools_;  // one per class when balancing
  CyclingPool target_pool_;
  std::size_t balance_offset_ = 0;
  Rng rng_;
};

}  // namespace das
