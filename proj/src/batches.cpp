#include "das/batches.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "das/error.hpp"

namespace das {

namespace {

std::vector<std::size_t> iota_vec(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

}  // namespace

std::size_t BatchStream::CyclingPool::draw(Rng& rng) {
  if (!shuffled_ || next_ == items_.size()) {
    rng.shuffle(std::span(items_));
    shuffled_ = true;
    next_ = 0;
  }
  return items_[next_++];
}

BatchStream::BatchStream(std::span<const int> source_labels, std::size_t target_size,
                         std::size_t union_size, std::size_t batch, bool balance_source,
                         int num_classes, Rng rng)
    : union_size_(union_size),
      batch_(batch),
      balance_(balance_source),
      target_pool_(iota_vec(target_size)),
      rng_(rng) {
  const std::size_t smallest = std::min({source_labels.size(), target_size, union_size});
  if (batch == 0 || batch > smallest) {
    throw ConfigError("batch size " + std::to_string(batch) + " exceeds the smallest pool (" +
                      std::to_string(smallest) + " documents)");
  }
  if (balance_) {
    std::vector<std::vector<std::size_t>> per_class(static_cast<std::size_t>(num_classes));
    for (std::size_t i = 0; i < source_labels.size(); ++i) {
      const int c = source_labels[i];
      if (c < 0 || c >= num_classes) {
        throw DataError("source label " + std::to_string(c) + " out of range");
      }
      per_class[static_cast<std::size_t>(c)].push_back(i);
    }
    for (auto& items : per_class) {
      if (!items.empty()) source_pools_.emplace_back(std::move(items));
    }
  } else {
    source_pools_.emplace_back(iota_vec(source_labels.size()));
  }
}

std::vector<BatchTriple> BatchStream::next_epoch() {
  std::vector<std::size_t> order = iota_vec(union_size_);
  rng_.shuffle(std::span(order));

  std::vector<BatchTriple> epoch(steps_per_epoch());
  for (std::size_t step = 0; step < epoch.size(); ++step) {
    BatchTriple& triple = epoch[step];
    triple.all.assign(order.begin() + static_cast<std::ptrdiff_t>(step * batch_),
                      order.begin() + static_cast<std::ptrdiff_t>((step + 1) * batch_));
    triple.source.reserve(batch_);
    for (std::size_t k = 0; k < batch_; ++k) {
      // Rotating the starting class keeps the one-extra draws from always
      // favoring class 0.
      const std::size_t pool = (balance_offset_ + k) % source_pools_.size();
      triple.source.push_back(source_pools_[pool].draw(rng_));
    }
    balance_offset_ = (balance_offset_ + batch_) % source_pools_.size();
    triple.target.reserve(batch_);
    for (std::size_t k = 0; k < batch_; ++k) triple.target.push_back(target_pool_.draw(rng_));
  }
  return epoch;
}

}  // namespace das
