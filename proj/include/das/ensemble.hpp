#pragma once

#include <span>
#include <vector>

#include "das/model.hpp"
#include "das/tensor.hpp"

namespace das {

/// Per-row argmax as one-hot rows; ties go to the lowest class index.
Tensor to_targets(const Tensor& z);

/// Eval-mode predictions F(G(x_i)) for every training document.
Tensor predict_all(const ModelParams& params,
                   std::span<const std::vector<std::int32_t>> padded_docs);

/// Exponential moving average of per-epoch predictions (Z) and the one-hot
/// bootstrapping targets derived from it.
class EnsembleState {
 public:
  EnsembleState(std::size_t documents, std::size_t classes, double alpha);

  /// Z ← αZ + (1−α)Z′, then z̃ ← one-hot(Z).
  void update(const Tensor& z_prime);

  const Tensor& predictions() const { return z_; }
  const Tensor& targets() const { return z_tilde_; }
  /// Target rows for the given document indices, in order.
  Tensor targets_for(std::span<const std::size_t> rows) const;

  double alpha() const { return alpha_; }
  int epoch_count() const { return epoch_count_; }

 private:
  Tensor z_;
  Tensor z_tilde_;
  double alpha_;
  int epoch_count_ = 0;
};

}  // namespace das
