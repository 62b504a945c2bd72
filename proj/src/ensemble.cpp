#include "das/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "das/error.hpp"

namespace das {

Tensor to_targets(const Tensor& z) {
  Tensor out(z.shape(), 0.0);
  for (std::size_t r = 0; r < z.rows(); ++r) {
    auto row = z.row(r);
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
      // NaN never compares greater, so a NaN entry cannot win.
      if (row[j] > row[best] || (std::isnan(row[best]) && !std::isnan(row[j]))) best = j;
    }
    out.row(r)[best] = 1.0;
  }
  return out;
}

Tensor predict_all(const ModelParams& params,
                   std::span<const std::vector<std::int32_t>> padded_docs) {
  return predict_proba(params, padded_docs);
}

EnsembleState::EnsembleState(std::size_t documents, std::size_t classes, double alpha)
    : z_({documents, classes}, 0.0), alpha_(alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) {
    throw ConfigError("ensemble momentum alpha must lie in [0, 1), got " + std::to_string(alpha));
  }
  z_tilde_ = to_targets(z_);
}

void EnsembleState::update(const Tensor& z_prime) {
  if (!z_prime.same_shape(z_)) {
    throw ShapeError("ensemble update: expected " + shape_string(z_.shape()) + ", got " +
                     shape_string(z_prime.shape()));
  }
  for (std::size_t i = 0; i < z_.size(); ++i) {
    z_[i] = alpha_ * z_[i] + (1.0 - alpha_) * z_prime[i];
  }
  z_tilde_ = to_targets(z_);
  ++epoch_count_;
}

Tensor EnsembleState::targets_for(std::span<const std::size_t> rows) const {
  const std::size_t classes = z_tilde_.cols();
  Tensor out({rows.size(), classes});
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (rows[k] >= z_tilde_.rows()) throw std::out_of_range("ensemble row out of range");
    const auto src = z_tilde_.row(rows[k]);
    std::copy(src.begin(), src.end(), out.row(k).begin());
  }
  return out;
}

}  // namespace das
