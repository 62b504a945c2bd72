#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "das/rng.hpp"
#include "das/tape.hpp"

namespace das::ops {

/// W·x + b for a vector x.
Var affine(Tape& tape, Var x, Var weight, Var bias);

/// Row-wise affine map: each row r of `x` becomes W·r + b.
Var affine_rows(Tape& tape, Var x, Var weight, Var bias);

/// Elementwise max(0, x). The subgradient at 0 is 0.
Var relu(Tape& tape, Var x);

/// Max-shifted softmax of a vector, or of each row of a matrix.
Var softmax(Tape& tape, Var x);

struct Pooled {
  Var values;
  std::vector<std::size_t> argmax;
};

/// Column-wise maximum over the rows of `h`. Ties go to the lowest row.
Pooled max_over_time(Tape& tape, Var h);

/// Max-over-time applied independently to row segments
/// [offsets[k], offsets[k+1]); returns one pooled row per segment.
/// `argmax` holds absolute row indices, segment-major.
Pooled segment_max_over_time(Tape& tape, Var h, std::span<const std::size_t> offsets);

/// Inverted dropout; identity when `training` is false or `rate` is 0.
Var dropout(Tape& tape, Var x, double rate, bool training, Rng& rng);

/// (v + eps) / sum(v + eps). Rejects negative entries.
Var l1_normalize(Tape& tape, Var v, double eps);

/// Mean of the rows of a matrix.
Var mean_rows(Tape& tape, Var x);

Var sum(Tape& tape, Var x);
Var sum_squares(Tape& tape, Var x);

/// Σ weights[k] · terms[k] over scalar terms.
Var linear_combination(Tape& tape, std::span<const Var> terms, std::span<const double> weights);

struct Windows {
  Var rows;
  /// Row ranges per sequence: rows of sequence k are [offsets[k], offsets[k+1]).
  std::vector<std::size_t> offsets;
};

/// Concatenates `window` consecutive embedding rows at every start position
/// of each (already padded) index sequence. Backward scatters into `embedding`.
Windows gather_windows(Tape& tape, Var embedding,
                       std::span<const std::vector<std::int32_t>> sequences,
                       std::size_t window);

}  // namespace das::ops
