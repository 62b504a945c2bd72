#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "das/ops.hpp"
#include "das/rng.hpp"
#include "das/tape.hpp"
#include "das/tensor.hpp"

namespace das {

struct ModelShape {
  std::size_t vocab = 0;
  std::size_t embed_dim = 300;
  std::size_t window = 3;
  std::size_t hidden = 300;
  std::size_t classes = 3;

  bool operator==(const ModelShape&) const = default;
};

/// Encoder G (embedding + one convolution layer + max-over-time pooling) and
/// classifier F (softmax layer).
struct ModelParams {
  Tensor embedding;    // V × d; row 0 (padding) stays zero
  Tensor conv_weight;  // h × (l·d)
  Tensor conv_bias;    // h
  Tensor out_weight;   // C × h
  Tensor out_bias;     // C
  std::size_t window = 3;

  ModelShape shape() const;
  bool all_finite() const;

  /// Parameter tensors in checkpoint/declaration order.
  std::vector<Tensor*> tensors();
  std::vector<const Tensor*> tensors() const;

  bool operator==(const ModelParams&) const = default;
};

/// Glorot-uniform conv and output weights, zero biases.
ModelParams init_params(const ModelShape& shape, Tensor embedding, Rng& rng);

/// Tape handles for each parameter tensor.
struct BoundParams {
  Var embedding, conv_weight, conv_bias, out_weight, out_bias;
  std::size_t window = 3;

  std::vector<Var> vars() const { return {embedding, conv_weight, conv_bias, out_weight, out_bias}; }
};

BoundParams bind(Tape& tape, const ModelParams& params, bool trainable = true);

/// Zero-pads (l−1)/2 positions on the left and the remainder on the right so
/// every token anchors one window ("same" convolution).
std::vector<std::int32_t> pad_for_window(std::span<const std::int32_t> ids, std::size_t window);

/// Pooled features ξ (B × h, before dropout) for padded index sequences.
Var encode_batch(Tape& tape, const BoundParams& params,
                 std::span<const std::vector<std::int32_t>> padded_docs);

/// F_w·ξ + F_b per row.
Var classify_logits(Tape& tape, const BoundParams& params, Var features);

/// Per-document encoder output with the window-level detail filter analysis
/// needs.
struct Encoding {
  Tensor xi;                                     // h, after dropout when training
  Tensor hidden;                                 // windows × h, post-ReLU
  std::vector<std::vector<std::int32_t>> windows;  // token ids per window
};

/// Encodes one unpadded document.
Encoding encode(const ModelParams& params, std::span<const std::int32_t> doc,
                double dropout_rate = 0.0, bool training = false, Rng* rng = nullptr);

/// softmax(F_w·ξ + F_b).
Tensor classify(const Tensor& xi, const ModelParams& params);

/// Rescales each row of F_w whose L2 norm exceeds `max_norm` to norm max_norm.
void apply_max_norm(ModelParams& params, double max_norm = 3.0);

/// Eval-mode class distributions, one row per padded document.
Tensor predict_proba(const ModelParams& params,
                     std::span<const std::vector<std::int32_t>> padded_docs,
                     std::size_t chunk = 128);

/// Flat little-endian checkpoint: magic, version, V, d, l, h, C, vocab hash,
/// then E, W, b, F_w, F_b as float64.
void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t vocab_hash);

struct Checkpoint {
  ModelParams params;
  std::uint64_t vocab_hash = 0;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace das
