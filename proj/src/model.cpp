#include "das/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <string>

#include "das/error.hpp"

namespace das {

namespace {

constexpr std::array<char, 8> kMagic = {'D', 'A', 'S', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint64_t kCheckpointVersion = 1;

void fill_glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double s = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.values()) v = rng.uniform(-s, s);
}

void put_u64(std::ostream& out, std::uint64_t v) {
  std::array<char, 8> bytes;
  for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

std::uint64_t get_u64(std::istream& in) {
  std::array<unsigned char, 8> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw DataError("checkpoint truncated");
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | bytes[i];
  return v;
}

void put_f64(std::ostream& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  put_u64(out, bits);
}

double get_f64(std::istream& in) {
  const std::uint64_t bits = get_u64(in);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

}  // namespace

ModelShape ModelParams::shape() const {
  ModelShape s;
  s.vocab = embedding.rank() == 2 ? embedding.dim(0) : 0;
  s.embed_dim = embedding.rank() == 2 ? embedding.dim(1) : 0;
  s.window = window;
  s.hidden = conv_bias.size();
  s.classes = out_bias.size();
  return s;
}

bool ModelParams::all_finite() const {
  for (const Tensor* t : tensors()) {
    if (!t->all_finite()) return false;
  }
  return true;
}

std::vector<Tensor*> ModelParams::tensors() {
  return {&embedding, &conv_weight, &conv_bias, &out_weight, &out_bias};
}

std::vector<const Tensor*> ModelParams::tensors() const {
  return {&embedding, &conv_weight, &conv_bias, &out_weight, &out_bias};
}

ModelParams init_params(const ModelShape& shape, Tensor embedding, Rng& rng) {
  if (shape.window == 0 || shape.hidden == 0 || shape.classes < 2 || shape.embed_dim == 0) {
    throw ConfigError("model needs window ≥ 1, hidden ≥ 1, embed_dim ≥ 1 and at least 2 classes");
  }
  if (embedding.rank() != 2 || embedding.dim(0) != shape.vocab ||
      embedding.dim(1) != shape.embed_dim) {
    throw ShapeError("embedding matrix " + shape_string(embedding.shape()) + " does not match " +
                     std::to_string(shape.vocab) + "x" + std::to_string(shape.embed_dim));
  }
  ModelParams p;
  p.window = shape.window;
  p.embedding = std::move(embedding);
  for (double& v : p.embedding.row(0)) v = 0.0;
  const std::size_t fan_in = shape.window * shape.embed_dim;
  p.conv_weight = Tensor({shape.hidden, fan_in});
  fill_glorot(p.conv_weight, fan_in, shape.hidden, rng);
  p.conv_bias = Tensor({shape.hidden});
  p.out_weight = Tensor({shape.classes, shape.hidden});
  fill_glorot(p.out_weight, shape.hidden, shape.classes, rng);
  p.out_bias = Tensor({shape.classes});
  return p;
}

BoundParams bind(Tape& tape, const ModelParams& params, bool trainable) {
  BoundParams b;
  b.embedding = tape.input(params.embedding, trainable);
  b.conv_weight = tape.input(params.conv_weight, trainable);
  b.conv_bias = tape.input(params.conv_bias, trainable);
  b.out_weight = tape.input(params.out_weight, trainable);
  b.out_bias = tape.input(params.out_bias, trainable);
  b.window = params.window;
  return b;
}

std::vector<std::int32_t> pad_for_window(std::span<const std::int32_t> ids, std::size_t window) {
  const std::size_t left = (window - 1) / 2;
  const std::size_t right = window - 1 - left;
  std::vector<std::int32_t> out(left, 0);
  out.reserve(ids.size() + window - 1);
  out.insert(out.end(), ids.begin(), ids.end());
  out.insert(out.end(), right, 0);
  return out;
}

Var encode_batch(Tape& tape, const BoundParams& params,
                 std::span<const std::vector<std::int32_t>> padded_docs) {
  const ops::Windows windows = ops::gather_windows(tape, params.embedding, padded_docs,
                                                   params.window);
  const Var hidden =
      ops::relu(tape, ops::affine_rows(tape, windows.rows, params.conv_weight, params.conv_bias));
  return ops::segment_max_over_time(tape, hidden, windows.offsets).values;
}

Var classify_logits(Tape& tape, const BoundParams& params, Var features) {
  return ops::affine_rows(tape, features, params.out_weight, params.out_bias);
}

Encoding encode(const ModelParams& params, std::span<const std::int32_t> doc,
                double dropout_rate, bool training, Rng* rng) {
  if (doc.empty()) throw std::invalid_argument("encode: empty document");
  const std::vector<std::int32_t> padded = pad_for_window(doc, params.window);
  Tape tape;
  const BoundParams b = bind(tape, params, false);
  const std::vector<std::vector<std::int32_t>> one{padded};
  const ops::Windows w = ops::gather_windows(tape, b.embedding, one, params.window);
  const Var hidden = ops::relu(tape, ops::affine_rows(tape, w.rows, b.conv_weight, b.conv_bias));
  Var xi = ops::max_over_time(tape, hidden).values;
  if (training && dropout_rate > 0.0) {
    if (!rng) throw std::invalid_argument("encode: training-mode dropout needs a generator");
    xi = ops::dropout(tape, xi, dropout_rate, true, *rng);
  }
  Encoding e;
  e.xi = tape.value(xi);
  e.hidden = tape.value(hidden);
  for (std::size_t start = 0; start + params.window <= padded.size(); ++start) {
    e.windows.emplace_back(padded.begin() + static_cast<std::ptrdiff_t>(start),
                           padded.begin() + static_cast<std::ptrdiff_t>(start + params.window));
  }
  return e;
}

Tensor classify(const Tensor& xi, const ModelParams& params) {
  Tape tape;
  const Var x = tape.constant(xi);
  const Var logits = ops::affine(tape, x, tape.constant(params.out_weight),
                                 tape.constant(params.out_bias));
  return tape.value(ops::softmax(tape, logits));
}

void apply_max_norm(ModelParams& params, double max_norm) {
  Tensor& w = params.out_weight;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    auto row = w.row(r);
    double sq = 0.0;
    for (double v : row) sq += v * v;
    const double norm = std::sqrt(sq);
    if (norm > max_norm) {
      const double scale = max_norm / norm;
      for (double& v : row) v *= scale;
    }
  }
}

Tensor predict_proba(const ModelParams& params,
                     std::span<const std::vector<std::int32_t>> padded_docs, std::size_t chunk) {
  const std::size_t classes = params.out_bias.size();
  Tensor out({padded_docs.size(), classes});
  for (std::size_t begin = 0; begin < padded_docs.size(); begin += chunk) {
    const std::size_t end = std::min(begin + chunk, padded_docs.size());
    Tape tape;
    const BoundParams b = bind(tape, params, false);
    const Var xi = encode_batch(tape, b, padded_docs.subspan(begin, end - begin));
    const Tensor& probs = tape.value(ops::softmax(tape, classify_logits(tape, b, xi)));
    std::copy(probs.values().begin(), probs.values().end(), out.data() + begin * classes);
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::uint64_t vocab_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint " + path.string());
  const ModelShape s = params.shape();
  out.write(kMagic.data(), kMagic.size());
  for (std::uint64_t v : {kCheckpointVersion, std::uint64_t{s.vocab}, std::uint64_t{s.embed_dim},
                          std::uint64_t{s.window}, std::uint64_t{s.hidden},
                          std::uint64_t{s.classes}, vocab_hash}) {
    put_u64(out, v);
  }
  for (const Tensor* t : params.tensors()) {
    for (double v : t->values()) put_f64(out, v);
  }
  if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw DataError(path.string() + " is not a checkpoint file");
  const std::uint64_t version = get_u64(in);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelShape s;
  s.vocab = get_u64(in);
  s.embed_dim = get_u64(in);
  s.window = get_u64(in);
  s.hidden = get_u64(in);
  s.classes = get_u64(in);
  Checkpoint ck;
  ck.vocab_hash = get_u64(in);
  constexpr std::uint64_t kLimit = std::uint64_t{1} << 32;
  if (s.vocab >= kLimit || s.embed_dim >= kLimit || s.window >= kLimit || s.hidden >= kLimit ||
      s.classes >= kLimit || s.window == 0) {
    throw DataError("checkpoint header has implausible dimensions");
  }
  ModelParams& p = ck.params;
  p.window = s.window;
  p.embedding = Tensor({s.vocab, s.embed_dim});
  p.conv_weight = Tensor({s.hidden, s.window * s.embed_dim});
  p.conv_bias = Tensor({s.hidden});
  p.out_weight = Tensor({s.classes, s.hidden});
  p.out_bias = Tensor({s.classes});
  for (Tensor* t : p.tensors()) {
    for (double& v : t->values()) v = get_f64(in);
  }
  in.peek();
  if (!in.eof()) throw DataError("checkpoint " + path.string() + " has trailing bytes");
  return ck;
}

}  // namespace das
