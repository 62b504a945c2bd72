#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "das/corpus.hpp"
#include "das/rng.hpp"
#include "das/tensor.hpp"

namespace das {

/// Token ↔ index map. Index 0 is padding and 1 is the unknown token; content
/// tokens follow in descending corpus frequency, ties by first occurrence.
class Vocab {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  Vocab();
  /// `tokens` must start with the padding and unknown entries.
  explicit Vocab(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(std::int32_t index) const { return tokens_.at(index); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// Index of `token`, or kUnk when absent.
  std::int32_t index(std::string_view token) const;
  bool contains(std::string_view token) const;

  std::vector<std::int32_t> encode(std::span<const std::string> tokens) const;

  /// FNV-1a over the newline-joined token list; guards checkpoint/vocab pairing.
  std::uint64_t content_hash() const;

  void save(const std::filesystem::path& path) const;
  static Vocab load(const std::filesystem::path& path);

  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
};

/// Keeps the `max_content` most frequent tokens over all supplied corpora.
Vocab build_vocab(std::span<const Corpus* const> corpora, std::size_t max_content);

inline constexpr double kOovInitRange = 0.25;

struct PretrainedEmbeddings {
  Tensor matrix;            // vocab.size() × dim
  std::size_t matched = 0;  // vocabulary rows taken from the file
};

/// Rows for tokens found in the file are copied verbatim; every other
/// non-padding row is uniform in [−0.25, 0.25]; the padding row is zero.
PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path,
                                                const Vocab& vocab, std::size_t dim, Rng& rng);
PretrainedEmbeddings parse_pretrained_embeddings(std::string_view contents, const Vocab& vocab,
                                                 std::size_t dim, Rng& rng);

/// Embeddings with no pretrained source: all non-padding rows random.
Tensor random_embeddings(const Vocab& vocab, std::size_t dim, Rng& rng);

}  // namespace das
