#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "das/corpus.hpp"

namespace das {

/// Two-domain sentiment corpus generator.
///
/// Each class owns a set of shared sentiment words plus, per domain, a set of
/// domain-specific sentiment words with the same class association but
/// disjoint surface forms. `shift` is the probability that a sentiment slot
/// uses the domain-specific form. The remaining positions are filler: common
/// words or per-domain style words.
struct SyntheticSpec {
  std::size_t shared_words_per_class = 6;
  std::size_t domain_words_per_class = 6;
  std::size_t common_filler_words = 60;
  std::size_t domain_style_words = 30;

  std::size_t source_labeled = 2000;
  std::size_t source_unlabeled = 0;
  std::size_t target_unlabeled = 2000;
  std::size_t target_test = 1000;

  std::size_t min_length = 12;
  std::size_t max_length = 24;
  /// Fraction of positions that carry a sentiment word.
  double sentiment_density = 0.2;
  /// Fraction of filler positions drawn from the domain's style words.
  double style_rate = 0.3;
  /// Probability a sentiment word is drawn from a random other class.
  double noise = 0.1;
  std::vector<double> class_priors{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double shift = 0.7;
  std::uint64_t seed = 1;

  /// Stand-in for pretrained word vectors: when nonzero, every sentiment word
  /// of class c gets prototype_c + uniform(±embedding_noise) per coordinate,
  /// where prototype entries are ±embedding_signal; other words get noise
  /// only. Same-class words of both domains therefore start out similar.
  std::size_t embedding_dim = 0;
  double embedding_signal = 0.25;
  double embedding_noise = 0.25;

  /// Throws ConfigError if priors do not sum to 1 or shift ∉ [0, 1].
  void validate() const;
};

struct SyntheticCorpora {
  Corpus source_labeled;
  Corpus source_unlabeled;
  Corpus target_unlabeled;
  Corpus target_test;
  /// Word vectors in generation order; empty when embedding_dim is 0.
  std::vector<std::pair<std::string, std::vector<double>>> embeddings;
};

/// Flat `key = value` text with the field names above; priors are comma
/// separated. Unknown keys are a ConfigError.
SyntheticSpec parse_synthetic_spec(std::string_view text);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
std::string format_synthetic_spec(const SyntheticSpec& spec);

SyntheticCorpora generate_synthetic(const SyntheticSpec& spec);

/// Writes source_labeled.jsonl, source_unlabeled.jsonl, target_unlabeled.jsonl
/// and target_test.jsonl (label format) into `dir`, plus embeddings.txt when
/// word vectors were generated.
void write_synthetic(const SyntheticCorpora& corpora, const std::filesystem::path& dir);

}  // namespace das
