#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace das {

/// Sentiment classes; the index is the model's output position.
enum class Label : int { kNegative = 0, kNeutral = 1, kPositive = 2 };
inline constexpr int kNumLabels = 3;

std::string_view label_name(int label);
/// "positive" | "negative" | "neutral".
int parse_label(std::string_view name);

enum class RatingScheme { kAmazon5, kImdb10 };
RatingScheme parse_rating_scheme(std::string_view name);
std::string_view to_string(RatingScheme scheme);

/// amazon5: <3 negative, 3 neutral, >3 positive (scale 1..5).
/// imdb10: <5 negative, 5 or 6 neutral, >6 positive (scale 1..10).
int map_rating_to_label(double rating, RatingScheme scheme);

enum class DomainTag { kSourceLabeled, kSourceUnlabeled, kTarget };

enum class CorpusFormat { kJsonlRating, kJsonlLabel };
CorpusFormat parse_corpus_format(std::string_view name);

/// Lowercases; alphanumeric runs and single punctuation marks become tokens.
std::vector<std::string> tokenize(std::string_view text);

struct Document {
  std::vector<std::string> tokens;
  std::optional<int> label;
  std::optional<double> rating;
  DomainTag domain = DomainTag::kSourceLabeled;

  bool operator==(const Document&) const = default;
};

struct Corpus {
  std::vector<Document> documents;

  std::size_t size() const { return documents.size(); }
  bool empty() const { return documents.empty(); }
  std::size_t count(DomainTag tag) const;
  std::vector<std::size_t> label_counts(int num_classes = kNumLabels) const;
};

inline constexpr std::size_t kDefaultMaxTokens = 400;

struct LoadOptions {
  CorpusFormat format = CorpusFormat::kJsonlLabel;
  RatingScheme scheme = RatingScheme::kAmazon5;
  DomainTag domain = DomainTag::kSourceLabeled;
  std::size_t max_tokens = kDefaultMaxTokens;
};

/// One JSON object per line with `text` and exactly one of `rating` or
/// `label`. Throws DataError naming the line on malformed input.
Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options);
Corpus parse_corpus(std::string_view contents, const LoadOptions& options,
                    std::string_view source_name = "<memory>");

/// Writes documents back as JSON lines (rating when present, else label).
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string serialize_corpus(const Corpus& corpus);

/// Uniform random split into (train, dev) with exactly `n_dev` dev documents.
/// Both halves keep the original relative order.
std::pair<Corpus, Corpus> split_dev(const Corpus& source, std::size_t n_dev, std::uint64_t seed);

}  // namespace das
