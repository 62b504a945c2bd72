#include "das/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

#include "das/error.hpp"
#include "das/rng.hpp"

namespace das {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

}  // namespace

std::string_view label_name(int label) {
  switch (label) {
    case 0: return "negative";
    case 1: return "neutral";
    case 2: return "positive";
    default: throw std::out_of_range("label index " + std::to_string(label));
  }
}

int parse_label(std::string_view name) {
  for (int c = 0; c < kNumLabels; ++c) {
    if (label_name(c) == name) return c;
  }
  throw DataError("unknown label '" + std::string(name) + "'");
}

RatingScheme parse_rating_scheme(std::string_view name) {
  if (name == "amazon5") return RatingScheme::kAmazon5;
  if (name == "imdb10") return RatingScheme::kImdb10;
  throw ConfigError("unknown rating scheme '" + std::string(name) + "'");
}

std::string_view to_string(RatingScheme scheme) {
  return scheme == RatingScheme::kAmazon5 ? "amazon5" : "imdb10";
}

int map_rating_to_label(double rating, RatingScheme scheme) {
  const double top = scheme == RatingScheme::kAmazon5 ? 5.0 : 10.0;
  if (!(rating >= 1.0 && rating <= top)) {
    throw DataError("rating " + std::to_string(rating) + " outside the " +
                    std::string(to_string(scheme)) + " scale");
  }
  const auto neg = static_cast<int>(Label::kNegative);
  const auto neu = static_cast<int>(Label::kNeutral);
  const auto pos = static_cast<int>(Label::kPositive);
  if (scheme == RatingScheme::kAmazon5) {
    if (rating < 3.0) return neg;
    return rating > 3.0 ? pos : neu;
  }
  if (rating < 5.0) return neg;
  if (rating > 6.0) return pos;
  if (rating == 5.0 || rating == 6.0) return neu;
  throw DataError("rating " + std::to_string(rating) + " falls between imdb10 label bands");
}

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "jsonl_rating") return CorpusFormat::kJsonlRating;
  if (name == "jsonl_label") return CorpusFormat::kJsonlLabel;
  throw ConfigError("unknown corpus format '" + std::string(name) + "'");
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (std::isspace(c)) {
      ++i;
    } else if (is_word_byte(c)) {
      std::string word;
      while (i < text.size() && is_word_byte(static_cast<unsigned char>(text[i]))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(text[i]))));
        ++i;
      }
      tokens.push_back(std::move(word));
    } else {
      tokens.emplace_back(1, text[i]);
      ++i;
    }
  }
  return tokens;
}

std::size_t Corpus::count(DomainTag tag) const {
  return static_cast<std::size_t>(std::count_if(
      documents.begin(), documents.end(), [tag](const Document& d) { return d.domain == tag; }));
}

std::vector<std::size_t> Corpus::label_counts(int num_classes) const {
  std::vector<std::size_t> counts(static_cast<std::size_t>(num_classes), 0);
  for (const Document& d : documents) {
    if (d.label && *d.label >= 0 && *d.label < num_classes) ++counts[*d.label];
  }
  return counts;
}

Corpus parse_corpus(std::string_view contents, const LoadOptions& options,
                    std::string_view source_name) {
  Corpus corpus;
  std::istringstream in{std::string(contents)};
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) {
    throw DataError(std::string(source_name) + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object() || !obj.contains("text") || !obj["text"].is_string()) {
      fail("expected an object with a string 'text' field");
    }
    const bool has_rating = obj.contains("rating");
    const bool has_label = obj.contains("label");
    if (has_rating == has_label) fail("need exactly one of 'rating' or 'label'");

    Document doc;
    doc.domain = options.domain;
    doc.tokens = tokenize(obj["text"].get<std::string>());
    if (doc.tokens.empty()) fail("document has no tokens");
    if (doc.tokens.size() > options.max_tokens) doc.tokens.resize(options.max_tokens);

    if (options.format == CorpusFormat::kJsonlRating) {
      if (!has_rating || !obj["rating"].is_number()) fail("expected a numeric 'rating'");
      doc.rating = obj["rating"].get<double>();
      try {
        doc.label = map_rating_to_label(*doc.rating, options.scheme);
      } catch (const DataError& e) {
        fail(e.what());
      }
    } else {
      if (!has_label || !obj["label"].is_string()) fail("expected a string 'label'");
      try {
        doc.label = parse_label(obj["label"].get<std::string>());
      } catch (const DataError& e) {
        fail(e.what());
      }
    }
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const LoadOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str(), options, path.string());
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  for (const Document& doc : corpus.documents) {
    std::string text;
    for (std::size_t i = 0; i < doc.tokens.size(); ++i) {
      if (i) text += ' ';
      text += doc.tokens[i];
    }
    nlohmann::ordered_json obj;
    obj["text"] = text;
    if (doc.rating) {
      obj["rating"] = *doc.rating;
    } else if (doc.label) {
      obj["label"] = label_name(*doc.label);
    }
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file " + path.string());
  out << serialize_corpus(corpus);
}

std::pair<Corpus, Corpus> split_dev(const Corpus& source, std::size_t n_dev, std::uint64_t seed) {
  if (n_dev >= source.size()) {
    throw DataError("dev size " + std::to_string(n_dev) + " must be smaller than the " +
                    std::to_string(source.size()) + "-document source corpus");
  }
  std::vector<std::size_t> order(source.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng::substream(seed, "split");
  rng.shuffle(std::span(order));
  std::vector<bool> in_dev(source.size(), false);
  for (std::size_t k = 0; k < n_dev; ++k) in_dev[order[k]] = true;

  Corpus train, dev;
  for (std::size_t i = 0; i < source.size(); ++i) {
    const Document& d = source.documents[i];
    if (in_dev[i] && !d.label) throw DataError("dev document without a label");
    (in_dev[i] ? dev : train).documents.push_back(d);
  }
  return {std::move(train), std::move(dev)};
}

}  // namespace das
