#include "das/synth.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <numeric>
#include <string>

#include "das/error.hpp"
#include "das/rng.hpp"

namespace das {

namespace {

constexpr const char* kClassStem[] = {"neg", "neu", "pos"};

std::size_t draw_class(const std::vector<double>& priors, Rng& rng) {
  double u = rng.uniform();
  for (std::size_t c = 0; c + 1 < priors.size(); ++c) {
    if (u < priors[c]) return c;
    u -= priors[c];
  }
  return priors.size() - 1;
}

/// Domain prefix: "a" for source, "b" for target.
Document make_document(const SyntheticSpec& spec, char domain, std::size_t label, Rng& rng) {
  const std::size_t classes = spec.class_priors.size();
  const std::size_t length =
      spec.min_length + static_cast<std::size_t>(rng.below(spec.max_length - spec.min_length + 1));
  Document doc;
  doc.label = static_cast<int>(label);
  bool has_sentiment = false;
  for (std::size_t i = 0; i < length; ++i) {
    // The last position is forced to carry sentiment if none has so far.
    const bool sentiment = rng.bernoulli(spec.sentiment_density) ||
                           (i + 1 == length && !has_sentiment);
    if (sentiment) {
      has_sentiment = true;
      std::size_t c = label;
      if (rng.bernoulli(spec.noise)) {
        c = (label + 1 + static_cast<std::size_t>(rng.below(classes - 1))) % classes;
      }
      if (rng.bernoulli(spec.shift)) {
        doc.tokens.push_back(std::string(1, domain) + kClassStem[c] +
                             std::to_string(rng.below(spec.domain_words_per_class)));
      } else {
        doc.tokens.push_back(std::string("s") + kClassStem[c] +
                             std::to_string(rng.below(spec.shared_words_per_class)));
      }
    } else if (rng.bernoulli(spec.style_rate)) {
      doc.tokens.push_back(std::string(1, domain) + "style" +
                           std::to_string(rng.below(spec.domain_style_words)));
    } else {
      doc.tokens.push_back("w" + std::to_string(rng.below(spec.common_filler_words)));
    }
  }
  return doc;
}

Corpus make_corpus(const SyntheticSpec& spec, char domain, DomainTag tag, std::size_t n,
                   Rng& rng) {
  Corpus corpus;
  corpus.documents.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Document doc = make_document(spec, domain, draw_class(spec.class_priors, rng), rng);
    doc.domain = tag;
    corpus.documents.push_back(std::move(doc));
  }
  return corpus;
}

/// Separate stream, so switching embeddings on leaves the corpora unchanged.
std::vector<std::pair<std::string, std::vector<double>>> make_embeddings(const SyntheticSpec& spec) {
  Rng rng = Rng::substream(spec.seed, "synth-embed");
  const std::size_t d = spec.embedding_dim;
  const std::size_t classes = spec.class_priors.size();
  std::vector<std::vector<double>> prototypes(classes, std::vector<double>(d));
  for (auto& p : prototypes) {
    for (double& v : p) v = rng.bernoulli(0.5) ? spec.embedding_signal : -spec.embedding_signal;
  }
  std::vector<std::pair<std::string, std::vector<double>>> out;
  auto add = [&](std::string word, const std::vector<double>* prototype) {
    std::vector<double> v(d);
    for (std::size_t k = 0; k < d; ++k) {
      v[k] = (prototype ? (*prototype)[k] : 0.0) +
             rng.uniform(-spec.embedding_noise, spec.embedding_noise);
    }
    out.emplace_back(std::move(word), std::move(v));
  };
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t i = 0; i < spec.shared_words_per_class; ++i) {
      add(std::string("s") + kClassStem[c] + std::to_string(i), &prototypes[c]);
    }
    for (const char domain : {'a', 'b'}) {
      for (std::size_t i = 0; i < spec.domain_words_per_class; ++i) {
        add(std::string(1, domain) + kClassStem[c] + std::to_string(i), &prototypes[c]);
      }
    }
  }
  for (const char domain : {'a', 'b'}) {
    for (std::size_t i = 0; i < spec.domain_style_words; ++i) {
      add(std::string(1, domain) + "style" + std::to_string(i), nullptr);
    }
  }
  for (std::size_t i = 0; i < spec.common_filler_words; ++i) add("w" + std::to_string(i), nullptr);
  return out;
}

}  // namespace

void SyntheticSpec::validate() const {
  const double total = std::accumulate(class_priors.begin(), class_priors.end(), 0.0);
  if (class_priors.size() < 2 || class_priors.size() > 3 || std::abs(total - 1.0) > 1e-9) {
    throw ConfigError("class priors must list 2 or 3 probabilities summing to 1");
  }
  for (double p : class_priors) {
    if (p < 0.0) throw ConfigError("class priors must be nonnegative");
  }
  if (!(shift >= 0.0 && shift <= 1.0)) throw ConfigError("shift strength must lie in [0, 1]");
  if (!(noise >= 0.0 && noise < 1.0)) throw ConfigError("noise must lie in [0, 1)");
  if (!(sentiment_density > 0.0 && sentiment_density <= 1.0)) {
    throw ConfigError("sentiment_density must lie in (0, 1]");
  }
  if (!(style_rate >= 0.0 && style_rate <= 1.0)) throw ConfigError("style_rate must lie in [0, 1]");
  if (embedding_dim > 0 && !(embedding_signal >= 0.0 && embedding_noise >= 0.0)) {
    throw ConfigError("embedding_signal and embedding_noise must be nonnegative");
  }
  if (min_length < 1 || max_length < min_length) throw ConfigError("bad document length range");
  if (shared_words_per_class < 1 || domain_words_per_class < 1 || common_filler_words < 1 ||
      domain_style_words < 1) {
    throw ConfigError("word inventories must be non-empty");
  }
}

SyntheticCorpora generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng = Rng::substream(spec.seed, "synth");
  SyntheticCorpora out;
  out.source_labeled = make_corpus(spec, 'a', DomainTag::kSourceLabeled, spec.source_labeled, rng);
  out.source_unlabeled =
      make_corpus(spec, 'a', DomainTag::kSourceUnlabeled, spec.source_unlabeled, rng);
  out.target_unlabeled = make_corpus(spec, 'b', DomainTag::kTarget, spec.target_unlabeled, rng);
  out.target_test = make_corpus(spec, 'b', DomainTag::kTarget, spec.target_test, rng);
  if (spec.embedding_dim > 0) out.embeddings = make_embeddings(spec);
  return out;
}

void write_synthetic(const SyntheticCorpora& corpora, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_corpus(corpora.source_labeled, dir / "source_labeled.jsonl");
  save_corpus(corpora.source_unlabeled, dir / "source_unlabeled.jsonl");
  save_corpus(corpora.target_unlabeled, dir / "target_unlabeled.jsonl");
  save_corpus(corpora.target_test, dir / "target_test.jsonl");
  if (!corpora.embeddings.empty()) {
    std::ofstream out(dir / "embeddings.txt");
    if (!out) throw DataError("cannot write " + (dir / "embeddings.txt").string());
    char buf[64];
    for (const auto& [word, vec] : corpora.embeddings) {
      out << word;
      for (double v : vec) {
        const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
      }
      out << '\n';
    }
  }
}

}  // namespace das

namespace das {

namespace {

std::string trim_copy(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_value(const std::string& key, const std::string& value) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    throw ConfigError("synthetic spec key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

std::string number_text(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace

SyntheticSpec parse_synthetic_spec(std::string_view text) {
  SyntheticSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim_copy(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("synthetic spec line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim_copy(std::string_view(body).substr(0, eq));
    const std::string value = trim_copy(std::string_view(body).substr(eq + 1));
    std::size_t* sizes[] = {&spec.shared_words_per_class, &spec.domain_words_per_class,
                            &spec.common_filler_words,    &spec.domain_style_words,
                            &spec.source_labeled,         &spec.source_unlabeled,
                            &spec.target_unlabeled,       &spec.target_test,
                            &spec.min_length,             &spec.max_length};
    const char* size_keys[] = {"shared_words_per_class", "domain_words_per_class",
                               "common_filler_words",    "domain_style_words",
                               "source_labeled",         "source_unlabeled",
                               "target_unlabeled",       "target_test",
                               "min_length",             "max_length"};
    bool matched = false;
    for (std::size_t i = 0; i < std::size(sizes); ++i) {
      if (key == size_keys[i]) {
        *sizes[i] = parse_value<std::size_t>(key, value);
        matched = true;
      }
    }
    if (matched) continue;
    if (key == "sentiment_density") {
      spec.sentiment_density = parse_value<double>(key, value);
    } else if (key == "style_rate") {
      spec.style_rate = parse_value<double>(key, value);
    } else if (key == "noise") {
      spec.noise = parse_value<double>(key, value);
    } else if (key == "shift") {
      spec.shift = parse_value<double>(key, value);
    } else if (key == "embedding_dim") {
      spec.embedding_dim = parse_value<std::size_t>(key, value);
    } else if (key == "embedding_signal") {
      spec.embedding_signal = parse_value<double>(key, value);
    } else if (key == "embedding_noise") {
      spec.embedding_noise = parse_value<double>(key, value);
    } else if (key == "seed") {
      spec.seed = parse_value<std::uint64_t>(key, value);
    } else if (key == "class_priors") {
      spec.class_priors.clear();
      std::istringstream parts(value);
      std::string part;
      while (std::getline(parts, part, ',')) {
        spec.class_priors.push_back(parse_value<double>(key, trim_copy(part)));
      }
    } else {
      throw ConfigError("synthetic spec line " + std::to_string(line_no) + ": unknown key '" +
                        key + "'");
    }
  }
  spec.validate();
  return spec;
}

SyntheticSpec load_synthetic_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open synthetic spec " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_synthetic_spec(buf.str());
}

std::string format_synthetic_spec(const SyntheticSpec& s) {
  std::ostringstream out;
  out << "shared_words_per_class = " << s.shared_words_per_class << "\n"
      << "domain_words_per_class = " << s.domain_words_per_class << "\n"
      << "common_filler_words = " << s.common_filler_words << "\n"
      << "domain_style_words = " << s.domain_style_words << "\n"
      << "source_labeled = " << s.source_labeled << "\n"
      << "source_unlabeled = " << s.source_unlabeled << "\n"
      << "target_unlabeled = " << s.target_unlabeled << "\n"
      << "target_test = " << s.target_test << "\n"
      << "min_length = " << s.min_length << "\n"
      << "max_length = " << s.max_length << "\n"
      << "sentiment_density = " << number_text(s.sentiment_density) << "\n"
      << "style_rate = " << number_text(s.style_rate) << "\n"
      << "noise = " << number_text(s.noise) << "\n"
      << "shift = " << number_text(s.shift) << "\n"
      << "seed = " << s.seed << "\n"
      << "embedding_dim = " << s.embedding_dim << "\n"
      << "embedding_signal = " << number_text(s.embedding_signal) << "\n"
      << "embedding_noise = " << number_text(s.embedding_noise) << "\n"
      << "class_priors = ";
  for (std::size_t i = 0; i < s.class_priors.size(); ++i) {
    out << (i ? "," : "") << number_text(s.class_priors[i]);
  }
  out << "\n";
  return out.str();
}

}  // namespace das
