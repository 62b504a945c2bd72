#include "das/vocab.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "das/error.hpp"

namespace das {

Vocab::Vocab() : Vocab(std::vector<std::string>{std::string(kPadToken), std::string(kUnkToken)}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.size() < 2 || tokens_[kPad] != kPadToken || tokens_[kUnk] != kUnkToken) {
    throw DataError("vocabulary must start with " + std::string(kPadToken) + " and " +
                    std::string(kUnkToken));
  }
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<std::int32_t>(i)).second) {
      throw DataError("duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

std::int32_t Vocab::index(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

bool Vocab::contains(std::string_view token) const {
  return index_.count(std::string(token)) > 0;
}

std::vector<std::int32_t> Vocab::encode(std::span<const std::string> tokens) const {
  std::vector<std::int32_t> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(index(t));
  return ids;
}

std::uint64_t Vocab::content_hash() const {
  std::uint64_t h = fnv1a64("");
  for (const auto& t : tokens_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocabulary " + path.string());
  for (const auto& t : tokens_) out << t << '\n';
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open vocabulary " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocab(std::move(tokens));
}

Vocab build_vocab(std::span<const Corpus* const> corpora, std::size_t max_content) {
  if (max_content < 1) throw ConfigError("vocabulary needs room for at least one token");
  struct Entry {
    std::size_t count = 0;
    std::size_t first_seen = 0;
  };
  std::unordered_map<std::string, Entry> stats;
  std::vector<std::string> order;
  std::size_t documents = 0;
  for (const Corpus* corpus : corpora) {
    for (const Document& doc : corpus->documents) {
      ++documents;
      for (const auto& tok : doc.tokens) {
        auto [it, inserted] = stats.try_emplace(tok, Entry{0, order.size()});
        if (inserted) order.push_back(tok);
        ++it->second.count;
      }
    }
  }
  if (documents == 0) throw DataError("cannot build a vocabulary from empty corpora");

  std::vector<std::string> ranked = order;
  std::stable_sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
    return stats[a].count > stats[b].count;
  });
  if (ranked.size() > max_content) ranked.resize(max_content);

  std::vector<std::string> tokens{std::string(Vocab::kPadToken), std::string(Vocab::kUnkToken)};
  for (auto& t : ranked) {
    // A literal "<pad>"/"<unk>" cannot come out of the tokenizer, but corpora
    // built elsewhere might carry one.
    if (t == Vocab::kPadToken || t == Vocab::kUnkToken) continue;
    tokens.push_back(std::move(t));
  }
  return Vocab(std::move(tokens));
}

Tensor random_embeddings(const Vocab& vocab, std::size_t dim, Rng& rng) {
  Tensor m({vocab.size(), dim});
  for (std::size_t r = 1; r < vocab.size(); ++r) {
    for (double& v : m.row(r)) v = rng.uniform(-kOovInitRange, kOovInitRange);
  }
  return m;
}

PretrainedEmbeddings parse_pretrained_embeddings(std::string_view contents, const Vocab& vocab,
                                                 std::size_t dim, Rng& rng) {
  Tensor m({vocab.size(), dim});
  std::vector<bool> found(vocab.size(), false);
  std::size_t matched = 0;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < contents.size()) {
    std::size_t end = contents.find('\n', pos);
    if (end == std::string_view::npos) end = contents.size();
    std::string_view line = contents.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    const std::size_t sp = line.find(' ');
    if (sp == std::string_view::npos) continue;
    const std::string_view word = line.substr(0, sp);
    if (!vocab.contains(word)) continue;
    const auto id = static_cast<std::size_t>(vocab.index(word));
    if (id == static_cast<std::size_t>(Vocab::kPad) || found[id]) continue;

    std::vector<double> values;
    values.reserve(dim);
    std::string_view rest = line.substr(sp + 1);
    while (!rest.empty()) {
      const std::size_t start = rest.find_first_not_of(' ');
      if (start == std::string_view::npos) break;
      rest.remove_prefix(start);
      const std::size_t stop = std::min(rest.find(' '), rest.size());
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(rest.data(), rest.data() + stop, v);
      if (ec != std::errc() || ptr != rest.data() + stop) {
        throw DataError("embedding line " + std::to_string(line_no) + ": bad number '" +
                        std::string(rest.substr(0, stop)) + "'");
      }
      values.push_back(v);
      rest.remove_prefix(stop);
    }
    if (values.size() != dim) {
      throw DataError("embedding line " + std::to_string(line_no) + " for '" + std::string(word) +
                      "' has " + std::to_string(values.size()) + " values, expected " +
                      std::to_string(dim));
    }
    std::copy(values.begin(), values.end(), m.row(id).begin());
    found[id] = true;
    ++matched;
  }
  for (std::size_t r = 1; r < vocab.size(); ++r) {
    if (found[r]) continue;
    for (double& v : m.row(r)) v = rng.uniform(-kOovInitRange, kOovInitRange);
  }
  return {std::move(m), matched};
}

PretrainedEmbeddings load_pretrained_embeddings(const std::filesystem::path& path,
                                                const Vocab& vocab, std::size_t dim, Rng& rng) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open embedding file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_pretrained_embeddings(buf.str(), vocab, dim, rng);
}

}  // namespace das
