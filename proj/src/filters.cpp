#include "das/filters.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace das {

namespace {

std::string_view domain_name(DomainTag tag) {
  switch (tag) {
    case DomainTag::kSourceLabeled: return "source";
    case DomainTag::kSourceUnlabeled: return "source_unlabeled";
    case DomainTag::kTarget: return "target";
  }
  return "?";
}

std::string render_token(const Vocab& vocab, std::int32_t id) {
  return id == Vocab::kPad ? std::string("*") : vocab.token(id);
}

}  // namespace

std::string TrigramHit::joined() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += '-';
    out += tokens[i];
  }
  return out;
}

FilterReport filter_analysis(const ModelParams& params, const Vocab& vocab, const Corpus& corpus,
                             std::size_t k_filters, std::size_t k_trigrams) {
  const ModelShape shape = params.shape();
  if (k_filters == 0 || k_filters > shape.hidden) {
    throw std::invalid_argument("k_filters must lie in [1, " + std::to_string(shape.hidden) + "]");
  }
  if (vocab.size() != shape.vocab) {
    throw std::invalid_argument("vocabulary size does not match the model");
  }

  FilterReport report;
  std::vector<std::size_t> wanted;
  for (std::size_t c = 0; c < shape.classes; ++c) {
    std::vector<std::size_t> order(shape.hidden);
    std::iota(order.begin(), order.end(), 0);
    const auto weights = params.out_weight.row(c);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return weights[a] > weights[b]; });
    ClassFilters block;
    block.label = static_cast<int>(c);
    for (std::size_t k = 0; k < k_filters; ++k) {
      block.filters.push_back(FilterEntry{order[k], weights[order[k]], {}});
      wanted.push_back(order[k]);
    }
    report.classes.push_back(std::move(block));
  }
  std::sort(wanted.begin(), wanted.end());
  wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

  // Identical windows always produce identical activations, so one entry per
  // distinct window suffices; the map key keeps the scan order-independent.
  struct Seen {
    std::vector<double> activations;  // aligned with `wanted`
    std::vector<DomainTag> domains;
  };
  std::map<std::vector<std::int32_t>, Seen> windows;
  for (const Document& doc : corpus.documents) {
    const std::vector<std::int32_t> ids = vocab.encode(doc.tokens);
    const Encoding enc = encode(params, ids);
    for (std::size_t w = 0; w < enc.windows.size(); ++w) {
      auto [it, inserted] = windows.try_emplace(enc.windows[w]);
      Seen& s = it->second;
      if (inserted) {
        for (std::size_t f : wanted) s.activations.push_back(enc.hidden.at(w, f));
      }
      if (std::find(s.domains.begin(), s.domains.end(), doc.domain) == s.domains.end()) {
        s.domains.push_back(doc.domain);
      }
    }
  }

  for (ClassFilters& block : report.classes) {
    for (FilterEntry& entry : block.filters) {
      const auto slot = static_cast<std::size_t>(
          std::lower_bound(wanted.begin(), wanted.end(), entry.filter) - wanted.begin());
      std::vector<TrigramHit> hits;
      hits.reserve(windows.size());
      for (const auto& [ids, seen] : windows) {
        TrigramHit hit;
        for (std::int32_t id : ids) hit.tokens.push_back(render_token(vocab, id));
        hit.activation = seen.activations[slot];
        hit.domains = seen.domains;
        std::sort(hit.domains.begin(), hit.domains.end());
        hits.push_back(std::move(hit));
      }
      const std::size_t keep = std::min(k_trigrams, hits.size());
      std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(keep), hits.end(),
                        [](const TrigramHit& a, const TrigramHit& b) {
                          if (a.activation != b.activation) return a.activation > b.activation;
                          return a.tokens < b.tokens;
                        });
      hits.resize(keep);
      entry.trigrams = std::move(hits);
    }
  }
  return report;
}

std::string FilterReport::to_text() const {
  constexpr std::size_t kColumns = 5;
  std::ostringstream out;
  for (const ClassFilters& block : classes) {
    out << "== " << label_name(block.label) << " ==\n";
    for (std::size_t start = 0; start < block.filters.size(); start += kColumns) {
      const std::size_t stop = std::min(start + kColumns, block.filters.size());
      std::size_t depth = 0;
      for (std::size_t f = start; f < stop; ++f) {
        out << (f > start ? " & " : "") << (f + 1) << " (filter " << block.filters[f].filter
            << ")";
        depth = std::max(depth, block.filters[f].trigrams.size());
      }
      out << '\n';
      for (std::size_t r = 0; r < depth; ++r) {
        for (std::size_t f = start; f < stop; ++f) {
          const auto& tri = block.filters[f].trigrams;
          out << (f > start ? " & " : "") << (r < tri.size() ? tri[r].joined() : "");
        }
        out << '\n';
      }
      out << '\n';
    }
  }
  return out.str();
}

std::string FilterReport::to_json() const {
  nlohmann::ordered_json root = nlohmann::ordered_json::array();
  for (const ClassFilters& block : classes) {
    nlohmann::ordered_json c;
    c["label"] = label_name(block.label);
    c["filters"] = nlohmann::ordered_json::array();
    for (const FilterEntry& entry : block.filters) {
      nlohmann::ordered_json f;
      f["filter"] = entry.filter;
      f["weight"] = entry.weight;
      f["trigrams"] = nlohmann::ordered_json::array();
      for (const TrigramHit& hit : entry.trigrams) {
        nlohmann::ordered_json t;
        t["trigram"] = hit.joined();
        t["tokens"] = hit.tokens;
        t["activation"] = hit.activation;
        std::vector<std::string> domains;
        for (DomainTag d : hit.domains) domains.emplace_back(domain_name(d));
        t["domains"] = domains;
        f["trigrams"].push_back(std::move(t));
      }
      c["filters"].push_back(std::move(f));
    }
    root.push_back(std::move(c));
  }
  return root.dump(2) + "\n";
}

}  // namespace das
