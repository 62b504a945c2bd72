#pragma once

#include <string>
#include <vector>

#include "das/corpus.hpp"
#include "das/model.hpp"
#include "das/vocab.hpp"

namespace das {

struct TrigramHit {
  std::vector<std::string> tokens;  // padding rendered as "*"
  double activation = 0.0;          // post-ReLU h_i[filter]
  std::vector<DomainTag> domains;   // every domain the window occurs in

  std::string joined() const;  // hyphen-joined, e.g. "highly-recommend-!"
};

struct FilterEntry {
  std::size_t filter = 0;
  double weight = 0.0;  // F_w[class, filter]
  std::vector<TrigramHit> trigrams;
};

struct ClassFilters {
  int label = 0;
  std::vector<FilterEntry> filters;
};

struct FilterReport {
  std::vector<ClassFilters> classes;

  /// One block per class; columns are filters in rank order (five per row
  /// group), rows are trigram ranks.
  std::string to_text() const;
  std::string to_json() const;
};

/// For each class, the `k_filters` filters with the largest classifier weight,
/// each with its `k_trigrams` highest-activation distinct windows over
/// `corpus`. Ties: larger weight/activation first, then lower filter index or
/// lexicographically smaller trigram.
FilterReport filter_analysis(const ModelParams& params, const Vocab& vocab, const Corpus& corpus,
                             std::size_t k_filters = 10, std::size_t k_trigrams = 5);

}  // namespace das
