#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "das/config.hpp"
#include "das/corpus.hpp"
#include "das/metrics.hpp"
#include "das/trainer.hpp"
#include "das/vocab.hpp"

namespace das {

/// Raw corpora for one source → target problem.
struct Experiment {
  Corpus source;            // labeled; the dev set is carved out of it
  Corpus source_unlabeled;  // optional extra union documents
  Corpus target;            // unlabeled for training (labels never read)
  std::optional<Corpus> target_test;
  std::optional<std::filesystem::path> embeddings;
};

struct RunResult {
  std::uint64_t seed = 0;
  Vocab vocab;
  TrainResult training;
  std::optional<EvalReport> test;
};

/// Padded index sequences under `vocab`.
std::vector<std::vector<std::int32_t>> index_documents(const Corpus& corpus, const Vocab& vocab,
                                                       std::size_t window);
std::vector<int> gold_labels(const Corpus& corpus);

/// Vocabulary over the domain pair: labeled + unlabeled source and target.
Vocab experiment_vocab(const Experiment& experiment, std::size_t max_content);

/// Eval-mode argmax predictions for a corpus.
std::vector<int> predict_labels(const ModelParams& params, const Vocab& vocab,
                                const Corpus& corpus);

EvalReport evaluate_corpus(const ModelParams& params, const Vocab& vocab, const Corpus& corpus);

/// Dev split, vocabulary, embedding initialization, training and model
/// selection, then test evaluation of the selected model when a test set is
/// present.
RunResult run_experiment(const TrainConfig& config, const Experiment& experiment,
                         const EpochCallback& on_epoch = nullptr);

/// `n_runs` independent runs with seeds config.seed + 0 … + n_runs − 1.
std::vector<RunResult> run_multi_seed(const TrainConfig& config, const Experiment& experiment,
                                      int n_runs);

}  // namespace das
