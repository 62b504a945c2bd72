#include "das/pipeline.hpp"
#include <algorithm>

#include "das/error.hpp"
#include "das/rng.hpp"

namespace das {

std::vector<std::vector<std::int32_t>> index_documents(const Corpus& corpus, const Vocab& vocab,
                                                       std::size_t window) {
  std::vector<std::vector<std::int32_t>> out;
  out.reserve(corpus.size());
  for (const Document& doc : corpus.documents) {
    if (doc.tokens.empty()) throw DataError("empty document");
    out.push_back(pad_for_window(vocab.encode(doc.tokens), window));
  }
  return out;
}

std::vector<int> gold_labels(const Corpus& corpus) {
  std::vector<int> labels;
  labels.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& label = corpus.documents[i].label;
    if (!label) throw DataError("document " + std::to_string(i + 1) + " has no label");
    labels.push_back(*label);
  }
  return labels;
}

Vocab experiment_vocab(const Experiment& experiment, std::size_t max_content) {
  const Corpus* corpora[] = {&experiment.source, &experiment.source_unlabeled, &experiment.target};
  return build_vocab(corpora, max_content);
}

std::vector<int> predict_labels(const ModelParams& params, const Vocab& vocab,
                                const Corpus& corpus) {
  const Tensor probs = predict_proba(params, index_documents(corpus, vocab, params.window));
  std::vector<int> preds(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto row = probs.row(i);
    preds[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return preds;
}

EvalReport evaluate_corpus(const ModelParams& params, const Vocab& vocab, const Corpus& corpus) {
  if (corpus.empty()) throw DataError("evaluation corpus is empty");
  return evaluate(predict_labels(params, vocab, corpus), gold_labels(corpus),
                  static_cast<int>(params.out_bias.size()));
}

RunResult run_experiment(const TrainConfig& config, const Experiment& experiment,
                         const EpochCallback& on_epoch) {
  config.validate();
  RunResult result;
  result.seed = config.seed;
  result.vocab = experiment_vocab(experiment, config.vocab_size);

  auto [train_part, dev_part] = split_dev(experiment.source, config.dev_size, config.seed);

  Rng embed_rng = Rng::substream(config.seed, "embed");
  Tensor embedding =
      experiment.embeddings
          ? load_pretrained_embeddings(*experiment.embeddings, result.vocab, config.embedding_dim,
                                       embed_rng)
                .matrix
          : random_embeddings(result.vocab, config.embedding_dim, embed_rng);
  Rng init_rng = Rng::substream(config.seed, "init");
  ModelParams init =
      init_params(config.model_shape(result.vocab.size()), std::move(embedding), init_rng);

  TrainingData data;
  data.source = index_documents(train_part, result.vocab, config.window);
  data.source_labels = gold_labels(train_part);
  data.source_unlabeled = index_documents(experiment.source_unlabeled, result.vocab, config.window);
  data.target = index_documents(experiment.target, result.vocab, config.window);
  data.dev = index_documents(dev_part, result.vocab, config.window);
  data.dev_labels = gold_labels(dev_part);

  result.training = train(config, data, std::move(init), on_epoch);
  if (experiment.target_test) {
    result.test = evaluate_corpus(result.training.best, result.vocab, *experiment.target_test);
  }
  return result;
}

std::vector<RunResult> run_multi_seed(const TrainConfig& config, const Experiment& experiment,
                                      int n_runs) {
  if (n_runs < 2) throw ConfigError("multi-seed evaluation needs at least 2 runs");
  std::vector<RunResult> runs;
  runs.reserve(static_cast<std::size_t>(n_runs));
  for (int k = 0; k < n_runs; ++k) {
    TrainConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(k);
    runs.push_back(run_experiment(c, experiment));
  }
  return runs;
}

}  // namespace das
