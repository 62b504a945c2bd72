#include "das/cli.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "das/config.hpp"
#include "das/error.hpp"
#include "das/filters.hpp"
#include "das/grad_check.hpp"
#include "das/losses.hpp"
#include "das/model.hpp"
#include "das/pipeline.hpp"
#include "das/synth.hpp"
#include "das/trainer.hpp"

namespace das::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------- gradcheck

/// Identity forward, backward scaled by 1.5: a deliberately wrong gradient.
Var faulty_identity(Tape& tape, Var x) {
  return tape.record(Tensor(tape.value(x)), {x}, [x](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_accumulator(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += 1.5 * g[i];
  });
}

std::vector<std::vector<std::int32_t>> random_docs(std::size_t n, std::size_t vocab,
                                                   std::size_t window, Rng& rng) {
  std::vector<std::vector<std::int32_t>> docs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t len = 2 + static_cast<std::size_t>(rng.below(5));
    std::vector<std::int32_t> ids;
    for (std::size_t k = 0; k < len; ++k) {
      ids.push_back(static_cast<std::int32_t>(2 + rng.below(vocab - 2)));
    }
    docs.push_back(pad_for_window(ids, window));
  }
  return docs;
}

/// Per-window conv pre-activations W·x (no bias) of one padded document.
Tensor window_scores(const ModelParams& p, const std::vector<std::int32_t>& padded) {
  const std::size_t d = p.embedding.cols(), l = p.window, h = p.conv_weight.rows();
  const std::size_t n = padded.size() - l + 1;
  Tensor out({n, h});
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < h; ++j) {
      double acc = 0.0;
      for (std::size_t o = 0; o < l; ++o) {
        const auto e = p.embedding.row(static_cast<std::size_t>(padded[k + o]));
        for (std::size_t c = 0; c < d; ++c) acc += p.conv_weight.at(j, o * d + c) * e[c];
      }
      out.at(k, j) = acc;
    }
  }
  return out;
}

struct ToyBatch {
  std::vector<std::vector<std::int32_t>> source, target;
};

/// Central differences are only meaningful away from the ReLU and max-pooling
/// kinks, so the toy batch is redrawn until every pooled unit has a clear
/// winning window and sits clearly away from zero.
///
/// MMD is also invariant to a common shift of a feature column: a unit that
/// fires in every document has an exactly zero bias gradient, and the finite
/// difference is then pure rounding noise. Each conv bias is therefore placed
/// halfway between the two lowest per-document maxima so the unit is silent
/// in at least one document and active in another.
ToyBatch draw_toy_batch(ModelParams& params, std::size_t n_docs, std::size_t vocab, Rng& rng) {
  constexpr double kMargin = 1e-3;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    ToyBatch toy{random_docs(n_docs, vocab, params.window, rng),
                 random_docs(n_docs, vocab, params.window, rng)};
    std::vector<std::vector<std::int32_t>> docs = toy.source;
    docs.insert(docs.end(), toy.target.begin(), toy.target.end());
    std::vector<Tensor> scores;
    for (const auto& doc : docs) scores.push_back(window_scores(params, doc));

    bool clear = true;
    for (std::size_t j = 0; j < params.conv_bias.size() && clear; ++j) {
      std::vector<double> maxima;
      for (std::size_t i = 0; i < docs.size() && clear; ++i) {
        const Tensor& sc = scores[i];
        std::size_t best = 0;
        for (std::size_t k = 1; k < sc.rows(); ++k) {
          if (sc.at(k, j) > sc.at(best, j)) best = k;
        }
        for (std::size_t k = 0; k < sc.rows(); ++k) {
          const bool same_window = std::equal(docs[i].begin() + k, docs[i].begin() + k + params.window,
                                              docs[i].begin() + best);
          if (!same_window && sc.at(best, j) - sc.at(k, j) < kMargin) clear = false;
        }
        maxima.push_back(sc.at(best, j));
      }
      if (!clear) break;
      std::sort(maxima.begin(), maxima.end());
      if (maxima[1] - maxima[0] < 2 * kMargin) {
        clear = false;
        break;
      }
      const double b = -0.5 * (maxima[0] + maxima[1]);
      for (double m : maxima) clear = clear && std::abs(m + b) >= kMargin;
      params.conv_bias[j] = b;
    }
    if (clear) return toy;
  }
  throw NumericalError("gradcheck: could not draw a toy batch away from nondifferentiable points");
}

// ------------------------------------------------------------------ helpers

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
}

void require_file(const std::string& path, const char* what) {
  if (!fs::exists(path)) throw DataError(std::string(what) + " not found: " + path);
}

/// Writes into a sibling staging directory and renames it into place, so an
/// interrupted run never leaves a half-populated output directory.
class StagedDir {
 public:
  explicit StagedDir(fs::path target) : target_(std::move(target)) {
    if (fs::exists(target_) && !fs::is_empty(target_)) {
      throw ConfigError("output directory " + target_.string() + " already exists and is not empty");
    }
    staging_ = target_;
    staging_ += ".partial";
    fs::remove_all(staging_);
    fs::create_directories(staging_);
  }
  ~StagedDir() {
    if (!committed_) {
      std::error_code ec;
      fs::remove_all(staging_, ec);
    }
  }
  const fs::path& path() const { return staging_; }
  void commit() {
    if (fs::exists(target_)) fs::remove(target_);
    if (target_.has_parent_path()) fs::create_directories(target_.parent_path());
    fs::rename(staging_, target_);
    committed_ = true;
  }

 private:
  fs::path target_;
  fs::path staging_;
  bool committed_ = false;
};

json report_json(const EvalReport& r) {
  json j;
  j["accuracy"] = r.accuracy;
  j["macro_f1"] = r.macro_f1;
  j["n_examples"] = r.n_examples;
  j["per_class"] = json::array();
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassScores& s = r.per_class[c];
    j["per_class"].push_back(json{{"label", label_name(static_cast<int>(c))},
                                  {"precision", s.precision},
                                  {"recall", s.recall},
                                  {"f1", s.f1},
                                  {"support", s.support}});
  }
  j["confusion"] = r.confusion;
  return j;
}

std::string format_number(double v) { return json(v).dump(); }

std::string report_text(const EvalReport& r) {
  std::ostringstream out;
  out << "examples  " << r.n_examples << "\n";
  out << "accuracy  " << format_number(r.accuracy) << "\n";
  out << "macro_f1  " << format_number(r.macro_f1) << "\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassScores& s = r.per_class[c];
    out << std::left << std::setw(9) << label_name(static_cast<int>(c))
        << " precision " << format_number(s.precision) << " recall " << format_number(s.recall)
        << " f1 " << format_number(s.f1) << " support " << s.support << "\n";
  }
  return out.str();
}

json config_json(const TrainConfig& config) {
  json j;
  for (const auto& [k, v] : config_entries(config)) j[k] = v;
  return j;
}

TrainConfig config_or_default(const std::string& path) {
  return path.empty() ? TrainConfig{} : load_config(path);
}

LoadOptions load_options(const TrainConfig& config, DomainTag tag) {
  return LoadOptions{config.corpus_format, config.rating_scheme, tag, config.max_tokens};
}

void write_run_artifacts(const fs::path& dir, const RunResult& run, const TrainConfig& config) {
  fs::create_directories(dir);
  save_checkpoint(dir / "checkpoint.bin", run.training.best, run.vocab.content_hash());
  run.vocab.save(dir / "vocab.txt");
  write_text(dir / "history.csv", run.training.history.to_csv());
  write_text(dir / "config.txt", format_config(config));
}

json run_json(const RunResult& run) {
  json j;
  j["seed"] = run.seed;
  j["best_epoch"] = run.training.history.best_epoch;
  j["test"] = run.test ? report_json(*run.test) : json(nullptr);
  return j;
}

// ----------------------------------------------------------------- commands

struct TrainArgs {
  std::string config, out, source, source_unlabeled, target, test, embeddings;
  std::optional<std::uint64_t> seed;
  int runs = 1;
};

int cmd_train(const TrainArgs& a, std::ostream& out, std::ostream& err) {
  TrainConfig config = config_or_default(a.config);
  if (a.seed) config.seed = *a.seed;
  config.validate();
  if (a.runs < 1) throw ConfigError("--runs must be at least 1");

  require_file(a.source, "source corpus");
  require_file(a.target, "target corpus");
  Experiment ex;
  ex.source = load_corpus(a.source, load_options(config, DomainTag::kSourceLabeled));
  ex.target = load_corpus(a.target, load_options(config, DomainTag::kTarget));
  if (!a.source_unlabeled.empty()) {
    require_file(a.source_unlabeled, "unlabeled source corpus");
    ex.source_unlabeled =
        load_corpus(a.source_unlabeled, load_options(config, DomainTag::kSourceUnlabeled));
  }
  if (!a.test.empty()) {
    require_file(a.test, "test corpus");
    ex.target_test = load_corpus(a.test, load_options(config, DomainTag::kTarget));
  }
  if (!a.embeddings.empty()) {
    require_file(a.embeddings, "embedding file");
    ex.embeddings = fs::path(a.embeddings);
  }

  StagedDir stage{fs::path(a.out)};
  json report;
  report["config"] = config_json(config);
  report["variant"] = std::string(to_string(config.variant));
  report["inputs"] = json{{"source", a.source},
                          {"source_unlabeled", a.source_unlabeled},
                          {"target", a.target},
                          {"test", a.test},
                          {"embeddings", a.embeddings}};
  json runs = json::array();
  std::vector<std::uint64_t> seeds;
  std::vector<double> accuracies, f1s;
  for (int k = 0; k < a.runs; ++k) {
    TrainConfig c = config;
    c.seed = config.seed + static_cast<std::uint64_t>(k);
    seeds.push_back(c.seed);
    auto progress = [&](const EpochMetrics& m, const ModelParams&) {
      err << "[seed " << c.seed << "] epoch " << m.epoch << "/" << c.epochs
          << " L=" << format_number(m.loss.L) << " J=" << format_number(m.loss.J)
          << " Gamma=" << format_number(m.loss.Gamma) << " Omega=" << format_number(m.loss.Omega)
          << " dev_error=" << format_number(m.dev_error) << "\n";
    };
    const RunResult run = run_experiment(c, ex, progress);
    const fs::path dir = a.runs == 1 ? stage.path() : stage.path() / ("run_" + std::to_string(k));
    write_run_artifacts(dir, run, c);
    runs.push_back(run_json(run));
    if (run.test) {
      accuracies.push_back(run.test->accuracy);
      f1s.push_back(run.test->macro_f1);
    }
  }
  report["seeds"] = seeds;
  report["runs"] = runs;
  report["best_epoch"] = runs[0]["best_epoch"];
  report["test"] = runs[0]["test"];
  if (!accuracies.empty()) {
    const double n = static_cast<double>(accuracies.size());
    report["mean_test_accuracy"] = std::accumulate(accuracies.begin(), accuracies.end(), 0.0) / n;
    report["mean_test_macro_f1"] = std::accumulate(f1s.begin(), f1s.end(), 0.0) / n;
  }
  write_text(stage.path() / "report.json", report.dump(2) + "\n");
  stage.commit();
  out << report.dump(2) << "\n";
  return kOk;
}

struct EvalArgs {
  std::string config, checkpoint, vocab, test, out;
  bool json_only = false;
};

Checkpoint checked_checkpoint(const std::string& checkpoint, std::string vocab_path, Vocab& vocab) {
  require_file(checkpoint, "checkpoint");
  if (vocab_path.empty()) vocab_path = (fs::path(checkpoint).parent_path() / "vocab.txt").string();
  require_file(vocab_path, "vocabulary");
  Checkpoint ck = load_checkpoint(checkpoint);
  vocab = Vocab::load(vocab_path);
  if (vocab.content_hash() != ck.vocab_hash || vocab.size() != ck.params.shape().vocab) {
    throw DataError("vocabulary " + vocab_path + " does not match checkpoint " + checkpoint);
  }
  return ck;
}

int cmd_evaluate(const EvalArgs& a, std::ostream& out) {
  const TrainConfig config = config_or_default(a.config);
  Vocab vocab;
  const Checkpoint ck = checked_checkpoint(a.checkpoint, a.vocab, vocab);
  require_file(a.test, "test corpus");
  const Corpus test = load_corpus(a.test, load_options(config, DomainTag::kTarget));
  const EvalReport report = evaluate_corpus(ck.params, vocab, test);
  const json j = report_json(report);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "eval.json", j.dump(2) + "\n");
    write_text(fs::path(a.out) / "eval.txt", report_text(report));
  }
  if (a.json_only) {
    out << j.dump(2) << "\n";
  } else {
    out << report_text(report);
  }
  return kOk;
}

struct FilterArgs {
  std::string config, checkpoint, vocab, out;
  std::vector<std::string> source, target;
  std::size_t k_filters = 10;
  std::size_t k_trigrams = 5;
};

int cmd_analyze_filters(const FilterArgs& a, std::ostream& out) {
  const TrainConfig config = config_or_default(a.config);
  Vocab vocab;
  const Checkpoint ck = checked_checkpoint(a.checkpoint, a.vocab, vocab);
  Corpus corpus;
  auto append = [&](const std::vector<std::string>& paths, DomainTag tag) {
    for (const auto& p : paths) {
      require_file(p, "corpus");
      Corpus c = load_corpus(p, load_options(config, tag));
      for (Document& d : c.documents) corpus.documents.push_back(std::move(d));
    }
  };
  append(a.source, DomainTag::kSourceLabeled);
  append(a.target, DomainTag::kTarget);
  if (corpus.empty()) throw ConfigError("analyze-filters needs at least one --source or --target corpus");
  const FilterReport report = filter_analysis(ck.params, vocab, corpus, a.k_filters, a.k_trigrams);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    write_text(fs::path(a.out) / "filters.txt", report.to_text());
    write_text(fs::path(a.out) / "filters.json", report.to_json());
  }
  out << report.to_text();
  return kOk;
}

int cmd_gradcheck(const GradCheckOptions& options, std::ostream& out) {
  const auto start = std::chrono::steady_clock::now();
  const std::vector<GradCheckLine> lines = run_gradcheck(options);
  bool ok = true;
  for (const GradCheckLine& l : lines) {
    out << std::left << std::setw(8) << l.component << " max_rel_error "
        << std::scientific << std::setprecision(3) << l.max_relative_error << std::defaultfloat
        << "  coords " << l.coordinates << "  worst " << l.worst_param << "[" << l.worst_index
        << "] analytic " << std::scientific << std::setprecision(6) << l.analytic << " numeric "
        << l.numeric << std::defaultfloat << "  " << (l.passed ? "PASS" : "FAIL") << "\n";
    ok = ok && l.passed;
  }
  const std::chrono::duration<double> secs = std::chrono::steady_clock::now() - start;
  out << "tolerance " << options.tolerance << ", step " << options.step << ", "
      << secs.count() << " s\n";
  return ok ? kOk : kNumericalFailure;
}

struct SynthArgs {
  std::string config, out;
  std::optional<std::uint64_t> seed;
  std::optional<double> shift;
  std::optional<std::size_t> source_labeled, source_unlabeled, target_unlabeled, target_test;
  std::optional<std::size_t> embedding_dim;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SyntheticSpec spec = a.config.empty() ? SyntheticSpec{} : load_synthetic_spec(a.config);
  if (a.seed) spec.seed = *a.seed;
  if (a.shift) spec.shift = *a.shift;
  if (a.source_labeled) spec.source_labeled = *a.source_labeled;
  if (a.source_unlabeled) spec.source_unlabeled = *a.source_unlabeled;
  if (a.target_unlabeled) spec.target_unlabeled = *a.target_unlabeled;
  if (a.target_test) spec.target_test = *a.target_test;
  if (a.embedding_dim) spec.embedding_dim = *a.embedding_dim;
  spec.validate();
  const SyntheticCorpora corpora = generate_synthetic(spec);
  write_synthetic(corpora, a.out);
  write_text(fs::path(a.out) / "synth.txt", format_synthetic_spec(spec));
  out << "wrote " << corpora.source_labeled.size() << " labeled source, "
      << corpora.source_unlabeled.size() << " unlabeled source, "
      << corpora.target_unlabeled.size() << " unlabeled target, " << corpora.target_test.size()
      << " target test documents to " << a.out << "\n";
  return kOk;
}

}  // namespace

std::vector<GradCheckLine> run_gradcheck(const GradCheckOptions& o) {
  Rng rng = Rng::substream(o.seed, "gradcheck");
  const ModelShape shape{o.vocab, o.embed_dim, 3, o.hidden, o.classes};
  Tensor embedding({o.vocab, o.embed_dim});
  for (std::size_t r = 1; r < o.vocab; ++r) {
    for (double& v : embedding.row(r)) v = rng.uniform(-0.5, 0.5);
  }
  Rng init_rng = Rng::substream(o.seed, "init");
  ModelParams params = init_params(shape, std::move(embedding), init_rng);
  for (double& v : params.out_bias.values()) v = rng.uniform(-0.1, 0.1);

  const ToyBatch toy = draw_toy_batch(params, o.documents, o.vocab, rng);
  const auto& source = toy.source;
  const auto& target = toy.target;
  std::vector<int> labels;
  for (std::size_t i = 0; i < o.documents; ++i) {
    labels.push_back(static_cast<int>(rng.below(o.classes)));
  }
  std::vector<std::vector<std::int32_t>> union_docs;
  for (std::size_t i = 0; i < o.documents; ++i) {
    union_docs.push_back(i % 2 == 0 ? source[i] : target[i]);
  }
  Tensor z_tilde({o.documents, o.classes});
  for (std::size_t i = 0; i < o.documents; ++i) z_tilde.at(i, rng.below(o.classes)) = 1.0;

  TrainConfig config;
  config.dropout_rate = 0.0;
  const double w_t = rampup_weight(15, 30, config.lambda3);

  auto bound = [&](std::span<const Var> v) {
    return BoundParams{v[0], v[1], v[2], v[3], v[4], shape.window};
  };
  auto features = [&](Tape& t, const BoundParams& b,
                      const std::vector<std::vector<std::int32_t>>& docs) {
    const Var xi = encode_batch(t, b, docs);
    return o.corrupt_gradient ? faulty_identity(t, xi) : xi;
  };
  auto logits = [&](Tape& t, const BoundParams& b,
                    const std::vector<std::vector<std::int32_t>>& docs) {
    return classify_logits(t, b, features(t, b, docs));
  };

  double sigma = 1.0;
  {
    Tape t;
    const BoundParams b = bind(t, params, false);
    sigma = median_heuristic_sigma(t.value(encode_batch(t, b, source)),
                                   t.value(encode_batch(t, b, target)));
  }

  Tensor labels_one_hot({o.documents, o.classes});
  for (std::size_t i = 0; i < o.documents; ++i) labels_one_hot.at(i, labels[i]) = 1.0;

  const std::vector<std::pair<std::string, ScalarFn>> components = {
      {"L",
       [&](Tape& t, std::span<const Var> v) {
         return ops::softmax_cross_entropy(t, logits(t, bound(v), source), labels_one_hot);
       }},
      {"J",
       [&](Tape& t, std::span<const Var> v) {
         const BoundParams b = bound(v);
         return ops::feature_adaptation(t, features(t, b, source), features(t, b, target));
       }},
      {"Gamma",
       [&](Tape& t, std::span<const Var> v) {
         return ops::softmax_entropy(t, logits(t, bound(v), target));
       }},
      {"Omega",
       [&](Tape& t, std::span<const Var> v) {
         return ops::bootstrap_loss(t, logits(t, bound(v), union_docs), z_tilde);
       }},
      {"MMD",
       [&](Tape& t, std::span<const Var> v) {
         const BoundParams b = bound(v);
         return ops::mmd_rbf(t, features(t, b, source), features(t, b, target), sigma);
       }},
      {"total",
       [&](Tape& t, std::span<const Var> v) {
         const BoundParams b = bound(v);
         Rng unused(0);
         if (!o.corrupt_gradient) {
           return build_step_loss(t, b, config, source, labels, target, union_docs, z_tilde, w_t,
                                  false, unused)
               .total;
         }
         const Var L = ops::softmax_cross_entropy(t, logits(t, b, source), labels_one_hot);
         const Var J = ops::feature_adaptation(t, features(t, b, source), features(t, b, target));
         const Var Gamma = ops::softmax_entropy(t, logits(t, b, target));
         const Var Omega = ops::bootstrap_loss(t, logits(t, b, union_docs), z_tilde);
         const Var terms[] = {L, J, Gamma, Omega};
         const double weights[] = {1.0, config.lambda1, config.lambda2, w_t};
         return ops::linear_combination(t, terms, weights);
       }},
  };

  std::vector<Tensor> initial;
  for (const Tensor* p : params.tensors()) initial.push_back(*p);
  std::vector<GradCheckLine> lines;
  for (const auto& [name, fn] : components) {
    const GradCheckReport r = grad_check(fn, initial, o.step, o.tolerance);
    static const char* kParamNames[] = {"E", "W", "b", "F_w", "F_b"};
    lines.push_back(GradCheckLine{name, r.max_relative_error, r.coordinates, r.passed(),
                                  kParamNames[r.worst_param], r.worst_index, r.analytic_at_worst,
                                  r.numeric_at_worst});
  }
  return lines;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Domain-adaptive semi-supervised text classification"};
  app.require_subcommand(1);

  TrainArgs train_args;
  CLI::App* train = app.add_subcommand("train", "Train a model and write checkpoint, history and report");
  train->add_option("--config", train_args.config, "Key-value config file");
  train->add_option("--out", train_args.out, "Output directory")->required();
  train->add_option("--seed", train_args.seed, "Override the config seed");
  train->add_option("--source", train_args.source, "Labeled source corpus (JSON lines)")->required();
  train->add_option("--target", train_args.target, "Unlabeled target corpus")->required();
  train->add_option("--source-unlabeled", train_args.source_unlabeled, "Unlabeled source corpus");
  train->add_option("--test", train_args.test, "Labeled target test corpus");
  train->add_option("--embeddings", train_args.embeddings, "Pretrained embeddings (text format)");
  train->add_option("--runs", train_args.runs, "Independent runs with seeds seed, seed+1, ...");

  EvalArgs eval_args;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a labeled corpus");
  evaluate->add_option("--config", eval_args.config, "Config file (corpus format)");
  evaluate->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  evaluate->add_option("--vocab", eval_args.vocab, "Vocabulary (default: next to checkpoint)");
  evaluate->add_option("--test", eval_args.test, "Labeled corpus")->required();
  evaluate->add_option("--out", eval_args.out, "Directory for eval.json / eval.txt");
  evaluate->add_flag("--json", eval_args.json_only, "Print JSON instead of text");
  std::optional<std::uint64_t> unused_seed;
  evaluate->add_option("--seed", unused_seed, "Accepted for interface symmetry");

  FilterArgs filter_args;
  CLI::App* filters = app.add_subcommand("analyze-filters", "Rank filters and their top trigrams");
  filters->add_option("--config", filter_args.config, "Config file (corpus format)");
  filters->add_option("--checkpoint", filter_args.checkpoint, "Checkpoint file")->required();
  filters->add_option("--vocab", filter_args.vocab, "Vocabulary (default: next to checkpoint)");
  filters->add_option("--source", filter_args.source, "Source-domain corpus (repeatable)");
  filters->add_option("--target", filter_args.target, "Target-domain corpus (repeatable)");
  filters->add_option("--k-filters", filter_args.k_filters, "Filters per label");
  filters->add_option("--k-trigrams", filter_args.k_trigrams, "Trigrams per filter");
  filters->add_option("--out", filter_args.out, "Directory for filters.txt / filters.json");
  filters->add_option("--seed", unused_seed, "Accepted for interface symmetry");

  GradCheckOptions gc;
  std::string gc_config, gc_out;
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of every loss gradient");
  gradcheck->add_option("--config", gc_config, "Accepted for interface symmetry");
  gradcheck->add_option("--out", gc_out, "Accepted for interface symmetry");
  gradcheck->add_option("--seed", gc.seed, "Toy batch seed");
  gradcheck->add_option("--step", gc.step, "Finite-difference step");
  gradcheck->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  gradcheck->add_flag("--corrupt-gradient", gc.corrupt_gradient, "Negative control");

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic two-domain corpus");
  synth->add_option("--config", synth_args.config, "Key-value synthetic spec file");
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  synth->add_option("--seed", synth_args.seed, "Generator seed");
  synth->add_option("--shift", synth_args.shift, "Domain-shift strength in [0, 1]");
  synth->add_option("--source-labeled", synth_args.source_labeled, "Labeled source documents");
  synth->add_option("--source-unlabeled", synth_args.source_unlabeled, "Unlabeled source documents");
  synth->add_option("--target-unlabeled", synth_args.target_unlabeled, "Unlabeled target documents");
  synth->add_option("--target-test", synth_args.target_test, "Target test documents");
  synth->add_option("--embedding-dim", synth_args.embedding_dim,
                    "Also write class-structured word vectors of this width (0: none)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*train) return cmd_train(train_args, out, err);
    if (*evaluate) return cmd_evaluate(eval_args, out);
    if (*filters) return cmd_analyze_filters(filter_args, out);
    if (*gradcheck) return cmd_gradcheck(gc, out);
    if (*synth) return cmd_synth(synth_args, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kUsageError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalFailure;
  } catch (const std::invalid_argument& e) {
    err << "invalid argument: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsageError;
}

}  // namespace das::cli
