#include "das/trainer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "das/batches.hpp"
#include "das/error.hpp"
#include "das/ops.hpp"

namespace das {

namespace {

constexpr double kDivergenceLimit = 1e6;

std::vector<std::vector<std::int32_t>> pick(const std::vector<std::vector<std::int32_t>>& pool,
                                            std::span<const std::size_t> rows) {
  std::vector<std::vector<std::int32_t>> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(pool.at(r));
  return out;
}

Tensor one_hot(std::span<const int> labels, std::size_t classes) {
  Tensor t({labels.size(), classes});
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " outside [0, " +
                      std::to_string(classes) + ")");
    }
    t.at(i, static_cast<std::size_t>(labels[i])) = 1.0;
  }
  return t;
}

std::string csv_number(double v) {
  std::ostringstream out;
  out.precision(17);
  out << v;
  return out.str();
}

}  // namespace

OptimizerState OptimizerState::for_params(const ModelParams& params, double rho, double eps) {
  OptimizerState s;
  s.rho = rho;
  s.eps = eps;
  for (const Tensor* t : params.tensors()) s.mean_square.emplace_back(t->shape(), 0.0);
  return s;
}

void rmsprop_step(Tensor& param, const Tensor& grad, Tensor& mean_square, double lr, double rho,
                  double eps) {
  if (!param.same_shape(grad) || !param.same_shape(mean_square)) {
    throw ShapeError("rmsprop_step: parameter " + shape_string(param.shape()) + " vs gradient " +
                     shape_string(grad.shape()));
  }
  if (!grad.all_finite()) throw NumericalError("rmsprop_step: non-finite gradient");
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    mean_square[i] = rho * mean_square[i] + (1.0 - rho) * g * g;
    param[i] -= lr * g / (std::sqrt(mean_square[i]) + eps);
  }
}

std::string History::to_csv() const {
  std::string out = "epoch,L,J,Gamma,Omega,w_t,total,dev_error,seconds\n";
  for (const EpochMetrics& m : epochs) {
    out += std::to_string(m.epoch);
    for (double v : {m.loss.L, m.loss.J, m.loss.Gamma, m.loss.Omega, m.loss.w_t, m.loss.total,
                     m.dev_error, m.seconds}) {
      out += ',';
      out += csv_number(v);
    }
    out += '\n';
  }
  return out;
}

int select_model(const History& history) {
  if (history.epochs.empty()) throw std::invalid_argument("select_model: empty history");
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.epochs.size(); ++i) {
    if (history.epochs[i].dev_error < history.epochs[best].dev_error) best = i;
  }
  return history.epochs[best].epoch;
}

std::vector<std::vector<std::int32_t>> TrainingData::all_documents() const {
  std::vector<std::vector<std::int32_t>> all;
  all.reserve(source.size() + source_unlabeled.size() + target.size());
  all.insert(all.end(), source.begin(), source.end());
  all.insert(all.end(), source_unlabeled.begin(), source_unlabeled.end());
  all.insert(all.end(), target.begin(), target.end());
  return all;
}

StepLoss build_step_loss(Tape& tape, const BoundParams& params, const TrainConfig& config,
                         std::span<const std::vector<std::int32_t>> source_docs,
                         std::span<const int> source_labels,
                         std::span<const std::vector<std::int32_t>> target_docs,
                         std::span<const std::vector<std::int32_t>> union_docs,
                         const Tensor& union_targets, double bootstrap_weight, bool training,
                         Rng& dropout_rng) {
  const LossWeights weights = config.effective_weights();
  const std::size_t classes = tape.value(params.out_bias).size();
  const double rate = config.dropout_rate;

  std::vector<Var> terms;
  std::vector<double> coeffs;
  StepLoss step;

  const Var xi_s = encode_batch(tape, params, source_docs);
  const Var logits_s =
      classify_logits(tape, params, ops::dropout(tape, xi_s, rate, training, dropout_rng));
  const Var L = ops::softmax_cross_entropy(tape, logits_s, one_hot(source_labels, classes));
  terms.push_back(L);
  coeffs.push_back(1.0);
  step.parts.L = tape.value(L).item();

  if (weights.lambda1 > 0.0 || weights.lambda2 > 0.0) {
    const Var xi_t = encode_batch(tape, params, target_docs);
    if (weights.lambda1 > 0.0) {
      const Var J = ops::distance_loss(tape, config.effective_distance(), xi_s, xi_t);
      terms.push_back(J);
      coeffs.push_back(weights.lambda1);
      step.parts.J = tape.value(J).item();
    }
    if (weights.lambda2 > 0.0) {
      const Var logits_t =
          classify_logits(tape, params, ops::dropout(tape, xi_t, rate, training, dropout_rng));
      const Var Gamma = ops::softmax_entropy(tape, logits_t);
      terms.push_back(Gamma);
      coeffs.push_back(weights.lambda2);
      step.parts.Gamma = tape.value(Gamma).item();
    }
  }

  if (bootstrap_weight > 0.0) {
    const Var xi_u = encode_batch(tape, params, union_docs);
    const Var logits_u =
        classify_logits(tape, params, ops::dropout(tape, xi_u, rate, training, dropout_rng));
    const Var Omega = ops::bootstrap_loss(tape, logits_u, union_targets);
    terms.push_back(Omega);
    coeffs.push_back(bootstrap_weight);
    step.parts.Omega = tape.value(Omega).item();
  }

  step.total = ops::linear_combination(tape, terms, coeffs);
  step.parts.w_t = bootstrap_weight;
  step.parts.total = tape.value(step.total).item();
  return step;
}

double classification_error(const ModelParams& params,
                            std::span<const std::vector<std::int32_t>> padded_docs,
                            std::span<const int> labels) {
  if (padded_docs.empty()) return 0.0;
  const Tensor probs = predict_proba(params, padded_docs);
  const Tensor targets = to_targets(probs);
  std::size_t wrong = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (targets.at(i, static_cast<std::size_t>(labels[i])) != 1.0) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(labels.size());
}

TrainResult train(const TrainConfig& config, const TrainingData& data, ModelParams init,
                  const EpochCallback& on_epoch) {
  config.validate();
  if (data.source.size() != data.source_labels.size() ||
      data.dev.size() != data.dev_labels.size()) {
    throw DataError("train: documents and labels differ in count");
  }
  if (data.source.empty() || data.target.empty()) {
    throw DataError("train: need labeled source and unlabeled target documents");
  }
  const LossWeights weights = config.effective_weights();
  const std::size_t classes = init.out_bias.size();
  const std::vector<std::vector<std::int32_t>> all = data.all_documents();

  BatchStream stream(data.source_labels, data.target.size(), all.size(), config.batch_size,
                     config.balance_source, static_cast<int>(classes),
                     Rng::substream(config.seed, "shuffle"));
  Rng dropout_rng = Rng::substream(config.seed, "dropout");
  EnsembleState ensemble(all.size(), classes, config.alpha);
  ModelParams params = std::move(init);
  OptimizerState opt =
      OptimizerState::for_params(params, config.rmsprop_rho, config.rmsprop_eps);

  TrainResult result;
  double best_error = 0.0;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    const double w_t = rampup_weight(epoch, config.epochs, weights.lambda3);
    const bool bootstrap = weights.lambda3 > 0.0 &&
                           !(config.skip_first_epoch_bootstrap && epoch == 1);

    LossBreakdown sums;
    const std::vector<BatchTriple> batches = stream.next_epoch();
    for (std::size_t step = 0; step < batches.size(); ++step) {
      const BatchTriple& triple = batches[step];
      std::vector<int> labels;
      labels.reserve(triple.source.size());
      for (std::size_t r : triple.source) labels.push_back(data.source_labels[r]);
      const auto source_docs = pick(data.source, triple.source);
      const auto target_docs = pick(data.target, triple.target);
      std::vector<std::vector<std::int32_t>> union_docs;
      if (bootstrap) union_docs = pick(all, triple.all);
      const Tensor union_targets = bootstrap ? ensemble.targets_for(triple.all) : Tensor();

      Tape tape;
      const BoundParams bound = bind(tape, params);
      const StepLoss loss = build_step_loss(tape, bound, config, source_docs, labels, target_docs,
                                            union_docs, union_targets, bootstrap ? w_t : 0.0,
                                            true, dropout_rng);
      const LossBreakdown& p = loss.parts;
      for (double v : {p.L, p.J, p.Gamma, p.Omega, p.total}) {
        if (!std::isfinite(v) || std::abs(v) > kDivergenceLimit) {
          throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                               ", step " + std::to_string(step + 1) + " (L=" +
                               std::to_string(p.L) + ", J=" + std::to_string(p.J) + ", Gamma=" +
                               std::to_string(p.Gamma) + ", Omega=" + std::to_string(p.Omega) +
                               ")");
        }
      }
      tape.backward(loss.total);

      const std::vector<Var> vars = bound.vars();
      const std::vector<Tensor*> tensors = params.tensors();
      for (std::size_t k = 0; k < vars.size(); ++k) {
        Tensor grad = tape.grad(vars[k]);
        if (k == 0) {
          for (double& g : grad.row(0)) g = 0.0;  // padding row stays zero
        }
        if (!grad.all_finite()) {
          throw NumericalError("non-finite gradient at epoch " + std::to_string(epoch) +
                               ", step " + std::to_string(step + 1));
        }
        rmsprop_step(*tensors[k], grad, opt.mean_square[k], config.learning_rate, opt.rho,
                     opt.eps);
      }
      apply_max_norm(params, config.max_norm);

      sums.L += p.L;
      sums.J += p.J;
      sums.Gamma += p.Gamma;
      sums.Omega += p.Omega;
    }

    const double steps = static_cast<double>(std::max<std::size_t>(batches.size(), 1));
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = total_loss(sums.L / steps, sums.J / steps, sums.Gamma / steps, sums.Omega / steps,
                        weights, w_t);
    m.dev_error = classification_error(params, data.dev, data.dev_labels);
    if (weights.lambda3 > 0.0) ensemble.update(predict_all(params, all));
    const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
    m.seconds = config.log_wall_time ? elapsed.count() : 0.0;

    if (epoch == 1 || m.dev_error < best_error) {
      best_error = m.dev_error;
      result.best = params;
    }
    result.history.epochs.push_back(m);
    if (on_epoch) on_epoch(m, params);
  }
  result.history.best_epoch = select_model(result.history);
  result.last = std::move(params);
  return result;
}

}  // namespace das
