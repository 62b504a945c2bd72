#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "das/config.hpp"
#include "das/ensemble.hpp"
#include "das/losses.hpp"
#include "das/model.hpp"
#include "das/tensor.hpp"

namespace das {

/// RMSProp accumulators, one per parameter tensor.
struct OptimizerState {
  std::vector<Tensor> mean_square;
  double rho = 0.9;
  double eps = 1e-8;

  static OptimizerState for_params(const ModelParams& params, double rho, double eps);
};

/// s ← ρ·s + (1−ρ)·g²;  θ ← θ − lr·g / (√s + eps).
void rmsprop_step(Tensor& param, const Tensor& grad, Tensor& mean_square, double lr, double rho,
                  double eps);

struct EpochMetrics {
  int epoch = 0;
  LossBreakdown loss;  // means over the epoch's steps
  double dev_error = 0.0;
  double seconds = 0.0;
};

struct History {
  std::vector<EpochMetrics> epochs;
  int best_epoch = 0;  // 1-based

  /// epoch,L,J,Gamma,Omega,w_t,total,dev_error,seconds
  std::string to_csv() const;
};

/// Index of the minimum dev error (1-based); ties go to the earliest epoch.
int select_model(const History& history);

/// Padded index sequences for every training pool.
struct TrainingData {
  std::vector<std::vector<std::int32_t>> source;
  std::vector<int> source_labels;
  std::vector<std::vector<std::int32_t>> source_unlabeled;
  std::vector<std::vector<std::int32_t>> target;
  std::vector<std::vector<std::int32_t>> dev;
  std::vector<int> dev_labels;

  /// Union of all training documents, indexed like the ensemble rows:
  /// source, then unlabeled source, then target.
  std::vector<std::vector<std::int32_t>> all_documents() const;
};

struct TrainResult {
  ModelParams best;
  ModelParams last;
  History history;
};

/// Objective components of one training step, recorded on `tape`.
struct StepLoss {
  Var total;
  LossBreakdown parts;
};

/// Builds the joint loss for one minibatch triple. Components whose weight is
/// zero are not computed and report 0.
StepLoss build_step_loss(Tape& tape, const BoundParams& params, const TrainConfig& config,
                         std::span<const std::vector<std::int32_t>> source_docs,
                         std::span<const int> source_labels,
                         std::span<const std::vector<std::int32_t>> target_docs,
                         std::span<const std::vector<std::int32_t>> union_docs,
                         const Tensor& union_targets, double bootstrap_weight, bool training,
                         Rng& dropout_rng);

/// Called after each epoch with its metrics and the parameters at that point.
using EpochCallback = std::function<void(const EpochMetrics&, const ModelParams& current)>;

/// Runs the full training loop from `init` and returns the parameters of the
/// epoch with minimum dev error.
TrainResult train(const TrainConfig& config, const TrainingData& data, ModelParams init,
                  const EpochCallback& on_epoch = nullptr);

/// Fraction of misclassified documents in eval mode.
double classification_error(const ModelParams& params,
                            std::span<const std::vector<std::int32_t>> padded_docs,
                            std::span<const int> labels);

}  // namespace das
