#pragma once

#include <span>
#include <string>

#include "das/tape.hpp"
#include "das/tensor.hpp"

namespace das {

/// Lower bound applied to probabilities before taking logs.
inline constexpr double kProbabilityFloor = 1e-12;
/// Smoothing added before L1-normalizing mean feature vectors.
inline constexpr double kFeatureSmoothing = 1e-6;

struct LossWeights {
  double lambda1 = 0.0;  // feature adaptation
  double lambda2 = 0.0;  // entropy minimization
  double lambda3 = 0.0;  // bootstrapping ceiling
};

/// Per-iteration (or per-epoch mean) objective components.
struct LossBreakdown {
  double L = 0.0;
  double J = 0.0;
  double Gamma = 0.0;
  double Omega = 0.0;
  double w_t = 0.0;
  double total = 0.0;
};

enum class DistanceLoss { kSymmetricKlMeans, kMmdRbf };

std::string to_string(DistanceLoss kind);
DistanceLoss parse_distance_loss(const std::string& name);

// ---- Values on probability matrices (one row per document) ----

/// Mean cross-entropy −(1/B)·Σ y·log ŷ with ŷ clamped to [1e-12, 1].
double source_cross_entropy(const Tensor& y_true, const Tensor& y_pred);

/// KL(P‖Q) + KL(Q‖P), natural log. Both inputs must be strictly positive.
double symmetric_kl(const Tensor& p, const Tensor& q);

/// Symmetric KL between the L1-normalized batch means of two feature batches.
double feature_adaptation_loss(const Tensor& xi_source, const Tensor& xi_target,
                               double eps = kFeatureSmoothing);

/// Mean prediction entropy −(1/n)·Σ ŷ·log ŷ.
double entropy_min_loss(const Tensor& y_pred);

/// Cross-entropy of predictions against one-hot ensemble targets.
double bootstrap_loss(const Tensor& z_tilde, const Tensor& y_pred);

/// Biased MMD² estimate with k(x, y) = exp(−‖x − y‖² / 2σ²).
double mmd_rbf(const Tensor& xi_source, const Tensor& xi_target, double sigma);

/// Median pairwise Euclidean distance over the joint batch; 1 when degenerate.
double median_heuristic_sigma(const Tensor& xi_source, const Tensor& xi_target);

/// exp(−5·(1 − t/t_max)²)·λ3 for t in [1, t_max].
double rampup_weight(int t, int t_max, double lambda3);

/// Weighted sum L + λ1·J + λ2·Γ + w(t)·Ω; rejects non-finite components.
LossBreakdown total_loss(double L, double J, double Gamma, double Omega,
                         const LossWeights& weights, double w_t);

// ---- Differentiable versions recorded on a tape ----

namespace ops {

/// Mean cross-entropy between softmax(logits) and constant target rows,
/// fused through log-sum-exp.
Var softmax_cross_entropy(Tape& tape, Var logits, const Tensor& targets);

/// Ω: like softmax_cross_entropy, but every target row must be one-hot.
/// Targets are data, so no gradient flows to them.
Var bootstrap_loss(Tape& tape, Var logits, const Tensor& z_tilde);

/// Γ: mean entropy of softmax(logits).
Var softmax_entropy(Tape& tape, Var logits);

Var symmetric_kl(Tape& tape, Var p, Var q);

/// J: symmetric KL between L1-normalized row means of the two batches.
Var feature_adaptation(Tape& tape, Var xi_source, Var xi_target, double eps = kFeatureSmoothing);

Var mmd_rbf(Tape& tape, Var xi_source, Var xi_target, double sigma);

/// Domain distance selected by `kind`. For MMD the bandwidth is the median
/// heuristic on the current batch, held constant for differentiation.
Var distance_loss(Tape& tape, DistanceLoss kind, Var xi_source, Var xi_target);

}  // namespace ops

}  // namespace das
