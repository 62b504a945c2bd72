#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "das/corpus.hpp"
#include "das/losses.hpp"
#include "das/model.hpp"

namespace das {

enum class Variant { kNaiveNN, kFANN, kDasEM, kDasSE, kDAS, kMmdBaseline };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

/// Training hyperparameters. Defaults are the small-scale settings: λ1 = 200,
/// λ2 = 1, λ3 = 3, α = 0.5, RMSProp lr 5e-4, 30 epochs, batch 50, window 3,
/// 300 hidden units, dropout 0.5 on ξ, max-norm 3.
struct TrainConfig {
  Variant variant = Variant::kDAS;
  double lambda1 = 200.0;
  double lambda2 = 1.0;
  double lambda3 = 3.0;
  double alpha = 0.5;
  double learning_rate = 0.0005;
  int epochs = 30;
  std::size_t batch_size = 50;
  std::uint64_t seed = 1;
  std::size_t window = 3;
  std::size_t hidden = 300;
  double dropout_rate = 0.5;
  double max_norm = 3.0;
  std::size_t vocab_size = 10000;
  std::size_t embedding_dim = 300;
  std::size_t num_classes = 3;
  DistanceLoss distance_loss = DistanceLoss::kSymmetricKlMeans;

  double rmsprop_rho = 0.9;
  double rmsprop_eps = 1e-8;
  bool balance_source = true;
  /// Ω is skipped during epoch 1, whose targets come from the all-zero Z.
  bool skip_first_epoch_bootstrap = true;
  std::size_t dev_size = 1000;
  std::size_t max_tokens = kDefaultMaxTokens;
  CorpusFormat corpus_format = CorpusFormat::kJsonlLabel;
  RatingScheme rating_scheme = RatingScheme::kAmazon5;
  /// When false the history's `seconds` column is written as 0 so repeated
  /// runs produce identical files.
  bool log_wall_time = false;

  /// λ values after the variant forces its components off.
  LossWeights effective_weights() const;
  /// MMD-baseline always uses the RBF distance.
  DistanceLoss effective_distance() const;
  ModelShape model_shape(std::size_t vocab) const;

  /// Throws ConfigError on out-of-range values.
  void validate() const;

  bool operator==(const TrainConfig&) const = default;
};

/// Flat `key = value` lines; '#' starts a comment. Unknown keys are errors.
TrainConfig parse_config(std::string_view text);
TrainConfig load_config(const std::filesystem::path& path);
/// Every field, one `key = value` line each, in declaration order.
std::string format_config(const TrainConfig& config);

/// Same content as format_config, keyed for JSON echo.
std::map<std::string, std::string> config_entries(const TrainConfig& config);

}  // namespace das
