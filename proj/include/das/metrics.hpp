#pragma once

#include <span>
#include <vector>

namespace das {

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t support = 0;  // gold count
};

struct EvalReport {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<ClassScores> per_class;
  std::vector<std::vector<std::size_t>> confusion;  // [gold][predicted]
  std::size_t n_examples = 0;
};

double accuracy(std::span<const int> preds, std::span<const int> golds);

/// Mean per-class F1 over classes that occur in `golds`; 0/0 precision or
/// recall counts as 0.
double macro_f1(std::span<const int> preds, std::span<const int> golds, int num_classes);

EvalReport evaluate(std::span<const int> preds, std::span<const int> golds, int num_classes);

struct TTestResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 0.5;
};

/// One-tailed Welch test of mean(a) > mean(b). Each sample needs ≥ 2 values.
/// With zero variance in both samples the result is 0.5 for equal means and
/// 0 or 1 otherwise.
TTestResult ttest_one_tailed(std::span<const double> a, std::span<const double> b);

}  // namespace das
