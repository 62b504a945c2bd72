#include "das/metrics.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/students_t.hpp>

namespace das {

namespace {

void check_pairs(std::span<const int> preds, std::span<const int> golds) {
  if (preds.size() != golds.size()) {
    throw std::invalid_argument("prediction/gold length mismatch: " +
                                std::to_string(preds.size()) + " vs " +
                                std::to_string(golds.size()));
  }
  if (preds.empty()) throw std::invalid_argument("no examples to score");
}

double mean(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs, double m) {
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return ss / static_cast<double>(xs.size() - 1);
}

}  // namespace

double accuracy(std::span<const int> preds, std::span<const int> golds) {
  check_pairs(preds, golds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

EvalReport evaluate(std::span<const int> preds, std::span<const int> golds, int num_classes) {
  check_pairs(preds, golds);
  const auto c = static_cast<std::size_t>(num_classes);
  EvalReport r;
  r.n_examples = preds.size();
  r.confusion.assign(c, std::vector<std::size_t>(c, 0));
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] < 0 || preds[i] >= num_classes || golds[i] < 0 || golds[i] >= num_classes) {
      throw std::invalid_argument("label outside [0, " + std::to_string(num_classes) + ")");
    }
    ++r.confusion[static_cast<std::size_t>(golds[i])][static_cast<std::size_t>(preds[i])];
  }
  std::size_t trace = 0, present = 0;
  double f1_sum = 0.0;
  r.per_class.resize(c);
  for (std::size_t k = 0; k < c; ++k) {
    trace += r.confusion[k][k];
    std::size_t predicted = 0, gold = 0;
    for (std::size_t j = 0; j < c; ++j) {
      predicted += r.confusion[j][k];
      gold += r.confusion[k][j];
    }
    ClassScores& s = r.per_class[k];
    s.support = gold;
    const double tp = static_cast<double>(r.confusion[k][k]);
    s.precision = predicted ? tp / static_cast<double>(predicted) : 0.0;
    s.recall = gold ? tp / static_cast<double>(gold) : 0.0;
    s.f1 = s.precision + s.recall > 0.0
               ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    if (gold) {
      f1_sum += s.f1;
      ++present;
    }
  }
  r.accuracy = static_cast<double>(trace) / static_cast<double>(r.n_examples);
  r.macro_f1 = f1_sum / static_cast<double>(present);
  return r;
}

double macro_f1(std::span<const int> preds, std::span<const int> golds, int num_classes) {
  return evaluate(preds, golds, num_classes).macro_f1;
}

TTestResult ttest_one_tailed(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw std::invalid_argument("t-test needs at least two runs per sample");
  }
  const double ma = mean(a), mb = mean(b);
  const double va = sample_variance(a, ma) / static_cast<double>(a.size());
  const double vb = sample_variance(b, mb) / static_cast<double>(b.size());
  TTestResult r;
  const double se2 = va + vb;
  if (se2 == 0.0) {
    r.t = ma == mb ? 0.0 : (ma > mb ? INFINITY : -INFINITY);
    r.df = static_cast<double>(a.size() + b.size() - 2);
    r.p_value = ma == mb ? 0.5 : (ma > mb ? 0.0 : 1.0);
    return r;
  }
  r.t = (ma - mb) / std::sqrt(se2);
  // Welch-Satterthwaite
  r.df = se2 * se2 /
         (va * va / static_cast<double>(a.size() - 1) + vb * vb / static_cast<double>(b.size() - 1));
  const boost::math::students_t dist(r.df);
  r.p_value = boost::math::cdf(boost::math::complement(dist, r.t));
  return r;
}

}  // namespace das
